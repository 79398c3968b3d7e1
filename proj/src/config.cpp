#include "orbitpde/config.hpp"

#include <fstream>
#include <set>
#include <sstream>

#include "json.hpp"
#include "orbitpde/errors.hpp"
#include "orbitpde/expression.hpp"

namespace orbitpde {

namespace {

using nlohmann::json;

[[noreturn]] void bad(const std::string& where, const std::string& msg) { throw ConfigError(where + ": " + msg); }

void allow_keys(const json& j, const std::string& where, std::initializer_list<const char*> keys) {
  if (!j.is_object()) bad(where, "expected an object");
  std::set<std::string> ok(keys.begin(), keys.end());
  for (auto it = j.begin(); it != j.end(); ++it)
    if (!ok.count(it.key())) bad(where, "unknown key '" + it.key() + "'");
}

double number(const json& j, const std::string& where, const char* key) {
  if (!j.contains(key)) bad(where, std::string("missing '") + key + "'");
  if (!j[key].is_number()) bad(where, std::string("'") + key + "' must be a number");
  return j[key].get<double>();
}

double number_or(const json& j, const std::string& where, const char* key, double fallback) {
  return j.contains(key) ? number(j, where, key) : fallback;
}

int integer_or(const json& j, const std::string& where, const char* key, int fallback) {
  if (!j.contains(key)) return fallback;
  if (!j[key].is_number_integer()) bad(where, std::string("'") + key + "' must be an integer");
  return j[key].get<int>();
}

std::string string_of(const json& j, const std::string& where, const char* key) {
  if (!j.contains(key)) bad(where, std::string("missing '") + key + "'");
  if (!j[key].is_string()) bad(where, std::string("'") + key + "' must be a string");
  return j[key].get<std::string>();
}

bool bool_or(const json& j, const std::string& where, const char* key, bool fallback) {
  if (!j.contains(key)) return fallback;
  if (!j[key].is_boolean()) bad(where, std::string("'") + key + "' must be true or false");
  return j[key].get<bool>();
}

FluxProfile parse_flux(const json& j) {
  allow_keys(j, "flux", {"builtin", "p", "table"});
  if (j.contains("table")) {
    if (j.contains("builtin")) bad("flux", "give either 'builtin' or 'table'");
    const auto& t = j["table"];
    if (!t.is_array() || t.size() < 2) bad("flux", "'table' must list at least two [s, a(s)] pairs");
    std::vector<std::pair<double, double>> rows;
    for (const auto& row : t) {
      if (!row.is_array() || row.size() != 2 || !row[0].is_number() || !row[1].is_number())
        bad("flux", "table rows must be [s, a(s)] number pairs");
      rows.emplace_back(row[0].get<double>(), row[1].get<double>());
    }
    return FluxProfile::tabulated(std::move(rows), number_or(j, "flux", "p", 2.0));
  }
  const auto kind = string_of(j, "flux", "builtin");
  if (kind == "minimal_surface") {
    if (j.contains("p")) bad("flux", "minimal_surface takes no 'p'");
    return FluxProfile::minimal_surface();
  }
  if (kind == "p_laplace") return FluxProfile::p_laplace(number(j, "flux", "p"));
  bad("flux", "unknown builtin '" + kind + "'");
}

EdgeTag parse_tag(const json& j, const std::string& where, const char* key) {
  if (!j.contains(key)) return EdgeTag::Boundary;
  const auto s = string_of(j, where, key);
  if (s == "boundary") return EdgeTag::Boundary;
  if (s == "periodic") return EdgeTag::Periodic;
  if (s == "axis") return EdgeTag::Axis;
  bad(where, "edge tag must be boundary, periodic or axis");
}

CustomChartTable parse_custom_table(const json& j) {
  const std::string where = "geometry.custom";
  allow_keys(j, where, {"axes", "nodes", "metric", "drift", "weight"});
  CustomChartTable t;
  if (!j.contains("axes") || !j["axes"].is_array() || j["axes"].empty() || j["axes"].size() > 2)
    bad(where, "'axes' must list one or two axes");
  for (const auto& a : j["axes"]) {
    allow_keys(a, where + ".axes", {"name", "lo", "hi", "lo_tag", "hi_tag"});
    t.axes.push_back({string_of(a, where, "name"), number(a, where, "lo"), number(a, where, "hi"),
                      parse_tag(a, where, "lo_tag"), parse_tag(a, where, "hi_tag")});
  }
  if (!j.contains("nodes") || !j["nodes"].is_array()) bad(where, "missing 'nodes'");
  for (const auto& n : j["nodes"]) {
    if (!n.is_number_integer()) bad(where, "'nodes' must be integers");
    t.nodes.push_back(n.get<int>());
  }
  auto rows = [&](const char* key) {
    std::vector<std::vector<double>> out;
    if (!j.contains(key)) return out;
    if (!j[key].is_array()) bad(where, std::string("'") + key + "' must be an array of rows");
    for (const auto& row : j[key]) {
      std::vector<double> r;
      for (const auto& x : row) {
        if (!x.is_number()) bad(where, std::string("'") + key + "' entries must be numbers");
        r.push_back(x.get<double>());
      }
      out.push_back(std::move(r));
    }
    return out;
  };
  t.metric = rows("metric");
  if (t.metric.empty()) bad(where, "missing 'metric'");
  t.drift = rows("drift");
  if (j.contains("weight")) {
    if (!j["weight"].is_array()) bad(where, "'weight' must be an array");
    for (const auto& x : j["weight"]) {
      if (!x.is_number()) bad(where, "'weight' entries must be numbers");
      t.weight.push_back(x.get<double>());
    }
  }
  return t;
}

void radial_domain(const json& d, const std::string& where, GeometryConfig& g) {
  g.shape = string_of(d, where, "shape");
  if (g.shape == "disk") {
    allow_keys(d, where, {"shape", "radius"});
    g.r_in = 0.0;
    g.r_out = number(d, where, "radius");
  } else if (g.shape == "annulus") {
    allow_keys(d, where, {"shape", "r_in", "r_out"});
    g.r_in = number(d, where, "r_in");
    g.r_out = number(d, where, "r_out");
  } else {
    bad(where, "shape must be disk or annulus");
  }
}

GeometryConfig parse_geometry(const json& j, const std::filesystem::path& base) {
  if (!j.is_object()) bad("geometry", "expected an object");
  GeometryConfig g;
  g.kind = string_of(j, "geometry", "kind");
  try {
    if (g.kind == "rotational") {
      allow_keys(j, "geometry", {"kind", "r_in", "r_out"});
      g.shape = "interval";
      g.r_in = number(j, "geometry", "r_in");
      g.r_out = number(j, "geometry", "r_out");
      g.chart = std::make_shared<const QuotientChart>(rotational_chart(g.r_in, g.r_out));
    } else if (g.kind == "helicoidal") {
      allow_keys(j, "geometry", {"kind", "lambda", "domain"});
      g.lambda = number(j, "geometry", "lambda");
      if (!j.contains("domain")) bad("geometry", "missing 'domain'");
      radial_domain(j["domain"], "geometry.domain", g);
      g.chart = std::make_shared<const QuotientChart>(helicoidal_chart(g.lambda, g.r_in, g.r_out));
    } else if (g.kind == "hyperbolic") {
      allow_keys(j, "geometry", {"kind", "n", "radius"});
      g.shape = "ball";
      g.n = integer_or(j, "geometry", "n", 0);
      g.r_out = number(j, "geometry", "radius");
      g.chart = std::make_shared<const QuotientChart>(hyperbolic_chart(g.n, g.r_out));
    } else if (g.kind == "flat") {
      allow_keys(j, "geometry", {"kind", "domain"});
      if (!j.contains("domain")) bad("geometry", "missing 'domain'");
      const auto& d = j["domain"];
      if (d.is_object() && d.value("shape", "") == "rectangle") {
        allow_keys(d, "geometry.domain", {"shape", "x0", "x1", "y0", "y1"});
        g.shape = "rectangle";
        g.chart = std::make_shared<const QuotientChart>(
            flat_rectangle_chart(number(d, "geometry.domain", "x0"), number(d, "geometry.domain", "x1"),
                                 number(d, "geometry.domain", "y0"), number(d, "geometry.domain", "y1")));
      } else {
        radial_domain(d, "geometry.domain", g);
        g.chart = std::make_shared<const QuotientChart>(flat_polar_chart(g.r_in, g.r_out));
      }
    } else if (g.kind == "custom") {
      allow_keys(j, "geometry", {"kind", "table", "table_file"});
      g.shape = "table";
      json t;
      if (j.contains("table_file")) {
        const auto file = base / string_of(j, "geometry", "table_file");
        std::ifstream in(file);
        if (!in) bad("geometry", "table_file '" + file.string() + "' not found");
        try {
          t = json::parse(in, nullptr, true, true);
        } catch (const json::parse_error& e) {
          bad("geometry", std::string("table_file: ") + e.what());
        }
      } else if (j.contains("table")) {
        t = j["table"];
      } else {
        bad("geometry", "custom geometry needs 'table' or 'table_file'");
      }
      g.chart = std::make_shared<const QuotientChart>(custom_chart(parse_custom_table(t)));
    } else {
      bad("geometry", "unknown kind '" + g.kind + "'");
    }
  } catch (const PreconditionError& e) {
    bad("geometry", e.what());
  }
  return g;
}

void parse_solver(const json& j, SolveSettings& s) {
  allow_keys(j, "solver", {"scheme", "tolerance", "max_iterations", "damping", "grid", "form", "harmonic_start"});
  if (j.contains("scheme")) {
    try {
      s.scheme = scheme_from_string(string_of(j, "solver", "scheme"));
    } catch (const PreconditionError& e) {
      bad("solver", e.what());
    }
  }
  s.tolerance = number_or(j, "solver", "tolerance", s.tolerance);
  if (!(s.tolerance > 0.0)) bad("solver", "tolerance must be positive");
  s.max_iterations = integer_or(j, "solver", "max_iterations", s.max_iterations);
  if (s.max_iterations < 1) bad("solver", "max_iterations must be at least 1");
  s.damping = number_or(j, "solver", "damping", s.damping);
  if (!(s.damping > 0.0 && s.damping <= 1.0)) bad("solver", "damping must lie in (0, 1]");
  s.harmonic_start = bool_or(j, "solver", "harmonic_start", s.harmonic_start);
  if (j.contains("form")) {
    const auto f = string_of(j, "solver", "form");
    if (f == "auto") s.form = Discretization::Auto;
    else if (f == "divergence") s.form = Discretization::Divergence;
    else if (f == "non_divergence") s.form = Discretization::NonDivergence;
    else bad("solver", "form must be auto, divergence or non_divergence");
  }
  if (j.contains("grid")) {
    const auto& g = j["grid"];
    allow_keys(g, "solver.grid", {"n1", "n2"});
    s.n1 = integer_or(g, "solver.grid", "n1", s.n1);
    s.n2 = integer_or(g, "solver.grid", "n2", s.n2);
  }
  for (int n : {s.n1, s.n2})
    if (n < 8 || n > 4096) bad("solver.grid", "grid sizes must lie in [8, 4096]");
}

}  // namespace

DomainSpec ProblemConfig::domain() const {
  if (!geometry) throw ConfigError("config has no geometry block");
  return {geometry->chart, bind_expression(boundary, *geometry->chart), {}};
}

std::filesystem::path ProblemConfig::output(const std::string& suffix) const {
  return output_dir / (name + suffix);
}

ProblemConfig parse_config(const std::string& text, const std::filesystem::path& source) {
  json j;
  try {
    j = json::parse(text, nullptr, true, true);
  } catch (const json::parse_error& e) {
    throw ConfigError(source.string() + ": " + e.what());
  }
  allow_keys(j, "config", {"name", "flux", "geometry", "boundary", "solver", "override_gate", "barrier", "curve",
                           "checks", "output"});
  ProblemConfig c;
  c.source = source;
  const auto base = source.has_parent_path() ? source.parent_path() : std::filesystem::path(".");
  c.name = j.contains("name") ? string_of(j, "config", "name") : source.stem().string();
  if (c.name.empty() || c.name.find('/') != std::string::npos) bad("config", "'name' must be a plain file stem");
  if (j.contains("flux")) c.profile = parse_flux(j["flux"]);
  if (j.contains("geometry")) c.geometry = parse_geometry(j["geometry"], base);
  if (j.contains("boundary")) {
    const auto& b = j["boundary"];
    allow_keys(b, "boundary", {"expression", "exact"});
    c.boundary = string_of(b, "boundary", "expression");
    if (b.contains("exact")) c.exact = string_of(b, "boundary", "exact");
  }
  if (c.geometry) {
    // Fail early on bad expressions.
    bind_expression(c.boundary, *c.geometry->chart);
    if (!c.exact.empty()) bind_expression(c.exact, *c.geometry->chart);
  }
  if (j.contains("solver")) parse_solver(j["solver"], c.settings);
  if (c.geometry && c.geometry->chart->dim == 1) c.settings.n2 = 1;
  c.settings.override_gate = bool_or(j, "config", "override_gate", false);
  if (j.contains("barrier")) {
    const auto& b = j["barrier"];
    allow_keys(b, "barrier", {"c", "nodes", "s_max", "delta", "offset"});
    if (b.contains("c")) {
      if (!b["c"].is_array()) bad("barrier", "'c' must be an array");
      for (const auto& x : b["c"]) {
        if (!x.is_number()) bad("barrier", "'c' entries must be numbers");
        c.barrier.c.push_back(x.get<double>());
      }
    }
    c.barrier.nodes = integer_or(b, "barrier", "nodes", c.barrier.nodes);
    if (c.barrier.nodes < 2) bad("barrier", "'nodes' must be at least 2");
    c.barrier.s_max = number_or(b, "barrier", "s_max", c.barrier.s_max);
    c.barrier.delta = number_or(b, "barrier", "delta", c.barrier.delta);
    c.barrier.offset = number_or(b, "barrier", "offset", c.barrier.offset);
  }
  if (j.contains("curve")) {
    const auto& cv = j["curve"];
    allow_keys(cv, "curve", {"shape", "radius", "a", "b", "samples"});
    CurveConfig cc;
    cc.shape = string_of(cv, "curve", "shape");
    if (cc.shape == "circle") {
      cc.radius = number(cv, "curve", "radius");
      if (!(cc.radius > 0.0)) bad("curve", "radius must be positive");
    } else if (cc.shape == "ellipse") {
      cc.a = number(cv, "curve", "a");
      cc.b = number(cv, "curve", "b");
      if (!(cc.a > 0.0 && cc.b > 0.0)) bad("curve", "semi-axes must be positive");
    } else {
      bad("curve", "shape must be circle or ellipse");
    }
    cc.samples = integer_or(cv, "curve", "samples", cc.samples);
    if (cc.samples < 8) bad("curve", "'samples' must be at least 8");
    c.curve = cc;
  }
  if (j.contains("checks")) {
    const auto& ch = j["checks"];
    allow_keys(ch, "checks", {"comparison_ladder", "field"});
    c.comparison_ladder = bool_or(ch, "checks", "comparison_ladder", true);
    if (ch.contains("field")) c.field = base / string_of(ch, "checks", "field");
  }
  if (j.contains("output")) {
    const auto& o = j["output"];
    allow_keys(o, "output", {"directory"});
    if (o.contains("directory")) c.output_dir = string_of(o, "output", "directory");
  }
  return c;
}

ProblemConfig load_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config '" + path.string() + "'");
  std::stringstream ss;
  ss << in.rdbuf();
  return parse_config(ss.str(), path);
}

}  // namespace orbitpde
