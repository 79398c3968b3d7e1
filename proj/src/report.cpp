#include "orbitpde/report.hpp"

#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>

#include "orbitpde/errors.hpp"

namespace orbitpde {

namespace {

void dump_value(const Json& j, std::ostringstream& os, int indent) {
  const std::string pad(2 * (indent + 1), ' '), close(2 * indent, ' ');
  switch (j.type()) {
    case Json::value_t::object: {
      if (j.empty()) {
        os << "{}";
        return;
      }
      os << "{\n";
      bool first = true;
      for (auto it = j.begin(); it != j.end(); ++it) {
        if (!first) os << ",\n";
        first = false;
        os << pad << Json(it.key()).dump() << ": ";
        dump_value(it.value(), os, indent + 1);
      }
      os << "\n" << close << "}";
      return;
    }
    case Json::value_t::array: {
      if (j.empty()) {
        os << "[]";
        return;
      }
      os << "[\n";
      for (std::size_t i = 0; i < j.size(); ++i) {
        if (i) os << ",\n";
        os << pad;
        dump_value(j[i], os, indent + 1);
      }
      os << "\n" << close << "]";
      return;
    }
    case Json::value_t::number_float: {
      const double x = j.get<double>();
      if (std::isfinite(x)) os << format_double(x);
      else os << "null";
      return;
    }
    default:
      os << j.dump();
  }
}

Json vec_json(const Vec& v) {
  Json a = Json::array();
  for (int i = 0; i < v.size(); ++i) a.push_back(v(i));
  return a;
}

Json optional_number(const std::optional<double>& x) { return x ? Json(*x) : Json(nullptr); }

}  // namespace

std::string format_double(double x) {
  if (std::isnan(x)) return "nan";
  if (std::isinf(x)) return x > 0 ? "inf" : "-inf";
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", x);
  return buf;
}

std::string dump_json(const Json& j) {
  std::ostringstream os;
  dump_value(j, os, 0);
  os << "\n";
  return os.str();
}

Json witness_json(const ConditionWitness& w) {
  Json j{{"condition", to_string(w.kind)}, {"function", w.g_or_h.describe()}, {"s0", w.s0}, {"s_max", w.s_max}};
  if (w.g_or_h.is_power_law()) {
    j["coefficient"] = w.g_or_h.coeff;
    j["exponent"] = w.g_or_h.exponent;
  }
  if (w.kind == ConditionKind::III) j["beta"] = w.beta;
  if (w.kind == ConditionKind::IV) j["alpha"] = w.alpha;
  return j;
}

Json classification_json(const FluxProfile& profile, const Classification& cls) {
  auto opt = [](const std::optional<ConditionWitness>& w) { return w ? witness_json(*w) : Json(nullptr); };
  Json j{{"profile", profile.name()}, {"p", profile.p()}, {"regular", cls.regular}, {"mder", opt(cls.mder)},
         {"sder", opt(cls.sder)}, {"cond3", opt(cls.cond3)}, {"cond4", opt(cls.cond4)}};
  std::vector<std::string> paths;
  if (cls.mder && cls.cond3) paths.push_back("MDER");
  if (cls.sder && cls.cond4) paths.push_back("SDER");
  j["existence_paths"] = paths;
  return j;
}

Json verification_json(const VerificationReport& v) {
  Json flags = Json::array();
  for (const auto& f : v.flags)
    flags.push_back({{"name", f.name}, {"pass", f.pass}, {"value", f.value}, {"tolerance", f.tolerance}});
  Json j{{"max_principle_margin", optional_number(v.max_principle_margin)},
         {"comparison_margins", v.comparison_margins},
         {"lift_residual", optional_number(v.lift_residual)},
         {"lift_gradient_mismatch", optional_number(v.lift_gradient_mismatch)},
         {"lifted_curvature_mismatch", optional_number(v.lifted_curvature_mismatch)},
         {"flags", flags},
         {"all_pass", v.all_pass()}};
  if (v.gradient_monitor) {
    const auto& g = *v.gradient_monitor;
    j["gradient_monitor"] = {{"max_interior", g.max_interior},
                             {"interior_location", vec_json(g.interior_location)},
                             {"max_overall", g.max_overall},
                             {"overall_location", vec_json(g.overall_location)},
                             {"attained_at_boundary", g.attained_at_boundary}};
  } else {
    j["gradient_monitor"] = nullptr;
  }
  return j;
}

Json barrier_json(const BarrierSpec& spec) {
  return {{"branch", to_string(spec.branch)},
          {"delta", spec.delta},
          {"alpha", spec.alpha_floor},
          {"c1", spec.c1},
          {"C", spec.C},
          {"required_height", spec.required_height},
          {"gradient_bound", spec.gradient_bound},
          {"heuristic", spec.heuristic},
          {"nodes", spec.d_nodes.size()}};
}

Json supersolution_json(const SupersolutionCheck& chk) {
  return {{"max_upper", chk.max_upper},
          {"min_lower", chk.min_lower},
          {"tolerance", chk.tolerance},
          {"nodes", chk.nodes},
          {"holds", chk.holds}};
}

Json convexity_json(const MeanConvexityVerdict& verdict) {
  double worst = std::numeric_limits<double>::infinity();
  int insufficient = 0;
  for (const auto& s : verdict.samples) {
    worst = std::min(worst, s.value);
    if (!s.sufficient) ++insufficient;
  }
  return {{"verdict", verdict.holds ? "holds" : "violated"},
          {"holds", verdict.holds},
          {"sufficient", verdict.sufficient},
          {"violations", verdict.violations},
          {"insufficient_samples", insufficient},
          {"samples", verdict.samples.size()},
          {"worst_value", worst}};
}

Json solve_report_json(const SolveReport& r) {
  Json gate{{"path", r.gate.path}, {"passed", r.gate.passed}, {"overridden", r.gate.overridden},
            {"reasons", r.gate.reasons}};
  if (r.gate.convexity) {
    gate["parallel_convexity"] = {{"holds", r.gate.convexity->holds},
                                  {"worst_margin", r.gate.convexity->worst_margin},
                                  {"tolerance", r.gate.convexity->tolerance},
                                  {"levels", r.gate.convexity->levels.size()}};
  }
  Json j{{"scheme", to_string(r.scheme)},
         {"discretization", to_string(r.form)},
         {"gate", gate},
         {"convergence",
          {{"converged", r.converged},
           {"iterations", r.iterations},
           {"tolerance", r.tolerance},
           {"residual_norm", r.residual_norm},
           {"damping_events", r.damping_events},
           {"residual_history", r.residual_history},
           {"energy_history", r.energy_history}}},
         {"warnings", r.warnings},
         {"verification", verification_json(r.verification)}};
  Json b{{"error", r.barrier_error.empty() ? Json(nullptr) : Json(r.barrier_error)}};
  b["spec"] = r.barrier ? barrier_json(*r.barrier) : Json(nullptr);
  b["supersolution"] = r.barrier_check ? supersolution_json(*r.barrier_check) : Json(nullptr);
  j["barrier"] = b;
  return j;
}

std::string CsvTable::str() const {
  std::ostringstream os;
  for (std::size_t i = 0; i < header.size(); ++i) os << (i ? "," : "") << header[i];
  os << "\n";
  for (const auto& row : rows) {
    for (std::size_t i = 0; i < row.size(); ++i) os << (i ? "," : "") << format_double(row[i]);
    os << "\n";
  }
  return os.str();
}

CsvTable field_table(const SolutionField& field) {
  const Grid& g = *field.grid;
  CsvTable t;
  for (int a = 0; a < g.dim(); ++a) t.header.push_back(g.chart().axes[a].name);
  t.header.push_back("value");
  for (int k = 0; k < g.size(); ++k) {
    const Vec x = g.point(k);
    std::vector<double> row(x.data(), x.data() + x.size());
    row.push_back(field.values[k]);
    t.rows.push_back(std::move(row));
  }
  return t;
}

std::vector<double> read_field_csv(const std::filesystem::path& path, const Grid& grid) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open field '" + path.string() + "'");
  std::string line;
  std::getline(in, line);
  std::vector<double> values;
  const int cols = grid.dim() + 1;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    std::stringstream ss(line);
    std::string cell;
    std::vector<double> row;
    while (std::getline(ss, cell, ',')) row.push_back(std::strtod(cell.c_str(), nullptr));
    const int k = static_cast<int>(values.size());
    if (static_cast<int>(row.size()) != cols || k >= grid.size())
      throw ConfigError("field '" + path.string() + "' does not match the configured grid");
    const Vec x = grid.point(k);
    for (int a = 0; a < grid.dim(); ++a)
      if (std::abs(row[a] - x(a)) > 1e-12 * (1.0 + std::abs(x(a))))
        throw ConfigError("field '" + path.string() + "' node coordinates differ from the configured grid");
    values.push_back(row.back());
  }
  if (static_cast<int>(values.size()) != grid.size())
    throw ConfigError("field '" + path.string() + "' does not match the configured grid");
  return values;
}

void write_file(const std::filesystem::path& path, const std::string& content) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary);
  if (!out) throw ConfigError("cannot write '" + path.string() + "'");
  out << content;
}

}  // namespace orbitpde
