#include "orbitpde/cli.hpp"

#include <algorithm>
#include <cmath>
#include <future>
#include <iomanip>
#include <iostream>
#include <mutex>
#include <sstream>
#include <thread>

#include "CLI11.hpp"
#include "orbitpde/errors.hpp"
#include "orbitpde/expression.hpp"
#include "orbitpde/report.hpp"

namespace orbitpde {

namespace {

constexpr double kLadderStep = 0.1;

const FluxProfile& need_profile(const ProblemConfig& c) {
  if (!c.profile) throw ConfigError(c.source.string() + ": missing flux block");
  return *c.profile;
}

const GeometryConfig& need_geometry(const ProblemConfig& c) {
  if (!c.geometry) throw ConfigError(c.source.string() + ": missing geometry block");
  if (c.geometry->chart->dim > 2) throw ConfigError("geometry: solves need a chart of dimension 1 or 2");
  return *c.geometry;
}

ProblemConfig with_options(ProblemConfig c, const CommandOptions& opts) {
  if (opts.override_gate) c.settings.override_gate = true;
  if (opts.output_dir) c.output_dir = *opts.output_dir;
  return c;
}

std::shared_ptr<const Grid> make_grid(const ProblemConfig& c, int level = 0) {
  const auto& chart = c.geometry->chart;
  const int n1 = c.settings.n1 << level;
  const int n2 = chart->dim == 2 ? c.settings.n2 << level : 1;
  if (n1 > 4096 || n2 > 4096) throw ConfigError("refinement would exceed 4096 nodes per axis");
  return std::make_shared<const Grid>(chart, n1, n2);
}

Json geometry_json(const GeometryConfig& g) {
  return {{"kind", g.kind}, {"shape", g.shape}, {"dim", g.chart->dim}, {"lambda", g.lambda},
          {"n", g.n},       {"r_in", g.r_in},   {"r_out", g.r_out}};
}

Json grid_json(const Grid& g) { return {{"n1", g.n1()}, {"n2", g.n2()}, {"h", g.axis(0).h}, {"spacing", g.spacing()}}; }

Json gate_json(const GateVerdict& gate) {
  return {{"path", gate.path}, {"passed", gate.passed}, {"overridden", gate.overridden}, {"reasons", gate.reasons}};
}

std::vector<CurveSample> reversed(std::vector<CurveSample> s) {
  std::reverse(s.begin(), s.end());
  for (auto& x : s) {
    x.dx = -x.dx;
    x.dy = -x.dy;
    x.kappa = -x.kappa;
  }
  return s;
}

// Boundary components of a helicoidal disk or annulus, each with the
// interior on its left.
std::vector<CurveSample> helicoidal_boundary(const GeometryConfig& g, int samples) {
  auto out = circle_samples(g.r_out, samples);
  if (g.r_in > 0.0) {
    const auto inner = reversed(circle_samples(g.r_in, samples));
    out.insert(out.end(), inner.begin(), inner.end());
  }
  return out;
}

std::vector<CurveSample> curve_samples(const CurveConfig& c) {
  return c.shape == "circle" ? circle_samples(c.radius, c.samples) : ellipse_samples(c.a, c.b, c.samples);
}

CsvTable convexity_table(const MeanConvexityVerdict& v) {
  CsvTable t{{"x", "y", "value", "holds", "sufficient_margin", "sufficient"}, {}};
  for (const auto& s : v.samples)
    t.rows.push_back({s.x, s.y, s.value, s.holds ? 1.0 : 0.0, s.sufficient_margin, s.sufficient ? 1.0 : 0.0});
  return t;
}

CsvTable barrier_table(const BarrierSpec& spec) {
  CsvTable t{{"d", "f", "df"}, {}};
  for (std::size_t i = 0; i < spec.d_nodes.size(); ++i)
    t.rows.push_back({spec.d_nodes[i], spec.f_nodes[i], spec.df_nodes[i]});
  return t;
}

double max_error(const SolutionField& f, const std::function<double(const Vec&)>& exact) {
  double e = 0.0;
  for (int k = 0; k < f.grid->size(); ++k) e = std::max(e, std::abs(f.values[k] - exact(f.grid->point(k))));
  return e;
}

// Solves the ladder psi + k * step * bump, k = 1, 2, with bump in [0, 1], and
// records the margins between successive rungs.
void comparison_ladder(const std::shared_ptr<const Grid>& grid, const DomainSpec& base, const FluxProfile& profile,
                       SolveSettings settings, const SolutionField& v0, SolveReport& report) {
  settings.run_checks = false;
  settings.override_gate = true;  // the gate already ran on the base problem
  auto bump = [](const Vec& x) { return 0.5 * (1.0 + std::sin(3.0 * x.sum())); };
  std::vector<SolutionField> rungs{v0};
  for (int k = 1; k <= 2; ++k) {
    DomainSpec d = base;
    auto psi = base.boundary_data;
    d.boundary_data = [psi, bump, k](const Vec& x) { return psi(x) + k * kLadderStep * bump(x); };
    auto r = solve_on_grid(grid, d, profile, settings);
    if (!r.field.converged) {
      report.warnings.push_back("comparison ladder rung " + std::to_string(k) + " did not converge; check skipped");
      return;
    }
    rungs.push_back(std::move(r.field));
  }
  const double tau = 10.0 * settings.tolerance;
  for (std::size_t k = 0; k + 1 < rungs.size(); ++k) {
    const double m = check_comparison(rungs[k], rungs[k + 1]);
    report.verification.comparison_margins.push_back(m);
    report.verification.add_margin("comparison_" + std::to_string(k) + "_" + std::to_string(k + 1), m, tau);
  }
}

// Mean curvature decomposition along the outer boundary circle of a polar
// chart with a lift to three dimensions.
void lifted_curvature_check(const QuotientChart& chart, SolveReport& report) {
  if (!chart.polar() || !chart.has_lift() || chart.ambient_dim != 3) return;
  const double r = chart.axes[0].hi;
  const auto hb = check_lifted_curvature(chart, [r](double s) {
    Vec x(2);
    x << r, s;
    return x;
  });
  report.verification.lifted_curvature_mismatch = hb.max_relative_mismatch;
  report.verification.add_mismatch("lifted_curvature", hb.max_relative_mismatch, 1e-2);
}

int solve_exit(const SolveReport& r) {
  if (!r.converged) return kExitNoConvergence;
  return r.verification.all_pass() ? kExitOk : kExitVerification;
}

void print_flags(const VerificationReport& v, std::ostream& log) {
  for (const auto& f : v.flags)
    log << "  check " << std::left << std::setw(26) << f.name << (f.pass ? "pass" : "FAIL") << "  value "
        << format_double(f.value) << "  tol " << format_double(f.tolerance) << "\n";
}

Json document(const std::string& command, const ProblemConfig& c) {
  return {{"format_version", kReportVersion}, {"command", command}, {"name", c.name}};
}

}  // namespace

int run_classify(const ProblemConfig& c, const CommandOptions&, std::ostream& log) {
  const auto& profile = need_profile(c);
  const auto cls = classify(profile);
  log << "profile " << profile.name() << "\n";
  log << "  regular (p = 2): " << (cls.regular ? "yes" : "no") << "\n";
  auto line = [&](const char* label, const std::optional<ConditionWitness>& w) {
    log << "  " << label << ": ";
    if (!w) {
      log << "no witness found\n";
      return;
    }
    if (w->kind != ConditionKind::IV) log << w->g_or_h.describe() << " ";
    log << "on [" << format_double(w->s0) << ", " << format_double(w->s_max) << "]";
    if (w->kind == ConditionKind::III) log << ", beta " << format_double(w->beta);
    if (w->kind == ConditionKind::IV) log << ", alpha " << format_double(w->alpha);
    log << "\n";
  };
  line("Condition I   (MDER)", cls.mder);
  line("Condition II  (SDER)", cls.sder);
  line("Condition III", cls.cond3);
  line("Condition IV ", cls.cond4);
  auto doc = document("classify", c);
  doc["classification"] = classification_json(profile, cls);
  log << "  existence paths: " << doc["classification"]["existence_paths"].dump() << "\n";
  doc["exit_code"] = kExitOk;
  write_file(c.output("_classify.json"), dump_json(doc));
  return kExitOk;
}

int run_solve(const ProblemConfig& c, const CommandOptions& opts, std::ostream& log) {
  const auto& profile = need_profile(c);
  const auto& geo = need_geometry(c);
  const auto domain = c.domain();
  std::function<double(const Vec&)> exact;
  if (!c.exact.empty()) exact = bind_expression(c.exact, *geo.chart);
  const int levels = std::max(1, opts.refine);

  Json table = Json::array();
  CsvTable conv{{"level", "n1", "n2", "h", "iterations", "residual_norm", "error", "error_order", "lift_residual",
                 "lift_order", "lift_gradient_mismatch"},
                {}};
  SolveResult last;
  std::shared_ptr<const Grid> grid;
  double prev_h = 0.0, prev_err = 0.0, prev_lift = 0.0;
  std::optional<double> last_lift_order;
  for (int l = 0; l < levels; ++l) {
    grid = make_grid(c, l);
    last = solve_on_grid(grid, domain, profile, c.settings);
    auto& rep = last.report;
    const double h = grid->axis(0).h;
    const double err = exact ? max_error(last.field, exact) : std::nan("");
    const double lift = rep.verification.lift_residual.value_or(std::nan(""));
    const double err_order = l > 0 ? std::log(prev_err / err) / std::log(prev_h / h) : std::nan("");
    const double lift_order = l > 0 ? std::log(prev_lift / lift) / std::log(prev_h / h) : std::nan("");
    if (l > 0 && std::isfinite(lift_order)) last_lift_order = lift_order;
    conv.rows.push_back({static_cast<double>(l), static_cast<double>(grid->n1()), static_cast<double>(grid->n2()), h,
                         static_cast<double>(rep.iterations), rep.residual_norm, err, err_order, lift, lift_order,
                         rep.verification.lift_gradient_mismatch.value_or(std::nan(""))});
    table.push_back({{"level", l},
                     {"n1", grid->n1()},
                     {"n2", grid->n2()},
                     {"h", h},
                     {"converged", rep.converged},
                     {"iterations", rep.iterations},
                     {"residual_norm", rep.residual_norm},
                     {"error", err},
                     {"error_order", err_order},
                     {"lift_residual", lift},
                     {"lift_order", lift_order}});
    log << "level " << l << ": " << grid->n1() << " x " << grid->n2() << ", " << to_string(rep.scheme) << " "
        << (rep.converged ? "converged" : "did not converge") << " in " << rep.iterations << " iterations, residual "
        << format_double(rep.residual_norm);
    if (exact) log << ", error " << format_double(err);
    log << ", " << std::fixed << std::setprecision(3) << rep.runtime_seconds << " s" << std::defaultfloat
        << std::setprecision(6) << "\n";
    if (!rep.converged) break;
    prev_h = h;
    prev_err = err;
    prev_lift = lift;
  }

  auto& rep = last.report;
  if (rep.converged) {
    if (c.comparison_ladder) comparison_ladder(grid, domain, profile, c.settings, last.field, rep);
    lifted_curvature_check(*geo.chart, rep);
    if (last_lift_order) rep.verification.add_margin("reduction_order", *last_lift_order - 0.9, 0.0);
  }
  auto doc = document("solve", c);
  doc["classification"] = classification_json(profile, rep.classification);
  doc["geometry"] = geometry_json(geo);
  doc["boundary"] = c.boundary;
  doc["grid"] = grid_json(*grid);
  doc["report"] = solve_report_json(rep);
  doc["refinement"] = table;
  doc["exact"] = exact ? Json{{"expression", c.exact}, {"max_error", max_error(last.field, exact)}} : Json(nullptr);
  doc["mean_convexity"] = nullptr;
  if (geo.kind == "helicoidal") {
    const auto mc = helicoidal_mean_convexity(geo.lambda, helicoidal_boundary(geo, 256));
    doc["mean_convexity"] = convexity_json(mc);
    log << "mean convexity of the boundary: " << (mc.holds ? "holds" : "violated") << " (" << mc.violations
        << " violating samples)\n";
  }
  const int code = solve_exit(rep);
  doc["exit_code"] = code;

  write_file(c.output("_field.csv"), field_table(last.field).str());
  write_file(c.output("_report.json"), dump_json(doc));
  if (levels > 1 || exact) write_file(c.output("_convergence.csv"), conv.str());
  if (geo.chart->dim == 1 || geo.chart->polar()) {
    CsvTable radial{{geo.chart->axes[0].name, "value"}, {}};
    if (exact) radial.header.push_back("exact");
    for (int i = 0; i < grid->n1(); ++i) {
      const int k = grid->index(i, 0);
      std::vector<double> row{grid->point(k)(0), last.field.values[k]};
      if (exact) row.push_back(exact(grid->point(k)));
      radial.rows.push_back(std::move(row));
    }
    write_file(c.output("_radial.csv"), radial.str());
  }
  if (rep.barrier) write_file(c.output("_barrier.csv"), barrier_table(*rep.barrier).str());

  log << "gate " << rep.gate.path << (rep.gate.passed ? " passed" : rep.gate.overridden ? " overridden" : " failed")
      << "\n";
  if (!rep.barrier_error.empty()) log << "barrier: " << rep.barrier_error << "\n";
  print_flags(rep.verification, log);
  for (const auto& w : rep.warnings) log << "  warning: " << w << "\n";
  return code;
}

int run_barrier(const ProblemConfig& c, const CommandOptions&, std::ostream& log) {
  const auto& profile = need_profile(c);
  if (!c.geometry) throw ConfigError(c.source.string() + ": missing geometry block");
  const auto& geo = *c.geometry;
  auto doc = document("barrier", c);
  doc["geometry"] = geometry_json(geo);
  bool ok = true;

  Json hyper = Json::array();
  if (geo.kind == "hyperbolic" && !c.barrier.c.empty()) {
    double prev_g0 = -std::numeric_limits<double>::infinity();
    bool increasing = true;
    std::vector<double> cs = c.barrier.c;
    for (std::size_t i = 0; i < cs.size(); ++i) {
      const auto hb = hyperbolic_barrier(geo.n, cs[i], profile, c.barrier.nodes, c.barrier.s_max);
      const double g0 = hb.g(0.0);
      const double res = conservation_residual(hb);
      if (i > 0 && cs[i] > cs[i - 1] && !(g0 > prev_g0)) increasing = false;
      prev_g0 = g0;
      Json e{{"c", cs[i]}, {"g0", g0}, {"conservation_residual", res}, {"conservation_holds", res <= 1e-8}};
      ok = ok && res <= 1e-8;
      e["strip_check"] = nullptr;
      if (geo.n == 3) {
        const auto chk = check_hyperbolic_supersolution(hb, geo.r_out, c.barrier.offset, c.settings.n1, c.settings.n2);
        e["strip_check"] = {{"max_q", chk.max_q}, {"nodes", chk.nodes}, {"holds", chk.holds}};
        ok = ok && chk.holds;
        log << "c = " << format_double(cs[i]) << ": g(0) = " << format_double(g0) << ", conservation residual "
            << format_double(res) << ", strip supersolution " << (chk.holds ? "pass" : "FAIL") << " (max Q "
            << format_double(chk.max_q) << " over " << chk.nodes << " nodes)\n";
      } else {
        log << "c = " << format_double(cs[i]) << ": g(0) = " << format_double(g0) << ", conservation residual "
            << format_double(res) << "\n";
      }
      CsvTable t{{"s", "g", "dg"}, {}};
      for (std::size_t k = 0; k < hb.s_grid.size(); ++k)
        t.rows.push_back({hb.s_grid[k], hb.g_values[k], hb.dg(hb.s_grid[k])});
      write_file(c.output("_g_" + std::to_string(i) + ".csv"), t.str());
      hyper.push_back(e);
    }
    doc["g0_increasing"] = increasing;
    ok = ok && increasing;
    log << "g(0) increasing in c: " << (increasing ? "yes" : "NO") << "\n";
  } else {
    doc["g0_increasing"] = nullptr;
  }
  doc["hyperbolic"] = hyper;

  doc["barrier"] = nullptr;
  doc["supersolution"] = nullptr;
  doc["strip"] = nullptr;
  doc["gate"] = nullptr;
  if (geo.chart->dim <= 2) {
    const auto grid = make_grid(c);
    const auto cls = classify(profile);
    const auto gate = evaluate_gate(cls, *grid, c.settings.override_gate);
    doc["gate"] = gate_json(gate);
    const ConditionWitness* w = nullptr;
    if (gate.path == "MDER" || (gate.path != "SDER" && cls.mder)) w = cls.mder ? &*cls.mder : nullptr;
    if (gate.path == "SDER" || (!w && cls.sder)) w = cls.sder ? &*cls.sder : nullptr;
    if (!w) throw GateFailure("barrier: classification found no Condition I or II witness");
    const auto strip = strip_distance(*grid, c.barrier.delta);
    doc["strip"] = {{"delta0", strip.delta0}, {"delta", strip.delta}, {"warnings", strip.warnings}};
    for (const auto& s : strip.warnings) log << "  warning: " << s << "\n";
    const auto psi = c.domain().boundary_data;
    const auto spec = build_supersolution(*grid, strip, psi, profile, *w, gate.overridden);
    const auto chk = check_supersolution(*grid, strip, psi, profile, spec);
    doc["barrier"] = barrier_json(spec);
    doc["supersolution"] = supersolution_json(chk);
    write_file(c.output("_barrier.csv"), barrier_table(spec).str());
    log << to_string(spec.branch) << " barrier: delta " << format_double(spec.delta) << ", f'(0) "
        << format_double(spec.df_nodes.front()) << ", gradient bound " << format_double(spec.gradient_bound)
        << (spec.heuristic ? " (heuristic)" : "") << "\n";
    log << "supersolution check: " << (chk.holds ? "pass" : "FAIL") << " (max Q[psi+f] "
        << format_double(chk.max_upper) << ", min Q[psi-f] " << format_double(chk.min_lower) << ", tol "
        << format_double(chk.tolerance) << ", " << chk.nodes << " nodes)\n";
    if (!spec.heuristic) ok = ok && chk.holds;
  }
  const int code = ok ? kExitOk : kExitVerification;
  doc["exit_code"] = code;
  write_file(c.output("_barrier.json"), dump_json(doc));
  return code;
}

int run_verify(const ProblemConfig& c, const CommandOptions&, std::ostream& log) {
  const auto& profile = need_profile(c);
  const auto& geo = need_geometry(c);
  const auto grid = make_grid(c);
  const auto path = c.field.empty() ? c.output("_field.csv") : c.field;
  SolutionField field;
  field.grid = grid;
  field.values = read_field_csv(path, *grid);
  NonlinearSolver ns(grid, profile, c.settings);
  field.residual_norm = ns.residual_norm(field.values);
  field.converged = field.residual_norm <= c.settings.tolerance;

  SolveReport rep;
  rep.scheme = c.settings.scheme;
  rep.form = ns.divergence_form() ? Discretization::Divergence : Discretization::NonDivergence;
  rep.tolerance = c.settings.tolerance;
  rep.converged = field.converged;
  rep.residual_norm = field.residual_norm;
  rep.classification = classify(profile);
  rep.gate = evaluate_gate(rep.classification, *grid, c.settings.override_gate);
  const auto domain = c.domain();
  // The saved Dirichlet values must be the configured boundary data.
  double bd_mismatch = 0.0, bd_scale = 0.0;
  for (int k = 0; k < grid->size(); ++k) {
    if (!grid->is_boundary(k)) continue;
    const double psi = domain.boundary_data(grid->point(k));
    bd_mismatch = std::max(bd_mismatch, std::abs(field.values[k] - psi));
    bd_scale = std::max(bd_scale, std::abs(psi));
  }
  rep.verification.add_mismatch("boundary_data", bd_mismatch, 1e-12 * (1.0 + bd_scale));
  log << "field " << path.string() << ": residual " << format_double(field.residual_norm) << "\n";
  if (field.converged) {
    run_verification(*grid, domain, profile, c.settings, field, rep);
    if (c.comparison_ladder) comparison_ladder(grid, domain, profile, c.settings, field, rep);
    lifted_curvature_check(*geo.chart, rep);
  } else {
    log << "  residual above tolerance " << format_double(c.settings.tolerance) << "; checks not run\n";
  }
  const int code = solve_exit(rep);
  auto doc = document("verify", c);
  doc["field"] = path.filename().string();
  doc["grid"] = grid_json(*grid);
  doc["report"] = solve_report_json(rep);
  doc["exit_code"] = code;
  write_file(c.output("_verify.json"), dump_json(doc));
  print_flags(rep.verification, log);
  for (const auto& w : rep.warnings) log << "  warning: " << w << "\n";
  return code;
}

int run_convexity(const ProblemConfig& c, const CommandOptions&, std::ostream& log) {
  if (!c.geometry || c.geometry->kind != "helicoidal")
    throw ConfigError(c.source.string() + ": convexity needs a helicoidal geometry block");
  const auto& geo = *c.geometry;
  const auto samples = c.curve ? curve_samples(*c.curve) : helicoidal_boundary(geo, 256);
  const auto mc = helicoidal_mean_convexity(geo.lambda, samples);
  auto doc = document("convexity", c);
  doc["lambda"] = geo.lambda;
  doc["curve"] = c.curve ? Json{{"shape", c.curve->shape}, {"radius", c.curve->radius}, {"a", c.curve->a},
                                {"b", c.curve->b}, {"samples", c.curve->samples}}
                         : Json{{"shape", "domain_boundary"}, {"samples", samples.size()}};
  doc["mean_convexity"] = convexity_json(mc);
  doc["exit_code"] = kExitOk;
  write_file(c.output("_convexity.csv"), convexity_table(mc).str());
  write_file(c.output("_convexity.json"), dump_json(doc));
  log << "mean convexity (lambda " << format_double(geo.lambda) << "): " << (mc.holds ? "holds" : "violated") << ", "
      << mc.violations << " of " << mc.samples.size() << " samples violate; sufficient condition "
      << (mc.sufficient ? "holds" : "fails") << "\n";
  return kExitOk;
}

int run_command(const std::string& command, const std::filesystem::path& config_path, const CommandOptions& opts,
                std::ostream& log) {
  log << "== " << command << " " << config_path.string() << "\n";
  try {
    const auto cfg = with_options(load_config(config_path), opts);
    if (command == "classify") return run_classify(cfg, opts, log);
    if (command == "solve") return run_solve(cfg, opts, log);
    if (command == "barrier") return run_barrier(cfg, opts, log);
    if (command == "verify") return run_verify(cfg, opts, log);
    if (command == "convexity") return run_convexity(cfg, opts, log);
    log << "error: unknown command '" << command << "'\n";
    return kExitConfig;
  } catch (const ConfigError& e) {
    log << "config error: " << e.what() << "\n";
    return kExitConfig;
  } catch (const ProfileInvalid& e) {
    log << "profile invalid: " << e.what() << "\n";
    return kExitConfig;
  } catch (const PreconditionError& e) {
    log << "invalid problem: " << e.what() << "\n";
    return kExitConfig;
  } catch (const GateFailure& e) {
    log << "gate failure: " << e.what() << " (use --override-gate to proceed)\n";
    return kExitGate;
  } catch (const BarrierNotFound& e) {
    log << "barrier not found: " << e.what() << " [delta = " << format_double(e.delta()) << "]\n";
    return kExitBarrier;
  } catch (const NumericalFailure& e) {
    log << "numerical failure: " << e.what() << "\n";
    return kExitNoConvergence;
  } catch (const std::exception& e) {
    log << "failure: " << e.what() << "\n";
    return kExitNoConvergence;
  }
}

int run_cli(int argc, char** argv) {
  CLI::App app{"Quasilinear Dirichlet problems on orbit spaces"};
  app.require_subcommand(1);
  std::vector<std::string> configs;
  CommandOptions opts;
  int jobs = 1;
  std::string out_dir;
  const std::pair<const char*, const char*> commands[] = {
      {"classify", "Structural conditions and witnesses of the flux profile"},
      {"solve", "Solve the Dirichlet problem and run the checks"},
      {"barrier", "Boundary barrier and hyperbolic barrier profiles"},
      {"verify", "Re-check a saved solution field"},
      {"convexity", "Mean convexity of a helicoidal cylinder over a curve"},
  };
  for (const auto& [name, help] : commands) {
    auto* sub = app.add_subcommand(name, help);
    sub->add_option("--config", configs, "Problem file (repeatable)")->required()->check(CLI::ExistingFile);
    sub->add_flag("--override-gate", opts.override_gate, "Solve even when the classification gate fails");
    sub->add_option("--refine", opts.refine, "Grid-doubling levels for an order table")->check(CLI::Range(1, 8));
    sub->add_option("--jobs", jobs, "Configs to run in parallel")->check(CLI::Range(1, 256));
    sub->add_option("--out", out_dir, "Override the output directory of every config");
  }
  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? kExitOk : kExitConfig;
  }
  if (!out_dir.empty()) opts.output_dir = out_dir;
  const std::string command = app.get_subcommands().front()->get_name();

  std::vector<std::string> logs(configs.size());
  std::vector<int> codes(configs.size(), kExitOk);
  std::size_t next = 0;
  std::mutex m;
  auto worker = [&] {
    while (true) {
      std::size_t i;
      {
        std::lock_guard<std::mutex> lock(m);
        if (next >= configs.size()) return;
        i = next++;
      }
      std::ostringstream os;
      codes[i] = run_command(command, configs[i], opts, os);
      logs[i] = os.str();
    }
  };
  const int nthreads = std::min<int>(jobs, static_cast<int>(configs.size()));
  if (nthreads <= 1) {
    for (std::size_t i = 0; i < configs.size(); ++i) {
      codes[i] = run_command(command, configs[i], opts, std::cout);
      std::cout.flush();
    }
  } else {
    std::vector<std::thread> pool;
    for (int t = 0; t < nthreads; ++t) pool.emplace_back(worker);
    for (auto& t : pool) t.join();
    for (const auto& l : logs) std::cout << l;
  }
  for (int rc : codes)
    if (rc != kExitOk) return rc;
  return kExitOk;
}

}  // namespace orbitpde
