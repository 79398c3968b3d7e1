#include "orbitpde/solver.hpp"

#include <Eigen/IterativeLinearSolvers>
#include <Eigen/SparseLU>
#include <chrono>
#include <cmath>
#include <sstream>

#include "orbitpde/errors.hpp"

namespace orbitpde {

std::string to_string(Scheme scheme) {
  switch (scheme) {
    case Scheme::Picard:
      return "picard";
    case Scheme::Newton:
      return "newton";
    case Scheme::EnergyDescent:
      return "energy_descent";
  }
  return "?";
}

Scheme scheme_from_string(const std::string& name) {
  if (name == "picard") return Scheme::Picard;
  if (name == "newton") return Scheme::Newton;
  if (name == "energy_descent") return Scheme::EnergyDescent;
  throw PreconditionError("unknown scheme '" + name + "' (expected picard, newton or energy_descent)");
}

std::string to_string(Discretization form) {
  switch (form) {
    case Discretization::Auto:
      return "auto";
    case Discretization::Divergence:
      return "divergence";
    case Discretization::NonDivergence:
      return "non_divergence";
  }
  return "?";
}

GateVerdict evaluate_gate(const Classification& cls, const Grid& grid, bool override_gate) {
  GateVerdict gate;
  if (cls.mder && cls.cond3) {
    gate.path = "MDER";
    gate.passed = true;
  } else if (cls.sder && cls.cond4) {
    gate.path = "SDER";
    try {
      gate.convexity = check_parallel_convexity(grid);
      gate.passed = gate.convexity->holds;
      if (!gate.passed) {
        std::ostringstream os;
        os << "inner parallels are not mean convex relative to J (worst H + <J, eta> = "
           << gate.convexity->worst_margin << ")";
        gate.reasons.push_back(os.str());
      }
    } catch (const PreconditionError& e) {
      gate.reasons.push_back(std::string("parallel convexity not checkable: ") + e.what());
    }
  } else {
    if (!cls.mder) gate.reasons.push_back("no Condition I witness found");
    if (cls.mder && !cls.cond3) gate.reasons.push_back("no Condition III witness found");
    if (!cls.sder) gate.reasons.push_back("no Condition II witness found");
    if (cls.sder && !cls.cond4) gate.reasons.push_back("no Condition IV witness found");
  }
  if (!gate.passed) {
    if (!override_gate) {
      std::ostringstream os;
      os << "classification gate failed (" << gate.path << ")";
      for (const auto& r : gate.reasons) os << "; " << r;
      throw GateFailure(os.str());
    }
    gate.overridden = true;
  }
  return gate;
}

NonlinearSolver::NonlinearSolver(std::shared_ptr<const Grid> grid, FluxProfile profile, SolveSettings settings)
    : grid_(std::move(grid)), profile_(std::move(profile)), settings_(settings) {
  if (!(settings_.tolerance > 0.0)) throw PreconditionError("solver: tolerance must be positive");
  if (settings_.max_iterations < 1) throw PreconditionError("solver: max_iterations must be at least 1");
  if (!(settings_.damping > 0.0 && settings_.damping <= 1.0))
    throw PreconditionError("solver: damping must lie in (0, 1]");
  switch (settings_.form) {
    case Discretization::Auto:
      divergence_ = grid_->variational();
      break;
    case Discretization::Divergence:
      if (!grid_->variational()) throw PreconditionError("solver: divergence form needs an orbit-volume weight");
      divergence_ = true;
      break;
    case Discretization::NonDivergence:
      divergence_ = false;
      break;
  }
  if (settings_.scheme == Scheme::EnergyDescent && !divergence_)
    throw PreconditionError("solver: energy_descent needs the variational discretization (orbit volume V)");
}

std::vector<double> NonlinearSolver::initial_guess(const std::vector<double>& boundary_values) const {
  if (!settings_.harmonic_start) return boundary_values;
  return harmonic_extension(*grid_, boundary_values);
}

std::vector<double> NonlinearSolver::residual(const std::vector<double>& v) const {
  return divergence_ ? divergence_residual(*grid_, profile_, v) : operator_residual(*grid_, profile_, v);
}

double NonlinearSolver::residual_norm(const std::vector<double>& v) const {
  const auto r = residual(v);
  double m = 0.0;
  for (int k : grid_->unknowns()) m = std::max(m, std::abs(r[k]));
  return m;
}

Eigen::VectorXd NonlinearSolver::restrict(const std::vector<double>& full) const {
  Eigen::VectorXd out(static_cast<Eigen::Index>(grid_->unknowns().size()));
  for (int k : grid_->unknowns()) out(grid_->unknown_index(k)) = full[k];
  return out;
}

Eigen::VectorXd NonlinearSolver::solve_linear(const SparseMatrix& mat, const Eigen::VectorXd& rhs, bool spd) const {
  constexpr Eigen::Index kDirectLimit = 100000;
  Eigen::VectorXd x;
  if (mat.rows() > kDirectLimit) {
    Eigen::BiCGSTAB<SparseMatrix, Eigen::IncompleteLUT<double>> it;
    it.setTolerance(1e-14);
    it.setMaxIterations(5000);
    it.compute(mat);
    x = it.solve(rhs);
    if (it.info() != Eigen::Success) throw NumericalFailure("linear solve: iterative solver did not converge");
    return x;
  }
  if (spd) {
    Eigen::SimplicialLDLT<SparseMatrix> ldlt(mat);
    if (ldlt.info() == Eigen::Success) {
      x = ldlt.solve(rhs);
      if (ldlt.info() == Eigen::Success && x.allFinite()) return x;
    }
  }
  Eigen::SparseLU<SparseMatrix> lu;
  lu.compute(mat);
  if (lu.info() != Eigen::Success) throw NumericalFailure("linear solve: singular system");
  x = lu.solve(rhs);
  if (lu.info() != Eigen::Success || !x.allFinite()) throw NumericalFailure("linear solve: singular system");
  return x;
}

std::vector<double> NonlinearSolver::damped_update(const std::vector<double>& v, const Eigen::VectorXd& delta) {
  const double r0 = residual_norm(v);
  double theta = settings_.damping;
  std::vector<double> cand(v.size());
  for (int attempt = 0; attempt < 30; ++attempt) {
    cand = v;
    for (int k : grid_->unknowns()) cand[k] += theta * delta(grid_->unknown_index(k));
    const double r = residual_norm(cand);
    if (std::isfinite(r) && (r <= r0 || r <= settings_.tolerance)) return cand;
    theta *= 0.5;
    ++damping_events_;
  }
  throw NumericalFailure("damped step: no residual decrease after 30 halvings");
}

std::vector<double> NonlinearSolver::picard_step(const std::vector<double>& v) {
  Eigen::VectorXd delta;
  if (divergence_) {
    // The frozen energy is quadratic and its gradient at v is K v, so
    // v - K^{-1} grad E(v) solves the frozen linear problem.
    const SparseMatrix k = energy_hessian(*grid_, profile_, v, HessianKind::Frozen);
    delta = solve_linear(k, -restrict(energy_gradient(*grid_, profile_, v)), true);
  } else {
    const SparseMatrix l = operator_jacobian(*grid_, profile_, v, true);
    delta = solve_linear(l, -restrict(operator_residual(*grid_, profile_, v)), false);
  }
  return damped_update(v, delta);
}

std::vector<double> NonlinearSolver::newton_step(const std::vector<double>& v) {
  Eigen::VectorXd delta;
  if (divergence_) {
    const SparseMatrix h = energy_hessian(*grid_, profile_, v, HessianKind::Newton);
    delta = solve_linear(h, -restrict(energy_gradient(*grid_, profile_, v)), true);
  } else {
    const SparseMatrix j = operator_jacobian(*grid_, profile_, v);
    delta = solve_linear(j, -restrict(operator_residual(*grid_, profile_, v)), false);
  }
  return damped_update(v, delta);
}

std::vector<double> NonlinearSolver::energy_descent_step(const std::vector<double>& v) {
  if (!divergence_) throw PreconditionError("energy_descent: needs the variational discretization");
  if (!preconditioner_) {
    preconditioner_ = std::make_shared<Eigen::SimplicialLDLT<SparseMatrix>>(
        energy_hessian(*grid_, profile_, v, HessianKind::Laplacian));
    if (preconditioner_->info() != Eigen::Success) throw NumericalFailure("energy_descent: preconditioner failed");
  }
  const Eigen::VectorXd g = restrict(energy_gradient(*grid_, profile_, v));
  const Eigen::VectorXd d = -preconditioner_->solve(g);
  const double slope = g.dot(d);
  if (!(slope < 0.0)) return v;  // stationary to working precision
  auto shifted = [&](double alpha) {
    std::vector<double> out = v;
    for (int k : grid_->unknowns()) out[k] += alpha * d(grid_->unknown_index(k));
    return out;
  };
  // Secant estimate of the minimizer along d from the directional derivative
  // at the previous step length.
  const double trial = last_step_;
  const double slope_t = restrict(energy_gradient(*grid_, profile_, shifted(trial))).dot(d);
  double alpha = 2.0 * trial;
  if (slope_t > slope) alpha = std::clamp(trial * slope / (slope - slope_t), trial / 8.0, 8.0 * trial);
  for (int attempt = 0; attempt < 40; ++attempt) {
    const auto cand = shifted(alpha);
    const double de = energy_difference(*grid_, profile_, v, cand);
    if (de <= 1e-4 * alpha * slope) {
      last_step_ = alpha;
      energy_log_.push_back(de);
      return cand;
    }
    alpha *= 0.5;
    ++damping_events_;
  }
  throw NumericalFailure("energy_descent: Armijo backtracking failed");
}

std::vector<double> NonlinearSolver::step(const std::vector<double>& v) {
  switch (settings_.scheme) {
    case Scheme::Picard:
      return picard_step(v);
    case Scheme::Newton:
      return newton_step(v);
    case Scheme::EnergyDescent:
      return energy_descent_step(v);
  }
  return v;
}

SolutionField NonlinearSolver::run(std::vector<double> v, SolveReport* report) {
  SolutionField field;
  field.grid = grid_;
  std::vector<double> history;
  std::vector<double> energies;
  std::vector<std::string> warnings;
  int it = 0;
  double r = residual_norm(v);
  history.push_back(r);
  const bool track_energy = divergence_ && settings_.scheme == Scheme::EnergyDescent;
  if (track_energy) energies.push_back(energy(*grid_, profile_, v));
  while (r > settings_.tolerance && it < settings_.max_iterations) {
    try {
      auto next = step(v);
      if (next == v) {
        warnings.push_back("iteration stalled at working precision");
        break;
      }
      v = std::move(next);
    } catch (const NumericalFailure& e) {
      warnings.push_back(e.what());
      break;
    }
    ++it;
    r = residual_norm(v);
    history.push_back(r);
    if (track_energy) energies.push_back(energies.back() + energy_log_.back());
  }
  field.values = std::move(v);
  field.residual_norm = r;
  field.iterations = it;
  field.converged = r <= settings_.tolerance;
  if (!field.converged && warnings.empty()) {
    std::ostringstream os;
    os << "no convergence after " << it << " iterations (residual " << r << ")";
    warnings.push_back(os.str());
  }
  if (report) {
    report->scheme = settings_.scheme;
    report->form = divergence_ ? Discretization::Divergence : Discretization::NonDivergence;
    report->tolerance = settings_.tolerance;
    report->iterations = it;
    report->damping_events = damping_events_;
    report->converged = field.converged;
    report->residual_norm = r;
    report->residual_history = history;
    report->energy_history = energies;
    report->warnings.insert(report->warnings.end(), warnings.begin(), warnings.end());
  }
  return field;
}

void run_verification(const Grid& grid, const DomainSpec& problem, const FluxProfile& profile,
                const SolveSettings& settings, const SolutionField& field, SolveReport& report) {
  const double tau = 10.0 * settings.tolerance;
  auto& ver = report.verification;
  const auto mp = check_max_principle(field);
  ver.max_principle_margin = mp.margin;
  ver.add_margin("max_principle", mp.margin, tau);
  ver.add_margin("max_principle_upper", mp.upper, tau);
  ver.add_margin("max_principle_lower", mp.lower, tau);
  ver.gradient_monitor = gradient_monitor(field);
  const auto& chart = grid.chart();
  if (chart.has_lift()) {
    try {
      const auto red = check_reduction(profile, field);
      ver.lift_residual = red.lift_residual;
      ver.lift_gradient_mismatch = red.lift_gradient_mismatch;
      ver.add_mismatch("lift_gradient_mismatch", red.lift_gradient_mismatch, 5.0 * grid.axis(0).h);
    } catch (const PreconditionError& e) {
      report.warnings.push_back(std::string("reduction check skipped: ") + e.what());
    }
  }

  const ConditionWitness* witness = nullptr;
  if (report.gate.path == "MDER" && report.classification.mder) witness = &*report.classification.mder;
  if (report.gate.path == "SDER" && report.classification.sder) witness = &*report.classification.sder;
  if (!witness && report.gate.overridden) {
    if (report.classification.mder) witness = &*report.classification.mder;
    else if (report.classification.sder) witness = &*report.classification.sder;
  }
  if (!witness) return;
  try {
    const auto strip = strip_distance(grid);
    const bool heuristic = report.gate.overridden;
    auto spec = build_supersolution(grid, strip, problem.boundary_data, profile, *witness, heuristic);
    const auto chk = check_supersolution(grid, strip, problem.boundary_data, profile, spec);
    const double sandwich = check_barrier_sandwich(field, strip, problem.boundary_data, spec);
    const double bgrad = check_boundary_gradient(field, spec.gradient_bound);
    if (heuristic) {
      std::ostringstream os;
      os << "heuristic barrier (gate overridden): supersolution " << (chk.holds ? "holds" : "fails")
         << ", sandwich margin " << sandwich << ", boundary gradient margin " << bgrad;
      report.warnings.push_back(os.str());
    } else if (chk.nodes == 0) {
      std::ostringstream os;
      os << "barrier strip of width " << spec.delta << " holds no full stencil at spacing " << grid.spacing()
         << "; supersolution check not evaluated";
      report.warnings.push_back(os.str());
      ver.add_margin("barrier_sandwich", sandwich, tau);
      ver.add_margin("boundary_gradient", bgrad, 0.0);
    } else {
      ver.add_margin("barrier_supersolution", chk.holds ? 0.0 : -std::max(chk.max_upper, -chk.min_lower),
                     chk.tolerance);
      ver.add_margin("barrier_sandwich", sandwich, tau);
      ver.add_margin("boundary_gradient", bgrad, 0.0);
    }
    report.barrier = std::move(spec);
    report.barrier_check = chk;
  } catch (const BarrierNotFound& e) {
    report.barrier_error = e.what();
  } catch (const PreconditionError& e) {
    report.barrier_error = e.what();
  }
}

SolveResult solve_on_grid(std::shared_ptr<const Grid> grid, const DomainSpec& problem, const FluxProfile& profile,
                          const SolveSettings& settings) {
  const auto start = std::chrono::steady_clock::now();
  if (!problem.boundary_data) throw PreconditionError("solve: missing boundary data");
  SolveResult out;
  auto& report = out.report;
  report.classification = classify(profile);
  report.gate = evaluate_gate(report.classification, *grid, settings.override_gate);
  if (report.gate.overridden) {
    std::ostringstream os;
    os << "classification gate overridden";
    for (const auto& r : report.gate.reasons) os << "; " << r;
    report.warnings.push_back(os.str());
  }
  std::vector<double> data(grid->size());
  for (int k = 0; k < grid->size(); ++k) data[k] = problem.boundary_data(grid->point(k));
  NonlinearSolver ns(grid, profile, settings);
  out.field = ns.run(ns.initial_guess(data), &report);
  if (settings.run_checks && out.field.converged) run_verification(*grid, problem, profile, settings, out.field, report);
  report.runtime_seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  return out;
}

SolveResult solve(const DomainSpec& problem, const FluxProfile& profile, const SolveSettings& settings) {
  if (!problem.chart) throw PreconditionError("solve: missing chart");
  const int n2 = problem.chart->dim == 2 ? settings.n2 : 1;
  auto grid = std::make_shared<const Grid>(problem.chart, settings.n1, n2);
  return solve_on_grid(grid, problem, profile, settings);
}

}  // namespace orbitpde
