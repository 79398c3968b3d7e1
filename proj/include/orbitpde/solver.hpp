#pragma once

#include <Eigen/SparseCholesky>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "orbitpde/barrier.hpp"
#include "orbitpde/flux.hpp"
#include "orbitpde/grid.hpp"
#include "orbitpde/operators.hpp"
#include "orbitpde/verify.hpp"

namespace orbitpde {

enum class Scheme { Picard, Newton, EnergyDescent };
std::string to_string(Scheme scheme);
/// "picard", "newton" or "energy_descent"; throws PreconditionError otherwise.
Scheme scheme_from_string(const std::string& name);

/// Divergence selects the variational discretization (needs the orbit
/// volume V); NonDivergence the centered-difference Q_J. Auto picks the
/// former whenever V is available.
enum class Discretization { Auto, Divergence, NonDivergence };
std::string to_string(Discretization form);

struct SolveSettings {
  Scheme scheme = Scheme::Newton;
  double tolerance = 1e-10;
  int max_iterations = 200;
  double damping = 1.0;  // initial step fraction
  int n1 = 64;
  int n2 = 64;
  Discretization form = Discretization::Auto;
  bool override_gate = false;
  bool harmonic_start = true;
  /// Run barrier construction and the verification suite after the solve.
  bool run_checks = true;
};

struct GateVerdict {
  std::string path = "none";  // "MDER", "SDER" or "none"
  bool passed = false;
  bool overridden = false;
  std::vector<std::string> reasons;
  std::optional<ParallelConvexityVerdict> convexity;
};

/// MDER needs Condition I and III witnesses; SDER needs II and IV plus
/// non-negative H + <J, eta> on inner parallels. Without `override_gate` a
/// failing verdict throws GateFailure; with it the verdict is flagged.
GateVerdict evaluate_gate(const Classification& cls, const Grid& grid, bool override_gate);

struct SolveReport {
  Classification classification;
  GateVerdict gate;
  Scheme scheme = Scheme::Newton;
  Discretization form = Discretization::Divergence;
  double tolerance = 0.0;
  int iterations = 0;
  int damping_events = 0;
  bool converged = false;
  double residual_norm = 0.0;
  std::vector<double> residual_history;  // before each step, then final
  std::vector<double> energy_history;    // energy_descent only
  std::vector<std::string> warnings;

  std::optional<BarrierSpec> barrier;
  std::optional<SupersolutionCheck> barrier_check;
  std::string barrier_error;
  VerificationReport verification;
  double runtime_seconds = 0.0;
};

/// Iterates one of the three schemes on a fixed grid and profile. Boundary
/// values of the iterate are never touched.
class NonlinearSolver {
 public:
  NonlinearSolver(std::shared_ptr<const Grid> grid, FluxProfile profile, SolveSettings settings);

  bool divergence_form() const { return divergence_; }
  const Grid& grid() const { return *grid_; }

  /// Harmonic extension of the boundary values (p = 2, J = 0) or the input
  /// itself when harmonic_start is off.
  std::vector<double> initial_guess(const std::vector<double>& boundary_values) const;

  /// Residual of the selected discretization (zero on Dirichlet nodes) and
  /// its max norm over the unknowns.
  std::vector<double> residual(const std::vector<double>& v) const;
  double residual_norm(const std::vector<double>& v) const;

  /// Picard: coefficients frozen at v, linear solve. Newton: analytic
  /// linearization. Energy descent: Laplacian-preconditioned gradient step
  /// with a secant step length and Armijo backtracking on the energy.
  /// Picard and Newton halve the step while the residual max norm increases.
  /// Throw NumericalFailure when a linear solve fails or no decrease is found.
  std::vector<double> picard_step(const std::vector<double>& v);
  std::vector<double> newton_step(const std::vector<double>& v);
  std::vector<double> energy_descent_step(const std::vector<double>& v);
  std::vector<double> step(const std::vector<double>& v);

  /// Full iteration from v0; fills the convergence part of `report`.
  SolutionField run(std::vector<double> v0, SolveReport* report = nullptr);

  int damping_events() const { return damping_events_; }

 private:
  Eigen::VectorXd solve_linear(const SparseMatrix& mat, const Eigen::VectorXd& rhs, bool spd) const;
  std::vector<double> damped_update(const std::vector<double>& v, const Eigen::VectorXd& delta);
  Eigen::VectorXd restrict(const std::vector<double>& full) const;

  std::shared_ptr<const Grid> grid_;
  FluxProfile profile_;
  SolveSettings settings_;
  bool divergence_;
  int damping_events_ = 0;
  std::vector<double> energy_log_;
  // Energy descent state.
  std::shared_ptr<Eigen::SimplicialLDLT<SparseMatrix>> preconditioner_;
  double last_step_ = 1.0;
};

struct SolveResult {
  SolutionField field;
  SolveReport report;
};

/// Classify, gate, solve on an n1 x n2 grid of the chart, then (when
/// run_checks is set) build the boundary barrier and run the verification
/// suite. Non-convergence returns the last iterate with converged = false.
SolveResult solve(const DomainSpec& problem, const FluxProfile& profile, const SolveSettings& settings);

/// Post-solve checks on a converged field: maximum principle margins,
/// gradient monitor, reduction residuals when the chart has a lift, and the
/// boundary barrier from the gate's witness (supersolution, sandwich and
/// boundary gradient). Needs `report.classification` and `report.gate`.
void run_verification(const Grid& grid, const DomainSpec& problem, const FluxProfile& profile,
                      const SolveSettings& settings, const SolutionField& field, SolveReport& report);

/// Same on a prebuilt grid.
SolveResult solve_on_grid(std::shared_ptr<const Grid> grid, const DomainSpec& problem, const FluxProfile& profile,
                          const SolveSettings& settings);

}  // namespace orbitpde
