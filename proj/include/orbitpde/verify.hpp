#pragma once

#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "orbitpde/barrier.hpp"
#include "orbitpde/flux.hpp"
#include "orbitpde/grid.hpp"

namespace orbitpde {

struct VerificationFlag {
  std::string name;
  bool pass = false;
  double value = 0.0;      // margin (pass iff value >= -tolerance) or mismatch
  double tolerance = 0.0;
};

struct GradientMonitor {
  double max_interior = 0.0;
  Vec interior_location;
  double max_overall = 0.0;
  Vec overall_location;
  bool attained_at_boundary = false;
};

struct VerificationReport {
  std::optional<double> max_principle_margin;
  std::vector<double> comparison_margins;
  std::optional<double> lift_residual;
  std::optional<double> lift_gradient_mismatch;
  std::optional<double> lifted_curvature_mismatch;
  std::optional<GradientMonitor> gradient_monitor;
  std::vector<VerificationFlag> flags;

  void add_margin(const std::string& name, double margin, double tolerance);
  void add_mismatch(const std::string& name, double mismatch, double tolerance);
  bool all_pass() const;
};

struct MaxPrincipleMargins {
  double margin = 0.0;  // sup over boundary |psi| - sup |v|
  double upper = 0.0;   // max psi - max v
  double lower = 0.0;   // min v - min psi
};

/// Boundary data are read from the Dirichlet nodes of `v`.
MaxPrincipleMargins check_max_principle(const SolutionField& v);

/// min over nodes of v2 - v1. Throws PreconditionError when the grids differ
/// or the boundary data are not ordered (psi1 <= psi2 on every boundary node).
double check_comparison(const SolutionField& v1, const SolutionField& v2);

struct ReductionCheck {
  double lift_residual = 0.0;
  double lift_gradient_mismatch = 0.0;
  int samples = 0;
};

/// Lifts v to the ambient space and evaluates the ambient divergence-form
/// operator (Euclidean or half-space metric) by nested centered differences
/// with the chart spacing as step, at interior nodes whose first coordinate
/// lies in the middle 60% of its range (at most ~400 nodes). Also compares
/// |grad u| with |grad v| o pi there. Throws PreconditionError without a lift.
ReductionCheck check_reduction(const FluxProfile& profile, const SolutionField& v, int max_samples = 400);

/// Ambient divergence-form operator of u at q with difference step h.
double ambient_divergence(const QuotientChart& chart, const FluxProfile& profile,
                          const std::function<double(const Vec&)>& u, const Vec& q, double h);

struct LiftedCurvatureCheck {
  double max_relative_mismatch = 0.0;
  std::vector<double> ambient, chart_side;  // per sample
};

/// Mean curvature of the lifted boundary lift(c(sigma), t) computed from its
/// second fundamental form in the ambient metric, against the geodesic
/// curvature of c plus <J, eta> on the chart side. The interior of the
/// domain lies to the left of c' in chart coordinates; c must be a closed
/// curve parametrized over [0, 2 pi). Needs a 2D chart with a 3D ambient.
LiftedCurvatureCheck check_lifted_curvature(const QuotientChart& chart, const std::function<Vec(double)>& curve, int samples = 128);

/// Largest |grad v| over interior nodes and over all nodes.
GradientMonitor gradient_monitor(const SolutionField& v);

/// 1.1 * bound - max |grad v| over boundary nodes; non-negative when the
/// boundary gradient respects the barrier bound.
double check_boundary_gradient(const SolutionField& v, double bound);

/// min over strip nodes of (psi + f(d) - v) and (v - psi + f(d)).
double check_barrier_sandwich(const SolutionField& v, const StripDistance& strip,
                              const std::function<double(const Vec&)>& psi, const BarrierSpec& spec);

}  // namespace orbitpde
