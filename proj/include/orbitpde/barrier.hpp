#pragma once

#include <Eigen/Dense>
#include <cmath>
#include <functional>
#include <string>
#include <vector>

#include "orbitpde/flux.hpp"
#include "orbitpde/grid.hpp"

namespace orbitpde {

/// Distance to the Dirichlet boundary in the chart metric, by first-order
/// fast marching (diagonal metrics only), with derivatives on the strip.
struct StripDistance {
  std::vector<double> d;
  /// Coordinate gradient and covariant Hessian of d; NaN where the 9-point
  /// stencil is incomplete.
  std::vector<Eigen::Vector2d> grad;
  std::vector<Eigen::Matrix2d> hess;
  std::vector<double> laplacian;
  /// Largest width over which |Hess d| stays within 10x its value next to the
  /// boundary, capped at half the largest distance (the ridge).
  double delta0 = 0.0;
  double delta = 0.0;
  std::vector<std::string> warnings;

  bool in_strip(int k) const { return d[k] <= delta; }
  bool has_derivatives(int k) const { return !std::isnan(laplacian[k]); }
};

/// Fast marching from the boundary nodes. `delta <= 0` selects delta0; a
/// larger requested width is shrunk to delta0 with a warning.
/// Throws PreconditionError for non-diagonal metrics.
StripDistance strip_distance(const Grid& grid, double delta = 0.0);

/// Spectral norm of a covariant 2-tensor with respect to the metric with
/// inverse `ginv`.
double tensor_norm(const Eigen::Matrix2d& ginv, const Eigen::Matrix2d& t, int dim);

struct ParallelLevel {
  double d = 0.0;
  double worst_margin = 0.0;
  int nodes = 0;
};

/// H + <J, eta> >= 0 on inner parallels, grouped in levels of one grid
/// spacing. H = -Lap d is the mean curvature of the level set with respect
/// to the interior normal eta = grad d.
struct ParallelConvexityVerdict {
  std::vector<ParallelLevel> levels;
  double worst_margin = 0.0;
  double tolerance = 0.0;
  bool holds = false;
};

/// Throws PreconditionError when the strip holds no node with derivatives.
ParallelConvexityVerdict check_parallel_convexity(const Grid& grid, const StripDistance& strip);
ParallelConvexityVerdict check_parallel_convexity(const Grid& grid, double delta = 0.0);

enum class BarrierBranch { MDER, SDER };
std::string to_string(BarrierBranch branch);

/// w = psi +- f(d) on the strip d <= delta. f is tabulated from the backward
/// ODE integration with f(0) = 0, f' >= alpha_floor and f'' <= 0.
struct BarrierSpec {
  BarrierBranch branch = BarrierBranch::MDER;
  double delta = 0.0;
  double alpha_floor = 0.0;
  double c1 = 0.0;
  double C = 0.0;
  double required_height = 0.0;
  double gradient_bound = 0.0;  // f'(0) + c1
  bool heuristic = false;
  std::vector<double> d_nodes, f_nodes, df_nodes;

  double f(double d) const;
  double df(double d) const;
};

/// Constructs the upper/lower boundary barrier for `psi` on the grid.
/// Witness kind I selects the MDER branch, II the SDER branch; the latter
/// requires check_parallel_convexity to hold unless `heuristic` is set.
/// Throws BarrierNotFound when f' blows up before f reaches the oscillation
/// of psi over the strip, and PreconditionError for other witness kinds.
BarrierSpec build_supersolution(const Grid& grid, const StripDistance& strip,
                                const std::function<double(const Vec&)>& psi, const FluxProfile& profile,
                                const ConditionWitness& witness, bool heuristic = false);

struct SupersolutionCheck {
  double max_upper = 0.0;  // max Q_J[psi + f(d)]
  double min_lower = 0.0;  // min Q_J[psi - f(d)]
  double tolerance = 0.0;
  int nodes = 0;
  bool holds = false;
};

/// Direct evaluation of the discrete operator on both barriers at interior
/// strip nodes whose stencil lies in the strip.
SupersolutionCheck check_supersolution(const Grid& grid, const StripDistance& strip,
                                       const std::function<double(const Vec&)>& psi, const FluxProfile& profile,
                                       const BarrierSpec& spec);

/// Barrier profile g with (cosh s)^(n-2) a(-g'(s)) = c, g(s) -> 0 at infinity:
/// g(s) is the integral over [s, inf) of a^{-1}(c cosh^(2-n) t).
struct HyperbolicBarrier {
  int n = 3;
  double c = 0.5;
  FluxProfile profile = FluxProfile::minimal_surface();
  std::vector<double> s_grid, g_values;

  double g(double s) const;
  /// -a^{-1}(c cosh^(2-n) s), from the conservation law.
  double dg(double s) const;
  /// Integrand a^{-1}(c cosh^(2-n) t).
  double integrand(double t) const;
};

/// Tabulates g on `nodes` points of [0, s_max]. Requires n >= 3 and
/// 0 < c < sup a.
HyperbolicBarrier hyperbolic_barrier(int n, double c, const FluxProfile& profile = FluxProfile::minimal_surface(),
                                     int nodes = 50, double s_max = 4.0);

/// max |(cosh s)^(n-2) a(-g'(s)) - c| over the tabulation nodes, with g'
/// taken by 5-point differences of the quadrature values of g.
double conservation_residual(const HyperbolicBarrier& barrier);

struct HyperbolicStripCheck {
  double max_q = 0.0;
  int nodes = 0;
  bool holds = false;
};

/// Lifts w = g(s) to the hyperbolic chart (n = 3) of a ball of radius
/// `radius`, where s is the signed distance to the geodesic at distance
/// `offset` from the center, and evaluates Q_J[w] at nodes with s > s_min and
/// <grad s, J> < 0 whose stencil stays in s > 0.
HyperbolicStripCheck check_hyperbolic_supersolution(const HyperbolicBarrier& barrier, double radius, double offset,
                                                    int n1, int n2, double tolerance = 1e-6, double s_min = 0.05);

}  // namespace orbitpde
