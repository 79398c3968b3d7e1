#pragma once

#include <Eigen/Sparse>
#include <vector>

#include "orbitpde/flux.hpp"
#include "orbitpde/grid.hpp"

namespace orbitpde {

using SparseMatrix = Eigen::SparseMatrix<double>;

/// Q_J[v] = Lap v + b(|grad v|) Hess v(n, n) - <grad v, J> at an interior
/// node, by metric-aware centered differences (covariant Hessian with
/// Christoffel symbols of the chart metric). |grad v| is floored by
/// eps_reg as sqrt(|grad v|^2 + eps^2).
double apply_operator(const FluxProfile& profile, const SolutionField& v, int node);
double apply_operator(const Grid& grid, const FluxProfile& profile, const std::vector<double>& v, int node);

/// Centered coordinate gradient and covariant Hessian of a nodal field at a
/// node whose 9-point neighborhood exists (Dirichlet nodes allowed).
struct NodeDerivatives {
  Eigen::Vector2d grad = Eigen::Vector2d::Zero();
  Eigen::Matrix2d hess = Eigen::Matrix2d::Zero();
};
NodeDerivatives node_derivatives(const Grid& grid, const std::vector<double>& v, int node);

/// Q_J at every node; zero on Dirichlet nodes.
std::vector<double> operator_residual(const Grid& grid, const FluxProfile& profile, const std::vector<double>& v);

/// Jacobian of operator_residual with respect to the unknowns (rows and
/// columns indexed by Grid::unknown_index). With `frozen` the coefficient
/// matrix ginv + b/|grad v|^2 u u^T is held at its value for v, which gives
/// the linear operator of a Picard step.
SparseMatrix operator_jacobian(const Grid& grid, const FluxProfile& profile, const std::vector<double>& v,
                               bool frozen = false);

/// Solution of the Laplace-Beltrami problem of the chart metric (no drift)
/// with Dirichlet data taken from `boundary_values` on boundary nodes.
std::vector<double> harmonic_extension(const Grid& grid, const std::vector<double>& boundary_values);

/// (1/V) div(V a(|grad v|)/|grad v| grad v) at an interior node: minus the
/// derivative of the discrete energy with respect to v at the node, divided
/// by the node's dual volume. Requires a chart with weight V.
double apply_divergence_form(const FluxProfile& profile, const SolutionField& v, int node);

/// Divergence form at every node; zero on Dirichlet nodes.
std::vector<double> divergence_residual(const Grid& grid, const FluxProfile& profile, const std::vector<double>& v);

/// Discrete energy sum_e w_e Phi_eps(|D_e v|) with Phi' = a, over the
/// corner-triangle elements of the grid.
double energy(const Grid& grid, const FluxProfile& profile, const std::vector<double>& v);

/// E(v1) - E(v0) accumulated per element without cancellation.
double energy_difference(const Grid& grid, const FluxProfile& profile, const std::vector<double>& v0,
                         const std::vector<double>& v1);

/// dE/dv at every node.
std::vector<double> energy_gradient(const Grid& grid, const FluxProfile& profile, const std::vector<double>& v);

enum class HessianKind { Newton, Frozen, Laplacian };

/// Second derivative of the energy restricted to the unknowns. Frozen keeps
/// the coefficient a(s)/s but drops its dependence on v (the Picard
/// operator); Laplacian sets a(s)/s = 1.
SparseMatrix energy_hessian(const Grid& grid, const FluxProfile& profile, const std::vector<double>& v,
                            HessianKind kind);

}  // namespace orbitpde
