#include "orbitpde/operators.hpp"

#include <Eigen/SparseLU>
#include <cmath>
#include <sstream>

#include "orbitpde/errors.hpp"

namespace orbitpde {

namespace {

// Node indices of the 9-point neighborhood, [di + 1][dj + 1].
struct Neighborhood {
  int at[3][3];
};

Neighborhood neighborhood(const Grid& g, int k) {
  Neighborhood nb{};
  const auto [i, j] = g.ij(k);
  for (int di = -1; di <= 1; ++di)
    for (int dj = -1; dj <= 1; ++dj) nb.at[di + 1][dj + 1] = g.dim() == 1 && dj != 0 ? -1 : g.resolve(i + di, j + dj);
  return nb;
}

void require_interior(const Grid& g, int k, const Neighborhood& nb, const char* who) {
  bool ok = k >= 0 && k < g.size() && !g.is_boundary(k);
  if (ok) {
    for (int di = -1; di <= 1; ++di)
      for (int dj = -1; dj <= 1; ++dj) {
        if (g.dim() == 1 && dj != 0) continue;
        if (nb.at[di + 1][dj + 1] < 0) ok = false;
      }
  }
  if (!ok) {
    std::ostringstream os;
    os << who << ": node " << k << " is not an interior node";
    throw PreconditionError(os.str());
  }
}

// First derivatives w and partial second derivatives H from the stencil.
struct Derivatives {
  Eigen::Vector2d w = Eigen::Vector2d::Zero();
  Eigen::Matrix2d hess = Eigen::Matrix2d::Zero();
};

Derivatives derivatives(const Grid& g, const std::vector<double>& v, const Neighborhood& nb) {
  Derivatives d;
  const double h1 = g.axis(0).h;
  const double c = v[nb.at[1][1]];
  d.w(0) = (v[nb.at[2][1]] - v[nb.at[0][1]]) / (2 * h1);
  d.hess(0, 0) = (v[nb.at[2][1]] - 2 * c + v[nb.at[0][1]]) / (h1 * h1);
  if (g.dim() == 2) {
    const double h2 = g.axis(1).h;
    d.w(1) = (v[nb.at[1][2]] - v[nb.at[1][0]]) / (2 * h2);
    d.hess(1, 1) = (v[nb.at[1][2]] - 2 * c + v[nb.at[1][0]]) / (h2 * h2);
    d.hess(0, 1) = d.hess(1, 0) =
        (v[nb.at[2][2]] - v[nb.at[2][0]] - v[nb.at[0][2]] + v[nb.at[0][0]]) / (4 * h1 * h2);
  }
  return d;
}

struct PointOperator {
  double value = 0.0;
  Eigen::Vector2d dw = Eigen::Vector2d::Zero();     // dQ/dw
  Eigen::Matrix2d dhess = Eigen::Matrix2d::Zero();  // dQ/dH
};

PointOperator point_operator(const Grid::NodeGeometry& geo, const FluxProfile& profile, const Derivatives& d,
                             int dim, bool linearize) {
  PointOperator out;
  const Eigen::Matrix2d& gi = geo.ginv;
  Eigen::Matrix2d hc = d.hess;
  for (int m = 0; m < dim; ++m) hc -= geo.gamma[m] * d.w(m);
  if (dim == 1) {
    hc(0, 1) = hc(1, 0) = hc(1, 1) = 0.0;
  }
  Eigen::Vector2d u = gi * d.w;
  if (dim == 1) u(1) = 0.0;
  const double eps = profile.eps_reg();
  const double big_s = d.w.dot(u) + eps * eps;
  const double s = std::sqrt(big_s);
  const double b = eval_b(profile, s);
  const double beta = b / big_s;
  const double uhu = u.dot(hc * u);
  double trace = 0.0;
  for (int a = 0; a < dim; ++a)
    for (int c = 0; c < dim; ++c) trace += gi(a, c) * hc(a, c);
  double drift = 0.0;
  for (int a = 0; a < dim; ++a) drift += geo.drift(a) * d.w(a);
  out.value = trace + beta * uhu - drift;
  if (!linearize) return out;

  const double dbeta = eval_db(profile, s) / (2.0 * s * big_s) - b / (big_s * big_s);
  Eigen::Matrix2d a_coef = gi + beta * u * u.transpose();
  if (dim == 1) a_coef(0, 1) = a_coef(1, 0) = a_coef(1, 1) = 0.0;
  const Eigen::Vector2d ghu = gi * (hc * u);
  for (int m = 0; m < dim; ++m) {
    double gamma_term = 0.0;
    for (int a = 0; a < dim; ++a)
      for (int c = 0; c < dim; ++c) gamma_term += a_coef(a, c) * geo.gamma[m](a, c);
    out.dw(m) = -gamma_term + 2.0 * dbeta * u(m) * uhu + 2.0 * beta * ghu(m) - geo.drift(m);
  }
  out.dhess = a_coef;
  return out;
}

void require_weight(const Grid& g, const char* who) {
  if (!g.variational()) {
    std::ostringstream os;
    os << who << ": chart has no orbit-volume weight";
    throw PreconditionError(os.str());
  }
}

struct ElementGradient {
  Eigen::Vector2d d;
  double q;  // D^T ginv D
};

ElementGradient element_gradient(const Grid::Element& e, const std::vector<double>& v) {
  ElementGradient out;
  const double vc = v[e.c];
  out.d(0) = (v[e.ix] - vc) * e.sx;
  out.d(1) = e.iy >= 0 ? (v[e.iy] - vc) * e.sy : 0.0;
  out.q = out.d.dot(e.ginv * out.d);
  return out;
}

}  // namespace

NodeDerivatives node_derivatives(const Grid& grid, const std::vector<double>& v, int node) {
  const Neighborhood nb = neighborhood(grid, node);
  for (int di = -1; di <= 1; ++di)
    for (int dj = -1; dj <= 1; ++dj) {
      if (grid.dim() == 1 && dj != 0) continue;
      if (nb.at[di + 1][dj + 1] < 0) throw PreconditionError("node_derivatives: incomplete stencil");
    }
  const auto d = derivatives(grid, v, nb);
  const auto& geo = grid.geometry(node);
  NodeDerivatives out;
  out.grad = d.w;
  out.hess = d.hess;
  for (int m = 0; m < grid.dim(); ++m) out.hess -= geo.gamma[m] * d.w(m);
  if (grid.dim() == 1) out.hess(0, 1) = out.hess(1, 0) = out.hess(1, 1) = 0.0;
  return out;
}

double apply_operator(const Grid& grid, const FluxProfile& profile, const std::vector<double>& v, int node) {
  const Neighborhood nb = neighborhood(grid, node);
  require_interior(grid, node, nb, "apply_operator");
  const auto d = derivatives(grid, v, nb);
  return point_operator(grid.geometry(node), profile, d, grid.dim(), false).value;
}

double apply_operator(const FluxProfile& profile, const SolutionField& v, int node) {
  return apply_operator(*v.grid, profile, v.values, node);
}

std::vector<double> operator_residual(const Grid& grid, const FluxProfile& profile, const std::vector<double>& v) {
  std::vector<double> out(grid.size(), 0.0);
  for (int k : grid.unknowns()) out[k] = apply_operator(grid, profile, v, k);
  return out;
}

namespace {

// Assembles the linear stencil dQ/dw . Dv + dQ/dH : D2v over the unknowns.
// Contributions from Dirichlet neighbors go to `rhs` (moved to the right
// hand side with their values from v) when rhs is non-null.
template <class PointFn>
SparseMatrix assemble_stencil(const Grid& grid, const std::vector<double>& v, const char* who, PointFn point,
                              Eigen::VectorXd* rhs) {
  std::vector<Eigen::Triplet<double>> trip;
  const int dim = grid.dim();
  const double h1 = grid.axis(0).h;
  const double h2 = dim == 2 ? grid.axis(1).h : 1.0;
  const int n = static_cast<int>(grid.unknowns().size());
  if (rhs) rhs->setZero(n);
  for (int k : grid.unknowns()) {
    const Neighborhood nb = neighborhood(grid, k);
    require_interior(grid, k, nb, who);
    const auto po = point(k, derivatives(grid, v, nb));
    const int row = grid.unknown_index(k);
    auto add = [&](int di, int dj, double val) {
      const int node = nb.at[di + 1][dj + 1];
      const int col = grid.unknown_index(node);
      if (val == 0.0) return;
      if (col >= 0)
        trip.emplace_back(row, col, val);
      else if (rhs)
        (*rhs)(row) -= val * v[node];
    };
    add(1, 0, po.dw(0) / (2 * h1) + po.dhess(0, 0) / (h1 * h1));
    add(-1, 0, -po.dw(0) / (2 * h1) + po.dhess(0, 0) / (h1 * h1));
    double center = -2.0 * po.dhess(0, 0) / (h1 * h1);
    if (dim == 2) {
      add(0, 1, po.dw(1) / (2 * h2) + po.dhess(1, 1) / (h2 * h2));
      add(0, -1, -po.dw(1) / (2 * h2) + po.dhess(1, 1) / (h2 * h2));
      center += -2.0 * po.dhess(1, 1) / (h2 * h2);
      const double mixed = 2.0 * po.dhess(0, 1) / (4 * h1 * h2);
      add(1, 1, mixed);
      add(1, -1, -mixed);
      add(-1, 1, -mixed);
      add(-1, -1, mixed);
    }
    add(0, 0, center);
  }
  SparseMatrix mat(n, n);
  mat.setFromTriplets(trip.begin(), trip.end());
  return mat;
}

// Coefficients of the operator with A = ginv + beta u u^T held fixed.
PointOperator frozen_point(const Grid::NodeGeometry& geo, const FluxProfile& profile, const Derivatives& d, int dim,
                           bool with_drift) {
  PointOperator out;
  Eigen::Vector2d u = geo.ginv * d.w;
  if (dim == 1) u(1) = 0.0;
  const double eps = profile.eps_reg();
  const double big_s = d.w.dot(u) + eps * eps;
  const double beta = eval_b(profile, std::sqrt(big_s)) / big_s;
  Eigen::Matrix2d a_coef = geo.ginv + beta * u * u.transpose();
  if (dim == 1) a_coef(0, 1) = a_coef(1, 0) = a_coef(1, 1) = 0.0;
  for (int m = 0; m < dim; ++m) {
    double gamma_term = 0.0;
    for (int a = 0; a < dim; ++a)
      for (int c = 0; c < dim; ++c) gamma_term += a_coef(a, c) * geo.gamma[m](a, c);
    out.dw(m) = -gamma_term - (with_drift ? geo.drift(m) : 0.0);
  }
  out.dhess = a_coef;
  return out;
}

}  // namespace

SparseMatrix operator_jacobian(const Grid& grid, const FluxProfile& profile, const std::vector<double>& v, bool frozen) {
  const int dim = grid.dim();
  if (frozen)
    return assemble_stencil(
        grid, v, "operator_jacobian",
        [&](int k, const Derivatives& d) { return frozen_point(grid.geometry(k), profile, d, dim, true); }, nullptr);
  return assemble_stencil(
      grid, v, "operator_jacobian",
      [&](int k, const Derivatives& d) { return point_operator(grid.geometry(k), profile, d, dim, true); }, nullptr);
}

std::vector<double> harmonic_extension(const Grid& grid, const std::vector<double>& boundary_values) {
  const auto lap = FluxProfile::p_laplace(2.0);
  const int dim = grid.dim();
  Eigen::VectorXd rhs;
  const SparseMatrix mat = assemble_stencil(
      grid, boundary_values, "harmonic_extension",
      [&](int k, const Derivatives& d) { return frozen_point(grid.geometry(k), lap, d, dim, false); }, &rhs);
  Eigen::SparseLU<SparseMatrix> lu;
  lu.compute(mat);
  if (lu.info() != Eigen::Success) throw NumericalFailure("harmonic_extension: factorization failed");
  const Eigen::VectorXd z = lu.solve(rhs);
  std::vector<double> out = boundary_values;
  for (int k : grid.unknowns()) out[k] = z(grid.unknown_index(k));
  return out;
}

// ---------------------------------------------------------------------------

double energy(const Grid& grid, const FluxProfile& profile, const std::vector<double>& v) {
  require_weight(grid, "energy");
  const double eps2 = profile.eps_reg() * profile.eps_reg();
  double acc = 0.0;
  for (const auto& e : grid.elements()) {
    const auto eg = element_gradient(e, v);
    acc += e.w * profile.potential(std::sqrt(eg.q + eps2));
  }
  return acc;
}

double energy_difference(const Grid& grid, const FluxProfile& profile, const std::vector<double>& v0,
                         const std::vector<double>& v1) {
  require_weight(grid, "energy_difference");
  const double eps2 = profile.eps_reg() * profile.eps_reg();
  // Per element: q1 - q0 = (D1 - D0)^T G (D1 + D0), s1 - s0 = (q1 - q0) / (s1 + s0).
  std::vector<double> dv(v0.size());
  for (std::size_t k = 0; k < v0.size(); ++k) dv[k] = v1[k] - v0[k];
  double acc = 0.0;
  for (const auto& e : grid.elements()) {
    const auto g0 = element_gradient(e, v0);
    const auto g1 = element_gradient(e, v1);
    const auto gd = element_gradient(e, dv);
    const double dq = gd.d.dot(e.ginv * (g0.d + g1.d));
    const double s0 = std::sqrt(g0.q + eps2), s1 = std::sqrt(g1.q + eps2);
    const double ds = dq / (s0 + s1);
    acc += e.w * profile.potential_increment(s0, s1, ds);
  }
  return acc;
}

std::vector<double> energy_gradient(const Grid& grid, const FluxProfile& profile, const std::vector<double>& v) {
  require_weight(grid, "energy_gradient");
  const double eps2 = profile.eps_reg() * profile.eps_reg();
  std::vector<double> grad(grid.size(), 0.0);
  for (const auto& e : grid.elements()) {
    const auto eg = element_gradient(e, v);
    const double s = std::sqrt(eg.q + eps2);
    const Eigen::Vector2d flux = e.w * profile.a(s) / s * (e.ginv * eg.d);
    grad[e.ix] += flux(0) * e.sx;
    grad[e.c] -= flux(0) * e.sx;
    if (e.iy >= 0) {
      grad[e.iy] += flux(1) * e.sy;
      grad[e.c] -= flux(1) * e.sy;
    }
  }
  return grad;
}

std::vector<double> divergence_residual(const Grid& grid, const FluxProfile& profile, const std::vector<double>& v) {
  const auto grad = energy_gradient(grid, profile, v);
  std::vector<double> out(grid.size(), 0.0);
  for (int k : grid.unknowns()) out[k] = -grad[k] / grid.geometry(k).mass;
  return out;
}

double apply_divergence_form(const FluxProfile& profile, const SolutionField& v, int node) {
  const Grid& grid = *v.grid;
  require_weight(grid, "apply_divergence_form");
  if (node < 0 || node >= grid.size() || grid.is_boundary(node))
    throw PreconditionError("apply_divergence_form: node is not an interior node");
  return divergence_residual(grid, profile, v.values)[node];
}

SparseMatrix energy_hessian(const Grid& grid, const FluxProfile& profile, const std::vector<double>& v,
                            HessianKind kind) {
  require_weight(grid, "energy_hessian");
  const double eps2 = profile.eps_reg() * profile.eps_reg();
  std::vector<Eigen::Triplet<double>> trip;
  trip.reserve(grid.elements().size() * 9);
  for (const auto& e : grid.elements()) {
    const auto eg = element_gradient(e, v);
    const double s = std::sqrt(eg.q + eps2);
    Eigen::Matrix2d k;
    if (kind == HessianKind::Laplacian) {
      k = e.ginv;
    } else {
      const double kappa = profile.a(s) / s;
      k = kappa * e.ginv;
      if (kind == HessianKind::Newton) {
        const Eigen::Vector2d u = e.ginv * eg.d;
        k += kappa * eval_b(profile, s) / (s * s) * u * u.transpose();
      }
    }
    k *= e.w;
    const int nodes[3] = {e.c, e.ix, e.iy};
    Eigen::Matrix<double, 2, 3> bmat;
    bmat << -e.sx, e.sx, 0.0, -e.sy, 0.0, e.sy;
    if (e.iy < 0) bmat.row(1).setZero();
    const Eigen::Matrix3d local = bmat.transpose() * k * bmat;
    for (int a = 0; a < 3; ++a) {
      if (nodes[a] < 0) continue;
      const int ra = grid.unknown_index(nodes[a]);
      if (ra < 0) continue;
      for (int b = 0; b < 3; ++b) {
        if (nodes[b] < 0) continue;
        const int cb = grid.unknown_index(nodes[b]);
        if (cb < 0 || local(a, b) == 0.0) continue;
        trip.emplace_back(ra, cb, local(a, b));
      }
    }
  }
  const int n = static_cast<int>(grid.unknowns().size());
  SparseMatrix h(n, n);
  h.setFromTriplets(trip.begin(), trip.end());
  return h;
}

}  // namespace orbitpde
