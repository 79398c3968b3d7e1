#include "orbitpde/barrier.hpp"

#include <algorithm>
#include <boost/math/quadrature/exp_sinh.hpp>
#include <boost/math/quadrature/tanh_sinh.hpp>
#include <limits>
#include <queue>
#include <sstream>

#include "orbitpde/errors.hpp"
#include "orbitpde/operators.hpp"

namespace orbitpde {

namespace {

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();
constexpr double kInf = std::numeric_limits<double>::infinity();

Eigen::Matrix2d metric_from_inverse(const Eigen::Matrix2d& ginv, int dim) {
  if (dim == 1) {
    Eigen::Matrix2d g = Eigen::Matrix2d::Zero();
    g(0, 0) = 1.0 / ginv(0, 0);
    return g;
  }
  return ginv.inverse();
}

double vector_norm(const Eigen::Matrix2d& ginv, const Eigen::Vector2d& covector) {
  return std::sqrt(std::max(0.0, covector.dot(ginv * covector)));
}

// Sorted-candidate update of the first-order eikonal equation
// sum_a ((d - t_a)^+ / c_a)^2 = 1.
double eikonal_update(std::vector<std::pair<double, double>> cand) {
  std::sort(cand.begin(), cand.end());
  double d = cand[0].first + cand[0].second;
  if (cand.size() > 1 && d > cand[1].first) {
    const double w1 = 1.0 / (cand[0].second * cand[0].second);
    const double w2 = 1.0 / (cand[1].second * cand[1].second);
    const double t1 = cand[0].first, t2 = cand[1].first;
    const double a = w1 + w2;
    const double b = -2.0 * (t1 * w1 + t2 * w2);
    const double c = t1 * t1 * w1 + t2 * t2 * w2 - 1.0;
    const double disc = b * b - 4 * a * c;
    if (disc >= 0) d = (-b + std::sqrt(disc)) / (2 * a);
  }
  return d;
}

}  // namespace

double tensor_norm(const Eigen::Matrix2d& ginv, const Eigen::Matrix2d& t, int dim) {
  if (dim == 1) return std::abs(ginv(0, 0) * t(0, 0));
  // Eigenvalues of ginv t are those of the symmetric g^{-1/2} t g^{-1/2}.
  Eigen::SelfAdjointEigenSolver<Eigen::Matrix2d> es(ginv);
  const Eigen::Matrix2d root = es.operatorSqrt();
  const Eigen::Matrix2d sym = root * t * root;
  Eigen::SelfAdjointEigenSolver<Eigen::Matrix2d> ev(0.5 * (sym + sym.transpose()));
  return ev.eigenvalues().cwiseAbs().maxCoeff();
}

StripDistance strip_distance(const Grid& grid, double delta) {
  const int n = grid.size();
  const int dim = grid.dim();
  for (int k = 0; k < n; ++k) {
    const auto& gi = grid.geometry(k).ginv;
    if (dim == 2 && std::abs(gi(0, 1)) > 1e-12 * (gi(0, 0) + gi(1, 1)))
      throw PreconditionError("strip_distance: fast marching needs a diagonal metric");
  }
  StripDistance out;
  out.d.assign(n, kInf);
  std::vector<char> done(n, 0);
  using Item = std::pair<double, int>;
  std::priority_queue<Item, std::vector<Item>, std::greater<>> heap;
  for (int k = 0; k < n; ++k)
    if (grid.is_boundary(k)) {
      out.d[k] = 0.0;
      heap.emplace(0.0, k);
    }
  if (heap.empty()) throw PreconditionError("strip_distance: grid has no boundary nodes");

  auto update = [&](int k) {
    const auto [i, j] = grid.ij(k);
    const auto& gi = grid.geometry(k).ginv;
    std::vector<std::pair<double, double>> cand;
    for (int a = 0; a < dim; ++a) {
      double t = kInf;
      for (int s : {-1, 1}) {
        const int nb = a == 0 ? grid.resolve(i + s, j) : grid.resolve(i, j + s);
        if (nb >= 0 && done[nb]) t = std::min(t, out.d[nb]);
      }
      if (t < kInf) cand.emplace_back(t, grid.axis(a).h / std::sqrt(gi(a, a)));
    }
    if (cand.empty()) return;
    const double d = eikonal_update(cand);
    if (d < out.d[k]) {
      out.d[k] = d;
      heap.emplace(d, k);
    }
  };

  while (!heap.empty()) {
    const auto [dk, k] = heap.top();
    heap.pop();
    if (done[k] || dk > out.d[k]) continue;
    done[k] = 1;
    const auto [i, j] = grid.ij(k);
    for (int a = 0; a < dim; ++a)
      for (int s : {-1, 1}) {
        const int nb = a == 0 ? grid.resolve(i + s, j) : grid.resolve(i, j + s);
        if (nb >= 0 && !done[nb]) update(nb);
      }
  }

  out.grad.assign(n, Eigen::Vector2d::Constant(kNaN));
  out.hess.assign(n, Eigen::Matrix2d::Constant(kNaN));
  out.laplacian.assign(n, kNaN);
  for (int k = 0; k < n; ++k) {
    NodeDerivatives nd;
    try {
      nd = node_derivatives(grid, out.d, k);
    } catch (const PreconditionError&) {
      continue;
    }
    out.grad[k] = nd.grad;
    out.hess[k] = nd.hess;
    const auto& gi = grid.geometry(k).ginv;
    double lap = 0.0;
    for (int a = 0; a < dim; ++a)
      for (int b = 0; b < dim; ++b) lap += gi(a, b) * nd.hess(a, b);
    out.laplacian[k] = lap;
  }

  // Width estimate: walk outward while |Hess d| stays near its boundary value.
  std::vector<int> order;
  double dmax = 0.0, first_layer = kInf;
  for (int k = 0; k < n; ++k) {
    dmax = std::max(dmax, out.d[k]);
    if (out.has_derivatives(k) && out.d[k] > 0) {
      order.push_back(k);
      first_layer = std::min(first_layer, out.d[k]);
    }
  }
  std::sort(order.begin(), order.end(), [&](int a, int b) { return out.d[a] < out.d[b]; });
  double rim = 0.0;
  for (int k : order)
    if (out.d[k] <= 1.5 * first_layer) rim = std::max(rim, tensor_norm(grid.geometry(k).ginv, out.hess[k], dim));
  const double limit = 10.0 * std::max(rim, 1.0 / std::max(2.0 * dmax, 1e-300));
  double delta0 = 0.5 * dmax;
  for (int k : order) {
    if (out.d[k] > delta0) break;
    if (tensor_norm(grid.geometry(k).ginv, out.hess[k], dim) > limit) {
      delta0 = std::max(0.0, out.d[k] - 1e-12);
      break;
    }
  }
  out.delta0 = delta0;
  if (delta <= 0.0) {
    out.delta = delta0;
  } else if (delta > delta0) {
    std::ostringstream os;
    os << "strip width " << delta << " exceeds the focal-radius estimate " << delta0 << "; shrunk";
    out.warnings.push_back(os.str());
    out.delta = delta0;
  } else {
    out.delta = delta;
  }
  return out;
}

ParallelConvexityVerdict check_parallel_convexity(const Grid& grid, const StripDistance& strip) {
  ParallelConvexityVerdict out;
  const double h = std::max(grid.axis(0).h, grid.dim() == 2 ? grid.axis(1).h : 0.0);
  out.tolerance = grid.spacing();
  out.worst_margin = kInf;
  std::vector<ParallelLevel> levels;
  for (int k = 0; k < grid.size(); ++k) {
    if (!strip.in_strip(k) || !strip.has_derivatives(k) || strip.d[k] <= 0.0) continue;
    const auto& geo = grid.geometry(k);
    double drift = 0.0;
    for (int a = 0; a < grid.dim(); ++a) drift += geo.drift(a) * strip.grad[k](a);
    const double margin = -strip.laplacian[k] + drift;
    const auto bin = static_cast<std::size_t>(strip.d[k] / h);
    if (levels.size() <= bin) levels.resize(bin + 1, ParallelLevel{0.0, kInf, 0});
    auto& lv = levels[bin];
    lv.d = h * (static_cast<double>(bin) + 0.5);
    lv.worst_margin = std::min(lv.worst_margin, margin);
    ++lv.nodes;
    out.worst_margin = std::min(out.worst_margin, margin);
  }
  for (auto& lv : levels)
    if (lv.nodes > 0) out.levels.push_back(lv);
  if (out.levels.empty()) throw PreconditionError("check_parallel_convexity: no level set in the strip");
  out.holds = out.worst_margin >= -out.tolerance;
  return out;
}

ParallelConvexityVerdict check_parallel_convexity(const Grid& grid, double delta) {
  return check_parallel_convexity(grid, strip_distance(grid, delta));
}

std::string to_string(BarrierBranch branch) { return branch == BarrierBranch::MDER ? "MDER" : "SDER"; }

double BarrierSpec::f(double d) const {
  if (d_nodes.empty()) return 0.0;
  if (d <= d_nodes.front()) return df_nodes.front() * (d - d_nodes.front()) + f_nodes.front();
  if (d >= d_nodes.back()) return f_nodes.back() + df_nodes.back() * (d - d_nodes.back());
  const auto it = std::upper_bound(d_nodes.begin(), d_nodes.end(), d);
  const std::size_t i = static_cast<std::size_t>(it - d_nodes.begin()) - 1;
  const double h = d_nodes[i + 1] - d_nodes[i];
  const double t = (d - d_nodes[i]) / h;
  const double h00 = 2 * t * t * t - 3 * t * t + 1, h10 = t * t * t - 2 * t * t + t;
  const double h01 = -2 * t * t * t + 3 * t * t, h11 = t * t * t - t * t;
  return h00 * f_nodes[i] + h10 * h * df_nodes[i] + h01 * f_nodes[i + 1] + h11 * h * df_nodes[i + 1];
}

double BarrierSpec::df(double d) const {
  if (d_nodes.empty()) return 0.0;
  if (d <= d_nodes.front()) return df_nodes.front();
  if (d >= d_nodes.back()) return df_nodes.back();
  const auto it = std::upper_bound(d_nodes.begin(), d_nodes.end(), d);
  const std::size_t i = static_cast<std::size_t>(it - d_nodes.begin()) - 1;
  const double t = (d - d_nodes[i]) / (d_nodes[i + 1] - d_nodes[i]);
  return (1 - t) * df_nodes[i] + t * df_nodes[i + 1];
}

namespace {

struct PsiData {
  double grad_norm = 0.0, hess_norm = 0.0;
};

PsiData psi_derivatives(const Grid& grid, int k, const std::function<double(const Vec&)>& psi) {
  const int dim = grid.dim();
  const Vec x = grid.point(k);
  Eigen::Vector2d grad = Eigen::Vector2d::Zero();
  Eigen::Matrix2d hess = Eigen::Matrix2d::Zero();
  std::array<double, 2> e{};
  for (int a = 0; a < dim; ++a) e[a] = 1e-4 * std::max(1.0, std::abs(x(a)));
  const double f0 = psi(x);
  for (int a = 0; a < dim; ++a) {
    Vec xp = x, xm = x;
    xp(a) += e[a];
    xm(a) -= e[a];
    const double fp = psi(xp), fm = psi(xm);
    grad(a) = (fp - fm) / (2 * e[a]);
    hess(a, a) = (fp - 2 * f0 + fm) / (e[a] * e[a]);
  }
  if (dim == 2) {
    Vec pp = x, pm = x, mp = x, mm = x;
    pp(0) += e[0], pp(1) += e[1];
    pm(0) += e[0], pm(1) -= e[1];
    mp(0) -= e[0], mp(1) += e[1];
    mm(0) -= e[0], mm(1) -= e[1];
    hess(0, 1) = hess(1, 0) = (psi(pp) - psi(pm) - psi(mp) + psi(mm)) / (4 * e[0] * e[1]);
  }
  const auto& geo = grid.geometry(k);
  for (int m = 0; m < dim; ++m) hess -= geo.gamma[m] * grad(m);
  return {vector_norm(geo.ginv, grad), tensor_norm(geo.ginv, hess, dim)};
}

}  // namespace

BarrierSpec build_supersolution(const Grid& grid, const StripDistance& strip,
                                const std::function<double(const Vec&)>& psi, const FluxProfile& profile,
                                const ConditionWitness& witness, bool heuristic) {
  (void)profile;
  BarrierSpec spec;
  if (witness.kind == ConditionKind::I)
    spec.branch = BarrierBranch::MDER;
  else if (witness.kind == ConditionKind::II)
    spec.branch = BarrierBranch::SDER;
  else
    throw PreconditionError("build_supersolution: witness must be of Condition I or II");
  if (spec.branch == BarrierBranch::SDER && !heuristic) {
    const auto conv = check_parallel_convexity(grid, strip);
    if (!conv.holds) {
      std::ostringstream os;
      os << "build_supersolution: inner parallels violate H + <J, eta> >= 0 (worst margin " << conv.worst_margin
         << ")";
      throw PreconditionError(os.str());
    }
  }
  spec.heuristic = heuristic;
  const int dim = grid.dim();
  const double sqrt_m = std::sqrt(static_cast<double>(dim));

  double c1 = 0.0, mder_c = 0.0, sder_a = 0.0, hess_d = 0.0;
  double psi_bd_max = -kInf, psi_bd_min = kInf, psi_strip_max = -kInf, psi_strip_min = kInf;
  for (int k = 0; k < grid.size(); ++k) {
    if (!strip.in_strip(k)) continue;
    const double pk = psi(grid.point(k));
    psi_strip_max = std::max(psi_strip_max, pk);
    psi_strip_min = std::min(psi_strip_min, pk);
    if (grid.is_boundary(k)) {
      psi_bd_max = std::max(psi_bd_max, pk);
      psi_bd_min = std::min(psi_bd_min, pk);
    }
    const auto& geo = grid.geometry(k);
    const auto pd = psi_derivatives(grid, k, psi);
    const double jn = vector_norm(metric_from_inverse(geo.ginv, dim), geo.drift);
    const double hd = strip.has_derivatives(k) ? tensor_norm(geo.ginv, strip.hess[k], dim) : 0.0;
    c1 = std::max(c1, pd.grad_norm);
    hess_d = std::max(hess_d, hd);
    mder_c = std::max(mder_c, (sqrt_m + jn) * (1.0 + pd.grad_norm + pd.hess_norm + hd));
    sder_a = std::max(sder_a, (sqrt_m + jn) * (pd.grad_norm + pd.hess_norm));
  }
  spec.c1 = c1;
  if (spec.branch == BarrierBranch::MDER) {
    spec.C = 4.0 * mder_c;
  } else {
    const double c0 = 2.25 * hess_d * (2.0 * c1 + c1 * c1);
    spec.C = 4.0 * sder_a + 4.0 * c0;
  }
  spec.required_height = std::max({0.0, psi_bd_max - psi_strip_min, psi_strip_max - psi_bd_min});

  const int k_exp = spec.branch == BarrierBranch::MDER ? 3 : 2;
  const double arg = spec.branch == BarrierBranch::MDER ? 2.0 / 3.0 : 4.0 / 3.0;
  const double s0_floor = spec.branch == BarrierBranch::MDER ? 1.5 * witness.s0 : 0.75 * witness.s0;
  double alpha = std::max({1.0, 3.0 * c1, s0_floor});
  spec.alpha_floor = alpha;

  const double delta = strip.delta;
  if (!(delta > 0.0)) throw PreconditionError("build_supersolution: empty strip");
  const auto& g = witness.g_or_h;
  auto rate = [&](double y) { return spec.C * std::pow(y, k_exp) / g(arg * y); };

  constexpr double kBlowUp = 1e12;
  for (int attempt = 0; attempt < 60; ++attempt) {
    std::vector<double> tau{0.0}, y{alpha}, height{0.0};
    bool blown = false, reached = spec.required_height <= 0.0;
    double t = 0.0;
    while (true) {
      if (reached && t >= 0.25 * delta) break;
      if (t >= delta) break;
      const double yc = y.back();
      const double r = rate(yc);
      double dt = std::min(delta / 400.0, delta - t);
      if (reached) dt = std::min(dt, 0.25 * delta - t);
      if (r > 0) dt = std::min(dt, 0.02 * yc / r);
      // RK4 on (y, H).
      const double k1 = r, k2 = rate(yc + 0.5 * dt * k1), k3 = rate(yc + 0.5 * dt * k2), k4 = rate(yc + dt * k3);
      const double yn = yc + dt / 6.0 * (k1 + 2 * k2 + 2 * k3 + k4);
      const double hn = height.back() + dt / 6.0 * (yc + 2 * (yc + 0.5 * dt * k1) + 2 * (yc + 0.5 * dt * k2) +
                                                    (yc + dt * k3));
      if (!std::isfinite(yn) || yn > kBlowUp) {
        blown = true;
        break;
      }
      t += dt;
      tau.push_back(t);
      y.push_back(yn);
      height.push_back(hn);
      if (hn >= spec.required_height) reached = true;
      if (dt <= 1e-15 * delta) {
        blown = true;
        break;
      }
    }
    if (!reached) {
      if (blown) {
        std::ostringstream os;
        os << "barrier not found at this delta (" << delta << "): f' blows up at height " << height.back()
           << " below the required " << spec.required_height;
        throw BarrierNotFound(os.str(), delta);
      }
      alpha *= 2.0;
      spec.alpha_floor = alpha;
      continue;
    }
    const double width = tau.back();
    spec.delta = width;
    const std::size_t m = tau.size();
    spec.d_nodes.resize(m);
    spec.f_nodes.resize(m);
    spec.df_nodes.resize(m);
    for (std::size_t i = 0; i < m; ++i) {
      const std::size_t src = m - 1 - i;
      spec.d_nodes[i] = width - tau[src];
      spec.f_nodes[i] = height.back() - height[src];
      spec.df_nodes[i] = y[src];
    }
    spec.d_nodes[0] = 0.0;
    spec.f_nodes[0] = 0.0;
    spec.gradient_bound = spec.df_nodes[0] + c1;
    return spec;
  }
  throw BarrierNotFound("barrier not found: no admissible alpha", delta);
}

SupersolutionCheck check_supersolution(const Grid& grid, const StripDistance& strip,
                                       const std::function<double(const Vec&)>& psi, const FluxProfile& profile,
                                       const BarrierSpec& spec) {
  SupersolutionCheck out;
  const int n = grid.size();
  std::vector<double> up(n), lo(n);
  for (int k = 0; k < n; ++k) {
    const double p = psi(grid.point(k));
    const double f = spec.f(std::min(strip.d[k], spec.delta));
    up[k] = p + f;
    lo[k] = p - f;
  }
  double fpp = 0.0;
  for (std::size_t i = 0; i + 1 < spec.d_nodes.size(); ++i) {
    const double dd = spec.d_nodes[i + 1] - spec.d_nodes[i];
    if (dd > 0) fpp = std::max(fpp, std::abs(spec.df_nodes[i + 1] - spec.df_nodes[i]) / dd);
  }
  const double h = grid.spacing();
  out.tolerance = h * h * (1.0 + fpp + spec.df_nodes.front());
  out.max_upper = -kInf;
  out.min_lower = kInf;
  for (int k : grid.unknowns()) {
    if (!strip.has_derivatives(k)) continue;
    const auto [i, j] = grid.ij(k);
    bool inside = true;
    for (int di = -1; di <= 1 && inside; ++di)
      for (int dj = -1; dj <= 1; ++dj) {
        if (grid.dim() == 1 && dj != 0) continue;
        const int nb = grid.resolve(i + di, j + dj);
        if (nb < 0 || strip.d[nb] > spec.delta) {
          inside = false;
          break;
        }
      }
    if (!inside) continue;
    out.max_upper = std::max(out.max_upper, apply_operator(grid, profile, up, k));
    out.min_lower = std::min(out.min_lower, apply_operator(grid, profile, lo, k));
    ++out.nodes;
  }
  out.holds = out.nodes > 0 && out.max_upper <= out.tolerance && out.min_lower >= -out.tolerance;
  return out;
}

// ---------------------------------------------------------------------------

double HyperbolicBarrier::integrand(double t) const {
  const double lc = std::log1p(2.0 * std::pow(std::sinh(0.5 * t), 2));  // ln cosh t
  const double y = c * std::exp((2.0 - n) * lc);
  if (!(y > 0.0)) return 0.0;
  if (profile.kind() == ProfileKind::MinimalSurface) {
    // a^{-1}(y) = y / sqrt(1 - y^2) with 1 - y formed without cancellation.
    const double one_minus = (1.0 - c) - c * std::expm1((2.0 - n) * lc);
    return y / std::sqrt(one_minus * (1.0 + y));
  }
  return profile.inverse_a(y);
}

double HyperbolicBarrier::dg(double s) const { return -integrand(s); }

double HyperbolicBarrier::g(double s) const {
  boost::math::quadrature::tanh_sinh<double> ts;
  boost::math::quadrature::exp_sinh<double> es;
  auto f = [this](double t) { return integrand(t); };
  constexpr double tol = 1e-14;
  double near = 0.0;
  if (s < 0.0 && s + 1.0 > 0.0)
    near = ts.integrate(f, s, 0.0, tol) + ts.integrate(f, 0.0, s + 1.0, tol);
  else
    near = ts.integrate(f, s, s + 1.0, tol);
  return near + es.integrate(f, s + 1.0, kInf, tol);
}

HyperbolicBarrier hyperbolic_barrier(int n, double c, const FluxProfile& profile, int nodes, double s_max) {
  if (n < 3) throw PreconditionError("hyperbolic_barrier: n must be at least 3");
  if (!(c > 0.0) || !(c < profile.a_sup())) throw PreconditionError("hyperbolic_barrier: c outside (0, sup a)");
  if (nodes < 2) throw PreconditionError("hyperbolic_barrier: need at least two nodes");
  HyperbolicBarrier hb;
  hb.n = n;
  hb.c = c;
  hb.profile = profile;
  for (int i = 0; i < nodes; ++i) {
    const double s = s_max * i / (nodes - 1);
    hb.s_grid.push_back(s);
    hb.g_values.push_back(hb.g(s));
  }
  return hb;
}

double conservation_residual(const HyperbolicBarrier& hb) {
  const double h = 1e-3;
  double worst = 0.0;
  for (double s : hb.s_grid) {
    const double dg = (hb.g(s - 2 * h) - 8 * hb.g(s - h) + 8 * hb.g(s + h) - hb.g(s + 2 * h)) / (12 * h);
    const double lhs = std::pow(std::cosh(s), hb.n - 2) * hb.profile.a(-dg);
    worst = std::max(worst, std::abs(lhs - hb.c));
  }
  return worst;
}

HyperbolicStripCheck check_hyperbolic_supersolution(const HyperbolicBarrier& hb, double radius, double offset,
                                                    int n1, int n2, double tolerance, double s_min) {
  if (hb.n != 3) throw PreconditionError("check_hyperbolic_supersolution: only n = 3 has a planar chart");
  auto chart = std::make_shared<const QuotientChart>(hyperbolic_chart(3, radius));
  const Grid grid(chart, n1, n2);
  const int n = grid.size();
  std::vector<double> s(n), w(n, kNaN);
  for (int k = 0; k < n; ++k) {
    const Vec x = grid.point(k);
    s[k] = std::asinh(std::sinh(x(0)) * std::cos(x(1)) * std::cosh(offset) - std::cosh(x(0)) * std::sinh(offset));
    if (s[k] > 0.0) w[k] = hb.g(s[k]);
  }
  HyperbolicStripCheck out;
  out.max_q = -kInf;
  for (int k : grid.unknowns()) {
    if (s[k] <= s_min) continue;
    const Vec x = grid.point(k);
    const double ds_drho =
        (std::cosh(x(0)) * std::cos(x(1)) * std::cosh(offset) - std::sinh(x(0)) * std::sinh(offset)) /
        std::cosh(s[k]);
    const double ds_j = -std::tanh(x(0)) * ds_drho;
    if (ds_j >= -1e-3) continue;
    const auto [i, j] = grid.ij(k);
    bool ok = true;
    for (int di = -1; di <= 1 && ok; ++di)
      for (int dj = -1; dj <= 1; ++dj) {
        const int nb = grid.resolve(i + di, j + dj);
        if (nb < 0 || !(s[nb] > 0.0)) {
          ok = false;
          break;
        }
      }
    if (!ok) continue;
    out.max_q = std::max(out.max_q, apply_operator(grid, hb.profile, w, k));
    ++out.nodes;
  }
  out.holds = out.nodes > 0 && out.max_q <= tolerance;
  return out;
}

}  // namespace orbitpde
