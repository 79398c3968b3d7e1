#include "orbitpde/verify.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "orbitpde/errors.hpp"

namespace orbitpde {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

// Ambient Levi-Civita connection applied to (x, y) at q.
Vec ambient_connection(const QuotientChart& chart, const Vec& q, const Vec& x, const Vec& y) {
  Vec out = Vec::Zero(q.size());
  if (chart.ambient != AmbientKind::HalfSpace) return out;
  // Gamma^k_ij = -(1/x_n)(d_ik d_jn + d_jk d_in - d_ij d_kn).
  const int n = static_cast<int>(q.size()) - 1;
  const double xn = q(n);
  for (int k = 0; k <= n; ++k) {
    double acc = x(k) * y(n) + y(k) * x(n);
    if (k == n) acc -= x.dot(y);
    out(k) = -acc / xn;
  }
  return out;
}

Vec cross(const Vec& a, const Vec& b) {
  Vec c(3);
  c << a(1) * b(2) - a(2) * b(1), a(2) * b(0) - a(0) * b(2), a(0) * b(1) - a(1) * b(0);
  return c;
}

}  // namespace

void VerificationReport::add_margin(const std::string& name, double margin, double tolerance) {
  flags.push_back({name, std::isfinite(margin) && margin >= -tolerance, margin, tolerance});
}

void VerificationReport::add_mismatch(const std::string& name, double mismatch, double tolerance) {
  flags.push_back({name, std::isfinite(mismatch) && mismatch <= tolerance, mismatch, tolerance});
}

bool VerificationReport::all_pass() const {
  return std::all_of(flags.begin(), flags.end(), [](const VerificationFlag& f) { return f.pass; });
}

MaxPrincipleMargins check_max_principle(const SolutionField& v) {
  const Grid& g = *v.grid;
  double bd_abs = 0.0, bd_max = -kInf, bd_min = kInf, all_abs = 0.0, all_max = -kInf, all_min = kInf;
  for (int k = 0; k < g.size(); ++k) {
    const double x = v.values[k];
    all_abs = std::max(all_abs, std::abs(x));
    all_max = std::max(all_max, x);
    all_min = std::min(all_min, x);
    if (g.is_boundary(k)) {
      bd_abs = std::max(bd_abs, std::abs(x));
      bd_max = std::max(bd_max, x);
      bd_min = std::min(bd_min, x);
    }
  }
  return {bd_abs - all_abs, bd_max - all_max, all_min - bd_min};
}

double check_comparison(const SolutionField& v1, const SolutionField& v2) {
  const Grid& g = *v1.grid;
  if (v1.grid != v2.grid && (v1.grid->size() != v2.grid->size() || v1.grid->dim() != v2.grid->dim()))
    throw PreconditionError("check_comparison: fields live on different grids");
  double margin = kInf;
  for (int k = 0; k < g.size(); ++k) {
    const double diff = v2.values[k] - v1.values[k];
    if (g.is_boundary(k) && diff < 0.0)
      throw PreconditionError("check_comparison: boundary data are not ordered");
    margin = std::min(margin, diff);
  }
  return margin;
}

double ambient_divergence(const QuotientChart& chart, const FluxProfile& profile,
                          const std::function<double(const Vec&)>& u, const Vec& q, double h) {
  const int n = static_cast<int>(q.size());
  const bool half = chart.ambient == AmbientKind::HalfSpace;
  const double eps2 = profile.eps_reg() * profile.eps_reg();
  // Component i of sqrt(G) (a/s) G^{ii} du/dx_i at p.
  auto flux = [&](const Vec& p, int i) {
    Vec grad(n);
    for (int j = 0; j < n; ++j) {
      Vec pp = p, pm = p;
      pp(j) += h;
      pm(j) -= h;
      grad(j) = (u(pp) - u(pm)) / (2 * h);
    }
    const double xn = half ? p(n - 1) : 1.0;
    const double s = std::sqrt(xn * xn * grad.squaredNorm() + eps2);
    const double conformal = half ? std::pow(xn, 2 - n) : 1.0;  // x_n^{-n} x_n^2
    return conformal * profile.a(s) / s * grad(i);
  };
  double acc = 0.0;
  for (int i = 0; i < n; ++i) {
    Vec qp = q, qm = q;
    qp(i) += h;
    qm(i) -= h;
    acc += (flux(qp, i) - flux(qm, i)) / (2 * h);
  }
  if (half) acc *= std::pow(q(n - 1), n);
  return acc;
}

ReductionCheck check_reduction(const FluxProfile& profile, const SolutionField& v, int max_samples) {
  const Grid& g = *v.grid;
  const QuotientChart& chart = g.chart();
  if (!chart.has_lift()) throw PreconditionError("check_reduction: chart has no lift");
  const auto sampler = lift_field(chart, v, 1.0);
  const double lo = chart.axes[0].lo, len = chart.axes[0].hi - chart.axes[0].lo;
  std::vector<int> nodes;
  for (int k : g.unknowns()) {
    const double x0 = g.point(k)(0);
    if (x0 >= lo + 0.2 * len && x0 <= lo + 0.8 * len) nodes.push_back(k);
  }
  if (nodes.empty()) throw PreconditionError("check_reduction: no sample nodes");
  const std::size_t stride = std::max<std::size_t>(1, nodes.size() / static_cast<std::size_t>(max_samples));
  const double h = g.axis(0).h;
  auto u = [&](const Vec& q) { return sampler.value(q); };
  ReductionCheck out;
  for (std::size_t i = 0; i < nodes.size(); i += stride) {
    const int k = nodes[i];
    const double t = 0.25 * std::sin(static_cast<double>(k));
    const Vec q = chart.lift(g.point(k), t);
    out.lift_residual = std::max(out.lift_residual, std::abs(ambient_divergence(chart, profile, u, q, h)));
    out.lift_gradient_mismatch =
        std::max(out.lift_gradient_mismatch, std::abs(sampler.gradient_norm(q, h) - v.gradient_norm(k)));
    ++out.samples;
  }
  return out;
}

LiftedCurvatureCheck check_lifted_curvature(const QuotientChart& chart, const std::function<Vec(double)>& curve, int samples) {
  if (chart.dim != 2 || chart.ambient_dim != 3 || !chart.has_lift())
    throw PreconditionError("check_lifted_curvature: needs a 2D chart with a lift to a 3D ambient space");
  const double e = 1e-4;
  LiftedCurvatureCheck out;
  for (int m = 0; m < samples; ++m) {
    const double sg = 2.0 * std::acos(-1.0) * m / samples;
    const Vec c = curve(sg);
    const Vec cp = (curve(sg + e) - curve(sg - e)) / (2 * e);
    const Vec cpp = (curve(sg + e) - 2 * c + curve(sg - e)) / (e * e);
    if (cp.norm() < 1e-10) throw PreconditionError("check_lifted_curvature: degenerate boundary parametrization");

    // Chart side: geodesic curvature plus <J, eta>, eta the left normal.
    const Mat gm = chart.metric(c);
    const auto gamma = chart.christoffel(c);
    Vec acc = cpp;
    for (int k = 0; k < 2; ++k) acc(k) += cp.dot(gamma[k] * cp);
    Vec ncov(2);
    ncov << -cp(1), cp(0);
    Vec eta = gm.inverse() * ncov;
    eta /= std::sqrt(eta.dot(gm * eta));
    const double kappa = acc.dot(gm * eta) / cp.dot(gm * cp);
    const double drift = chart.drift(c).dot(gm * eta);
    out.chart_side.push_back(kappa + drift);

    // Ambient side: second fundamental form of P(sigma, t) = lift(c(sigma), t) at t = 0.
    auto P = [&](double s, double t) { return chart.lift(curve(s), t); };
    const Vec p0 = P(sg, 0.0);
    const Vec ps = (P(sg + e, 0.0) - P(sg - e, 0.0)) / (2 * e);
    const Vec pt = (P(sg, e) - P(sg, -e)) / (2 * e);
    const Vec pss = (P(sg + e, 0.0) - 2 * p0 + P(sg - e, 0.0)) / (e * e);
    const Vec ptt = (P(sg, e) - 2 * p0 + P(sg, -e)) / (e * e);
    const Vec pst = (P(sg + e, e) - P(sg + e, -e) - P(sg - e, e) + P(sg - e, -e)) / (4 * e * e);
    const Mat G = chart.ambient_metric(p0);
    Vec nu = G.inverse() * cross(ps, pt);
    nu /= std::sqrt(nu.dot(G * nu));
    const Vec inward = (chart.lift(c + e * eta, 0.0) - chart.lift(c - e * eta, 0.0)) / (2 * e);
    if (inward.dot(G * nu) < 0) nu = -nu;
    const Vec* tang[2] = {&ps, &pt};
    const Vec* second[2][2] = {{&pss, &pst}, {&pst, &ptt}};
    Eigen::Matrix2d first, sff;
    for (int a = 0; a < 2; ++a)
      for (int b = 0; b < 2; ++b) {
        first(a, b) = tang[a]->dot(G * *tang[b]);
        const Vec cov = *second[a][b] + ambient_connection(chart, p0, *tang[a], *tang[b]);
        sff(a, b) = cov.dot(G * nu);
      }
    out.ambient.push_back((first.inverse() * sff).trace());
    const double rel = std::abs(out.ambient.back() - out.chart_side.back()) /
                       std::max(std::abs(out.ambient.back()), 1e-12);
    out.max_relative_mismatch = std::max(out.max_relative_mismatch, rel);
  }
  return out;
}

GradientMonitor gradient_monitor(const SolutionField& v) {
  const Grid& g = *v.grid;
  GradientMonitor out;
  out.max_interior = -1.0;
  out.max_overall = -1.0;
  int best_int = -1, best_all = -1;
  for (int k = 0; k < g.size(); ++k) {
    const double s = v.gradient_norm(k);
    if (s > out.max_overall) {
      out.max_overall = s;
      best_all = k;
    }
    if (!g.is_boundary(k) && s > out.max_interior) {
      out.max_interior = s;
      best_int = k;
    }
  }
  if (best_int >= 0) out.interior_location = g.point(best_int);
  else out.max_interior = 0.0;
  out.overall_location = g.point(best_all);
  out.attained_at_boundary = g.is_boundary(best_all);
  return out;
}

double check_boundary_gradient(const SolutionField& v, double bound) {
  const Grid& g = *v.grid;
  double worst = 0.0;
  for (int k = 0; k < g.size(); ++k)
    if (g.is_boundary(k)) worst = std::max(worst, v.gradient_norm(k));
  return 1.1 * bound - worst;
}

double check_barrier_sandwich(const SolutionField& v, const StripDistance& strip,
                              const std::function<double(const Vec&)>& psi, const BarrierSpec& spec) {
  const Grid& g = *v.grid;
  double margin = kInf;
  for (int k = 0; k < g.size(); ++k) {
    if (strip.d[k] > spec.delta) continue;
    const double p = psi(g.point(k));
    const double f = spec.f(strip.d[k]);
    margin = std::min({margin, p + f - v.values[k], v.values[k] - p + f});
  }
  return margin;
}

}  // namespace orbitpde
