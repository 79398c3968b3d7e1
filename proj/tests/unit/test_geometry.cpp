#include <cmath>
#include <memory>
#include <numbers>

#include "doctest.h"
#include "orbitpde/errors.hpp"
#include "orbitpde/geometry.hpp"
#include "orbitpde/grid.hpp"

using namespace orbitpde;

namespace {

Vec pt(double a, double b) {
  Vec p(2);
  p << a, b;
  return p;
}

Vec pt(double a) {
  Vec p(1);
  p << a;
  return p;
}

// -grad ln V in chart components by centered differences.
Vec fd_minus_grad_log_weight(const QuotientChart& c, const Vec& x, double h) {
  Vec dlog(c.dim);
  for (int a = 0; a < c.dim; ++a) {
    Vec xp = x, xm = x;
    xp(a) += h;
    xm(a) -= h;
    dlog(a) = (std::log(c.weight(xp)) - std::log(c.weight(xm))) / (2 * h);
  }
  return -c.metric(x).ldlt().solve(dlog);
}

}  // namespace

TEST_CASE("helicoidal slice metric and drift") {
  const Eigen::Matrix2d g0 = helicoidal_slice_metric(1.0, 0.0, 0.0);
  CHECK((g0 - Eigen::Matrix2d::Identity()).norm() == 0.0);
  CHECK(helicoidal_slice_drift(1.0, 0.0, 0.0).norm() == 0.0);

  const Eigen::Matrix2d g = helicoidal_slice_metric(1.0, 1.0, 0.0);
  CHECK(g(0, 0) == doctest::Approx(1.0));
  CHECK(g(1, 1) == doctest::Approx(0.5));
  CHECK(std::abs(g(0, 1)) < 1e-15);
  const Eigen::Vector2d j = helicoidal_slice_drift(1.0, 1.0, 0.0);
  CHECK(j(0) == doctest::Approx(-0.5));
  CHECK(std::abs(j(1)) < 1e-15);

  // Polar chart agrees with the Cartesian slice metric.
  const auto c = helicoidal_chart(1.3, 0.0, 2.0);
  for (double r : {0.3, 1.0, 1.7})
    for (double th : {0.2, 2.0, 4.1}) {
      Eigen::Matrix2d jac;
      jac << std::cos(th), -r * std::sin(th), std::sin(th), r * std::cos(th);
      const Eigen::Matrix2d polar = jac.transpose() * helicoidal_slice_metric(1.3, r * std::cos(th), r * std::sin(th)) * jac;
      const Mat gc = c.metric(pt(r, th));
      for (int a = 0; a < 2; ++a)
        for (int b = 0; b < 2; ++b) CHECK(gc(a, b) == doctest::Approx(polar(a, b)).epsilon(1e-13));
    }
  CHECK_THROWS_AS(helicoidal_chart(-1.0, 0.0, 1.0), PreconditionError);
}

TEST_CASE("helicoidal drift equals the curvature of the helix orbits") {
  const double lambda = 1.0;
  const auto c = helicoidal_chart(lambda, 0.0, 2.0);
  for (double r : {0.25, 0.5, 1.0, 1.5}) {
    const Vec p = pt(r, 0.7);
    // Orbit t -> h_t(p) differentiated numerically in the ambient space.
    const double h = 1e-3;
    const Vec q0 = c.lift(p, 0.0), qp = c.lift(p, h), qm = c.lift(p, -h);
    const Vec qpp = c.lift(p, 2 * h), qmm = c.lift(p, -2 * h);
    const Vec d1 = (8 * (qp - qm) - (qpp - qmm)) / (12 * h);
    const Vec d2 = (16 * (qp + qm) - (qpp + qmm) - 30 * q0) / (12 * h * h);
    const Vec tangent = d1 / d1.norm();
    const Vec accel = (d2 - d2.dot(tangent) * tangent) / d1.squaredNorm();
    const double magnitude = c.drift(p).norm();
    CHECK(std::abs(accel.norm() - magnitude) <= 1e-4 * magnitude);
    CHECK(magnitude == doctest::Approx(lambda * lambda * r / (1 + lambda * lambda * r * r)));
  }
  // Spec example at Cartesian (1, 0).
  CHECK(c.drift(pt(1.0, 0.0))(0) == doctest::Approx(-0.5));
}

TEST_CASE("drift and weight agree for built-in charts") {
  const std::vector<QuotientChart> charts{helicoidal_chart(1.0, 0.0, 1.0), hyperbolic_chart(3, 1.5),
                                          rotational_chart(1.5, 3.0), flat_polar_chart(0.0, 1.0)};
  for (const auto& c : charts) {
    std::vector<double> errs;
    for (double h : {1e-2, 5e-3}) {
      double worst = 0.0;
      for (double a : {0.3, 0.6, 0.9}) {
        Vec x = c.dim == 1 ? pt(c.axes[0].lo + a * (c.axes[0].hi - c.axes[0].lo)) : pt(a * c.axes[0].hi, 1.1);
        worst = std::max(worst, (c.drift(x) - fd_minus_grad_log_weight(c, x, h)).norm());
      }
      errs.push_back(worst);
    }
    CHECK(errs[0] <= 1e-3);
    // Centered differences: halving h divides the error by about four.
    if (errs[0] > 1e-12) CHECK(errs[1] <= 0.3 * errs[0]);
  }
}

TEST_CASE("rotational chart") {
  const auto c = rotational_chart(1.0, 3.0);
  CHECK(c.drift(pt(2.0))(0) == -0.5);
  CHECK(c.metric(pt(2.3))(0, 0) == 1.0);
  CHECK(c.weight(pt(2.0)) / c.weight(pt(1.0)) == doctest::Approx(2.0));
  CHECK_THROWS_AS(rotational_chart(2.0, 1.0), PreconditionError);
}

TEST_CASE("hyperbolic chart drift") {
  const Vec pole = Vec::Unit(3, 2);
  CHECK(hyperbolic_orbit_mean_curvature(pole).norm() == 0.0);

  Vec x(3);
  x << 1.0 / std::sqrt(2.0), 0.0, 1.0 / std::sqrt(2.0);
  const Vec h = hyperbolic_orbit_mean_curvature(x);
  CHECK(h(2) == doctest::Approx(0.5 / std::sqrt(2.0)));

  for (int n : {3, 4, 5}) {
    const auto c = hyperbolic_chart(n, 2.0);
    CHECK(c.dim == n - 1);
    std::vector<double> mags;
    for (double rho : {0.1, 0.8, 1.6}) {
      std::vector<double> at_rho;
      for (double s1 : {0.3, 1.2, 2.5}) {
        Vec p = Vec::Constant(c.dim, s1);
        p(0) = rho;
        if (c.dim > 2) p(c.dim - 1) = 2 * s1;
        const Vec j = c.drift(p);
        for (int a = 1; a < c.dim; ++a) CHECK(std::abs(j(a)) <= 1e-10);
        CHECK(j(0) == doctest::Approx(-std::tanh(rho)).epsilon(1e-12));
        at_rho.push_back(j.norm());
      }
      const double mean = (at_rho[0] + at_rho[1] + at_rho[2]) / 3;
      double var = 0.0;
      for (double m : at_rho) var += (m - mean) * (m - mean);
      CHECK(var / 3 <= 1e-10);
    }
    // Projection inverts the lift.
    Vec p = Vec::Constant(c.dim, 0.9);
    p(0) = 1.1;
    const Vec back = c.project(c.lift(p, 0.37));
    CHECK((back - p).norm() <= 1e-12);
  }
  CHECK_THROWS_AS(hyperbolic_chart(2, 1.0), PreconditionError);
}

TEST_CASE("metric is positive definite on built-in grids") {
  const std::vector<std::shared_ptr<const QuotientChart>> charts{
      std::make_shared<const QuotientChart>(helicoidal_chart(5.0, 0.0, 2.0)),
      std::make_shared<const QuotientChart>(hyperbolic_chart(3, 2.0)),
      std::make_shared<const QuotientChart>(rotational_chart(0.0, 1.0)),
      std::make_shared<const QuotientChart>(flat_rectangle_chart(0, 1, 0, 2))};
  for (const auto& c : charts) {
    const Grid g(c, 16, 16);
    for (int k = 0; k < g.size(); ++k) {
      const Eigen::SelfAdjointEigenSolver<Mat> eig(c->metric(g.point(k)));
      CHECK(eig.eigenvalues().minCoeff() > 1e-12);
    }
  }
}

TEST_CASE("grid node placement") {
  auto c = std::make_shared<const QuotientChart>(helicoidal_chart(1.0, 0.0, 1.0));
  const Grid g(c, 8, 16);
  CHECK(g.axis(0).x[7] == 1.0);
  CHECK(g.axis(0).x[0] == doctest::Approx(0.5 * g.axis(0).h));
  CHECK(g.axis(1).h == doctest::Approx(2 * std::numbers::pi / 16));
  // Reflection through the axis lands on the antipodal node of ring 0.
  CHECK(g.resolve(-1, 3) == g.index(0, 11));
  CHECK(g.resolve(2, -1) == g.index(2, 15));
  CHECK(g.unknowns().size() == 7u * 16u);
  // Dual volumes add up to the weighted area, which is pi R^2 for this chart.
  double total = 0.0;
  for (int k = 0; k < g.size(); ++k) total += g.geometry(k).mass;
  CHECK(total == doctest::Approx(std::numbers::pi).epsilon(1e-6));
  CHECK_THROWS_AS(Grid(c, 8, 15), PreconditionError);
  CHECK_THROWS_AS(Grid(std::make_shared<const QuotientChart>(hyperbolic_chart(4, 1.0)), 8, 8), PreconditionError);
}

TEST_CASE("lift and interpolation") {
  auto c = std::make_shared<const QuotientChart>(helicoidal_chart(1.0, 0.0, 1.0));
  auto g = std::make_shared<const Grid>(c, 32, 64);

  SUBCASE("constant field lifts to a constant") {
    const auto v = make_field(g, [](const Vec&) { return 2.5; });
    const auto u = lift_field(*c, v);
    for (double t : {-0.5, 0.0, 0.8}) {
      Vec q = c->lift(pt(0.4, 1.0), t);
      CHECK(u.value(q) == doctest::Approx(2.5).epsilon(1e-14));
      CHECK(u.gradient_norm(q, 1e-3) <= 1e-10);
    }
  }
  SUBCASE("invariance along orbits") {
    const auto v = make_field(g, [](const Vec& p) { return p(0) * std::cos(p(1)) + 0.3 * p(0) * p(0); });
    const auto u = lift_field(*c, v);
    const Vec p = pt(0.55, 2.2);
    const double base = u.value(c->lift(p, 0.0));
    for (double t : {-0.9, 0.35, 0.7}) CHECK(u.value(c->lift(p, t)) == doctest::Approx(base).epsilon(1e-13));
    Vec outside(3);
    outside << 0.1, 0.1, 5.0;
    CHECK_THROWS_AS(u.value(outside), PreconditionError);
  }
  SUBCASE("ambient gradient norm matches the chart gradient norm") {
    auto f = [](const Vec& p) { const double x = p(0) * std::cos(p(1)), y = p(0) * std::sin(p(1)); return x + 0.5 * x * y; };
    for (int n : {32, 64}) {
      auto gn = std::make_shared<const Grid>(c, n, 2 * n);
      const auto v = make_field(gn, f);
      const auto u = lift_field(*c, v);
      const double h = gn->spacing();
      double worst = 0.0;
      for (int k = 0; k < gn->size(); k += 7) {
        const Vec x = gn->point(k);
        if (x(0) < 0.2 || x(0) > 0.8) continue;
        worst = std::max(worst, std::abs(u.gradient_norm(c->lift(x, 0.3), h) - v.gradient_norm(k)));
      }
      CHECK(worst <= 5 * h);
    }
  }
  SUBCASE("cubic interpolation is exact for cubics") {
    auto flat = std::make_shared<const QuotientChart>(flat_rectangle_chart(0, 1, 0, 1));
    auto gf = std::make_shared<const Grid>(flat, 9, 9);
    const auto vf = make_field(gf, [](const Vec& p) { return p(0) * p(0) * p(0) - 2 * p(0) * p(1) * p(1); });
    CHECK(vf.interpolate(pt(0.33, 0.71)) ==
          doctest::Approx(0.33 * 0.33 * 0.33 - 2 * 0.33 * 0.71 * 0.71).epsilon(1e-12));
  }
}

TEST_CASE("mean convexity of helicoidal cylinders") {
  for (double lambda : {0.0, 1.0, 5.0})
    for (double r : {0.5, 1.0, 2.0}) {
      const auto v = helicoidal_mean_convexity(lambda, circle_samples(r, 64));
      CHECK(v.sufficient);
      CHECK(v.holds);
      for (const auto& s : v.samples) CHECK(s.value == doctest::Approx(1.0 / r));
    }
  const auto e = helicoidal_mean_convexity(2.0, ellipse_samples(2.0, 1.0, 4));
  CHECK(e.samples[0].value == doctest::Approx(26.0));
  CHECK(e.samples[1].value == doctest::Approx(-2.75));
  CHECK_FALSE(e.holds);
  CHECK(e.violations == 2);
  // lambda = 0 reduces to kappa >= 0.
  CHECK(helicoidal_mean_convexity(0.0, ellipse_samples(2.0, 1.0, 32)).holds);
  std::vector<CurveSample> bad(1);
  bad[0].dx = 2.0;
  CHECK_THROWS_AS(helicoidal_mean_convexity(1.0, bad), PreconditionError);
}
