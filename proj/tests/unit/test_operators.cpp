#include <cmath>
#include <memory>
#include <random>

#include "doctest.h"
#include "orbitpde/errors.hpp"
#include "orbitpde/operators.hpp"

using namespace orbitpde;

namespace {

std::shared_ptr<const QuotientChart> share(QuotientChart c) { return std::make_shared<const QuotientChart>(std::move(c)); }

// Flat 2D chart with constant drift and no weight.
std::shared_ptr<const QuotientChart> drifting_square(double jx, double jy) {
  CustomChartTable t;
  t.axes = {{"x", 0.0, 1.0, EdgeTag::Boundary, EdgeTag::Boundary}, {"y", 0.0, 1.0, EdgeTag::Boundary, EdgeTag::Boundary}};
  t.nodes = {2, 2};
  t.metric.assign(4, {1.0, 0.0, 1.0});
  t.drift.assign(4, {jx, jy});
  return share(custom_chart(t));
}

double catenoid(const Vec& p) { return std::acosh(p(0)); }

double max_abs_interior(const Grid& g, const std::vector<double>& r) {
  double m = 0.0;
  for (int k : g.unknowns()) m = std::max(m, std::abs(r[k]));
  return m;
}

}  // namespace

TEST_CASE("operator on flat charts") {
  const auto ms = FluxProfile::minimal_surface();
  auto sq = share(flat_rectangle_chart(0, 1, 0, 1));
  auto g = std::make_shared<const Grid>(sq, 12, 9);
  const auto lin = make_field(g, [](const Vec& p) { return 2.0 * p(0) - 0.7 * p(1) + 1.0; });
  for (int k : g->unknowns()) {
    CHECK(std::abs(apply_operator(ms, lin, k)) <= 1e-10);
    CHECK(std::abs(apply_divergence_form(ms, lin, k)) <= 1e-10);
  }
  auto dr = drifting_square(1.0, 0.0);
  auto gd = std::make_shared<const Grid>(dr, 10, 10);
  const auto x = make_field(gd, [](const Vec& p) { return p(0); });
  for (int k : gd->unknowns()) CHECK(apply_operator(FluxProfile::p_laplace(2.0), x, k) == doctest::Approx(-1.0));
  CHECK_THROWS_AS(apply_divergence_form(ms, x, gd->unknowns()[0]), PreconditionError);
  CHECK_THROWS_AS(apply_operator(ms, x, 0), PreconditionError);
  const auto c0 = make_field(g, [](const Vec&) { return 3.0; });
  for (int k : g->unknowns()) CHECK(apply_divergence_form(ms, c0, k) == 0.0);
}

TEST_CASE("catenoid residuals are second order") {
  const auto ms = FluxProfile::minimal_surface();
  auto c = share(rotational_chart(1.5, 3.0));
  std::vector<double> nd, dv;
  for (int n : {65, 129, 257}) {
    auto g = std::make_shared<const Grid>(c, n);
    const auto v = make_field(g, catenoid);
    nd.push_back(max_abs_interior(*g, operator_residual(*g, ms, v.values)));
    dv.push_back(max_abs_interior(*g, divergence_residual(*g, ms, v.values)));
  }
  for (int l = 0; l + 1 < 3; ++l) {
    CHECK(std::log2(nd[l] / nd[l + 1]) >= 1.9);
    CHECK(std::log2(dv[l] / dv[l + 1]) >= 1.9);
  }
  CHECK(nd[2] <= 1e-4);
  CHECK(dv[2] <= 1e-4);
}

TEST_CASE("divergence form equals (a/s) times Q_J up to O(h)") {
  const auto ms = FluxProfile::minimal_surface();
  auto sq = share(flat_rectangle_chart(0, 1, 0, 1));
  std::vector<double> diffs;
  for (int n : {17, 33, 65}) {
    auto g = std::make_shared<const Grid>(sq, n, n);
    const auto v = make_field(g, [](const Vec& p) { return std::sin(p(0)) * std::cosh(p(1)); });
    const auto div = divergence_residual(*g, ms, v.values);
    const auto q = operator_residual(*g, ms, v.values);
    double worst = 0.0;
    for (int k : g->unknowns()) {
      const double s = v.gradient_norm(k);
      worst = std::max(worst, std::abs(div[k] / (ms.a(s) / s) - q[k]));
    }
    diffs.push_back(worst);
  }
  CHECK(diffs[1] < 0.6 * diffs[0]);
  CHECK(diffs[2] < 0.6 * diffs[1]);
  CHECK(diffs[2] <= 0.05);
}

TEST_CASE("energy derivatives match finite differences") {
  const std::vector<FluxProfile> profiles{FluxProfile::minimal_surface(), FluxProfile::p_laplace(3.0),
                                          FluxProfile::p_laplace(1.5)};
  const std::vector<std::shared_ptr<const QuotientChart>> charts{share(helicoidal_chart(1.0, 0.0, 1.0)),
                                                                 share(rotational_chart(1.5, 3.0)),
                                                                 share(hyperbolic_chart(3, 1.0))};
  std::mt19937 rng(7);
  std::uniform_real_distribution<double> unif(-1.0, 1.0);
  for (const auto& prof : profiles)
    for (const auto& c : charts) {
      auto g = std::make_shared<const Grid>(c, 8, 8);
      std::vector<double> v(g->size());
      for (auto& x : v) x = unif(rng);
      const auto grad = energy_gradient(*g, prof, v);
      const auto hess = Eigen::MatrixXd(energy_hessian(*g, prof, v, HessianKind::Newton));
      for (int probe = 0; probe < 4; ++probe) {
        const int k = g->unknowns()[(probe * 5) % g->unknowns().size()];
        const double h = 1e-6;
        auto vp = v, vm = v;
        vp[k] += h;
        vm[k] -= h;
        const double fd = energy_difference(*g, prof, vm, vp) / (2 * h);
        CHECK(grad[k] == doctest::Approx(fd).epsilon(1e-6));
        const auto gp = energy_gradient(*g, prof, vp), gm = energy_gradient(*g, prof, vm);
        for (int l : g->unknowns()) {
          const double fdh = (gp[l] - gm[l]) / (2 * h);
          CHECK(hess(g->unknown_index(l), g->unknown_index(k)) ==
                doctest::Approx(fdh).epsilon(1e-5).scale(1e-6 * std::abs(hess(g->unknown_index(k), g->unknown_index(k)))));
        }
      }
      // Stable difference agrees with the plain one for a large step.
      std::vector<double> w(v.size());
      for (std::size_t i = 0; i < v.size(); ++i) w[i] = v[i] + 0.3 * unif(rng);
      CHECK(energy_difference(*g, prof, v, w) == doctest::Approx(energy(*g, prof, w) - energy(*g, prof, v)).epsilon(1e-9));
    }
}

TEST_CASE("operator Jacobian matches finite differences") {
  const auto ms = FluxProfile::minimal_surface();
  auto c = share(helicoidal_chart(1.0, 0.0, 1.0));
  auto g = std::make_shared<const Grid>(c, 8, 8);
  std::vector<double> v(g->size());
  for (int k = 0; k < g->size(); ++k) {
    const Vec p = g->point(k);
    v[k] = std::sin(2 * p(1)) * p(0) + p(0) * p(0);
  }
  const auto jac = Eigen::MatrixXd(operator_jacobian(*g, ms, v));
  const double h = 1e-6;
  for (int probe : {0, 9, 30, 55}) {
    const int k = g->unknowns()[probe];
    auto vp = v, vm = v;
    vp[k] += h;
    vm[k] -= h;
    const auto rp = operator_residual(*g, ms, vp), rm = operator_residual(*g, ms, vm);
    for (int l : g->unknowns()) {
      const double fd = (rp[l] - rm[l]) / (2 * h);
      CHECK(jac(g->unknown_index(l), g->unknown_index(k)) == doctest::Approx(fd).epsilon(1e-5).scale(1.0));
    }
  }
}
