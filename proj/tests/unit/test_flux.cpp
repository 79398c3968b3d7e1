#include <cmath>
#include <vector>

#include "doctest.h"
#include "orbitpde/errors.hpp"
#include "orbitpde/flux.hpp"

using namespace orbitpde;

namespace {

// Centered difference of ln a, times s: an independent estimate of b(s) + 1.
double fd_log_slope(const FluxProfile& f, double s) {
  const double h = 1e-5 * s;
  return s * (std::log(f.a(s + h)) - std::log(f.a(s - h))) / (2 * h);
}

// Same slope in extended precision and log-log coordinates, from the closed-form
// a(s) of each built-in. At large s the minimal surface a(s) is 1 - O(s^-2), which
// double-precision differences cannot resolve to 1e-6 relative.
long double ext_a(ProfileKind kind, long double p, long double s) {
  if (kind == ProfileKind::MinimalSurface) return s / std::sqrt(1.0L + s * s);
  return std::pow(s, p - 1.0L);
}

double ext_log_slope(const FluxProfile& f, double s) {
  const long double h = 1e-4L, ls = std::log(static_cast<long double>(s));
  auto la = [&](long double x) { return std::log(ext_a(f.kind(), f.p(), std::exp(x))); };
  const long double d1 = (la(ls + h) - la(ls - h)) / (2 * h);
  const long double d2 = (la(ls + 2 * h) - la(ls - 2 * h)) / (4 * h);
  return static_cast<double>((4 * d1 - d2) / 3);
}

}  // namespace

TEST_CASE("b(s) for built-in profiles") {
  for (double p : {1.5, 2.0, 3.0, 4.5}) {
    const auto f = FluxProfile::p_laplace(p);
    for (double s : {1e-3, 0.5, 1.0, 7.0, 1e3}) CHECK(std::abs(eval_b(f, s) - (p - 2.0)) <= 1e-10);
  }
  const auto ms = FluxProfile::minimal_surface();
  CHECK(eval_b(ms, 1.0) == doctest::Approx(-0.5).epsilon(1e-14));
  for (double s : {0.1, 1.0, 3.0}) CHECK(eval_b(ms, s) == doctest::Approx(-s * s / (1 + s * s)).epsilon(1e-13));
}

TEST_CASE("b(s) matches a finite-difference slope of ln a") {
  const std::vector<FluxProfile> profiles{FluxProfile::p_laplace(1.5), FluxProfile::p_laplace(3.0),
                                          FluxProfile::minimal_surface()};
  for (const auto& f : profiles) {
    CHECK(std::abs(eval_b(f, 1.0) + 1.0 - fd_log_slope(f, 1.0)) <= 1e-8);
    for (double s : log_grid(1e-4, 1e4, 1000)) {
      CHECK(f.a(s) > 0.0);
      CHECK(f.da(s) > 0.0);
      const double ref = ext_log_slope(f, s);
      CHECK(std::abs(eval_b(f, s) + 1.0 - ref) <= 1e-6 * std::abs(ref));
    }
  }
}

TEST_CASE("b'(s) against finite differences of b") {
  const auto ms = FluxProfile::minimal_surface();
  for (double s : {0.2, 1.0, 4.0}) {
    const double h = 1e-5 * s;
    const double fd = (eval_b(ms, s + h) - eval_b(ms, s - h)) / (2 * h);
    CHECK(eval_db(ms, s) == doctest::Approx(fd).epsilon(1e-7));
  }
}

TEST_CASE("eigenvalue ratio") {
  CHECK(eigenvalue_ratio(FluxProfile::p_laplace(2.0), 3.0) == 1.0);
  CHECK(eigenvalue_ratio(FluxProfile::minimal_surface(), 1.0) == doctest::Approx(0.5));
  CHECK(eigenvalue_ratio(FluxProfile::p_laplace(3.0), 5.0) == 1.0);
  const auto ms = FluxProfile::minimal_surface();
  for (double s : log_grid(1e-4, 1e4, 200)) {
    const double r = eigenvalue_ratio(ms, s);
    CHECK(r > 0.0);
    CHECK(r <= 1.0);
  }
}

TEST_CASE("profile validation") {
  CHECK_THROWS_AS(FluxProfile::p_laplace(0.5), ProfileInvalid);
  CHECK_THROWS_AS(FluxProfile::p_laplace(1.0), ProfileInvalid);
  CHECK_THROWS_AS(FluxProfile::tabulated({{0.1, 1.0}, {1.0, 0.5}, {2.0, 2.0}}), ProfileInvalid);
  CHECK_THROWS_AS(FluxProfile::tabulated({{1.0, 1.0}}), ProfileInvalid);
  CHECK_THROWS_AS(eval_b(FluxProfile::minimal_surface(), 0.0), PreconditionError);
}

TEST_CASE("tabulated profile reproduces sampled minimal surface") {
  const auto ms = FluxProfile::minimal_surface();
  std::vector<std::pair<double, double>> rows;
  for (double s : log_grid(1e-3, 1e3, 241)) rows.emplace_back(s, ms.a(s));
  const auto tab = FluxProfile::tabulated(rows);
  for (double s : {0.01, 0.3, 1.0, 2.5, 40.0}) {
    CHECK(tab.a(s) == doctest::Approx(ms.a(s)).epsilon(1e-6));
    CHECK(eval_b(tab, s) == doctest::Approx(eval_b(ms, s)).epsilon(1e-3));
  }
  CHECK(tab.potential(2.0) == doctest::Approx(ms.potential(2.0)).epsilon(1e-6));
}

TEST_CASE("potential increments stay accurate for nearby arguments") {
  const auto ms = FluxProfile::minimal_surface();
  const double s0 = 0.7, ds = 1e-9;
  // Phi(s0 + ds) - Phi(s0) = a(s0) ds + a'(s0) ds^2 / 2 to O(ds^3)
  const double ref = ms.a(s0) * ds + 0.5 * ms.da(s0) * ds * ds;
  CHECK(ms.potential_increment(s0, s0 + ds, ds) == doctest::Approx(ref).epsilon(1e-12));
  CHECK(ms.potential_increment(0.5, 2.0, 1.5) == doctest::Approx(ms.potential(2.0) - ms.potential(0.5)));
  const auto p3 = FluxProfile::p_laplace(3.0);
  CHECK(p3.potential(2.0) == doctest::Approx(8.0 / 3.0));
}

TEST_CASE("inverse of a") {
  const auto ms = FluxProfile::minimal_surface();
  for (double y : {0.1, 0.5, 0.99, 0.999999}) CHECK(ms.a(ms.inverse_a(y)) == doctest::Approx(y).epsilon(1e-13));
  CHECK_THROWS_AS(ms.inverse_a(1.0), PreconditionError);
  const auto p = FluxProfile::p_laplace(1.5);
  CHECK(p.a(p.inverse_a(3.0)) == doctest::Approx(3.0));
}

TEST_CASE("condition checks on worked cases") {
  const auto grid = log_grid(1.0, 1e4, 1000);
  SUBCASE("p-Laplace, Condition I with g = (p-1) s^2") {
    for (double p : {1.5, 2.0}) {
      const auto f = FluxProfile::p_laplace(p);
      ConditionWitness w{ConditionKind::I, WitnessFunction::power_law(p - 1.0, 2.0), 1.0, 0.0, 0.0, 1e4};
      CHECK(check_condition(f, w, grid).kind == VerdictKind::Holds);
    }
    // For p > 2 the left side is s^2, so (p-1) s^2 is too large.
    const auto f3 = FluxProfile::p_laplace(3.0);
    ConditionWitness too_big{ConditionKind::I, WitnessFunction::power_law(2.0, 2.0), 1.0, 0.0, 0.0, 1e4};
    const auto v = check_condition(f3, too_big, grid);
    CHECK(v.kind == VerdictKind::Fails);
    CHECK(v.failing_s == 1.0);
    ConditionWitness ok{ConditionKind::I, WitnessFunction::power_law(1.0, 2.0), 1.0, 0.0, 0.0, 1e4};
    CHECK(check_condition(f3, ok, grid).kind == VerdictKind::Holds);
  }
  SUBCASE("minimal surface, Condition II with g = 1/2") {
    const auto ms = FluxProfile::minimal_surface();
    ConditionWitness w{ConditionKind::II, WitnessFunction::power_law(0.5, 0.0), 1.0, 0.0, 0.0, 1e4};
    CHECK(check_condition(ms, w, grid).kind == VerdictKind::Holds);
    // Condition I needs divergence of int g/s^2, which a constant does not give.
    ConditionWitness wi{ConditionKind::I, WitnessFunction::power_law(0.5, 0.0), 1.0, 0.0, 0.0, 1e4};
    CHECK(check_condition(ms, wi, grid).kind == VerdictKind::Fails);
  }
  SUBCASE("minimal surface, Condition IV with alpha = 1/8, s0 = 2") {
    const auto ms = FluxProfile::minimal_surface();
    const auto g2 = log_grid(2.0, 1e4, 1000);
    ConditionWitness w{ConditionKind::IV, {}, 2.0, 0.125, 0.0, 1e4};
    CHECK(check_condition(ms, w, g2).kind == VerdictKind::Holds);
    // oracle: s^2 (s^2 - 1) / (1 + s^2)^2
    for (double s : {2.0, 5.0, 100.0}) {
      const double ref = s * s * (s * s - 1) / ((1 + s * s) * (1 + s * s));
      CHECK(condition_lhs(ms, ConditionKind::IV, s) == doctest::Approx(ref).epsilon(1e-12));
    }
    ConditionWitness too_low{ConditionKind::IV, {}, 0.5, 0.125, 0.0, 1e4};
    CHECK(check_condition(ms, too_low, log_grid(0.5, 1e4, 1000)).kind == VerdictKind::Fails);
  }
  SUBCASE("custom witnesses are inconclusive on the divergence side") {
    const auto ms = FluxProfile::minimal_surface();
    ConditionWitness w{ConditionKind::II, WitnessFunction::from_function([](double) { return 0.25; }), 1.0, 0.0, 0.0,
                       1e4};
    CHECK(check_condition(ms, w, grid).kind == VerdictKind::Inconclusive);
  }
  SUBCASE("preconditions") {
    const auto ms = FluxProfile::minimal_surface();
    ConditionWitness w{ConditionKind::II, WitnessFunction::power_law(0.5, 0.0), 1.0, 0.0, 0.0, 1e4};
    CHECK_THROWS_AS(check_condition(ms, w, std::vector<double>{}), PreconditionError);
    CHECK_THROWS_AS(check_condition(ms, w, std::vector<double>{0.5, 1.0}), PreconditionError);
  }
}

TEST_CASE("holds on a grid implies holds on every subset") {
  const auto ms = FluxProfile::minimal_surface();
  const auto grid = log_grid(2.0, 1e4, 1000);
  ConditionWitness w{ConditionKind::IV, {}, 2.0, 0.125, 0.0, 1e4};
  REQUIRE(check_condition(ms, w, grid).kind == VerdictKind::Holds);
  for (std::size_t stride : {2u, 7u, 101u}) {
    std::vector<double> sub;
    for (std::size_t k = 0; k < grid.size(); k += stride) sub.push_back(grid[k]);
    CHECK(check_condition(ms, w, sub).kind == VerdictKind::Holds);
  }
}

TEST_CASE("classification") {
  const auto ms = classify(FluxProfile::minimal_surface());
  CHECK(ms.regular);
  REQUIRE(ms.sder);
  REQUIRE(ms.cond4);
  CHECK_FALSE(ms.mder);
  CHECK(ms.sder->g_or_h.coeff == doctest::Approx(0.5));
  CHECK(ms.cond4->s0 == 2.0);
  CHECK(ms.cond4->alpha == doctest::Approx(0.24));

  const auto p3 = classify(FluxProfile::p_laplace(3.0));
  CHECK_FALSE(p3.regular);
  CHECK(p3.mder);
  CHECK(p3.cond3);

  const auto p2 = classify(FluxProfile::p_laplace(2.0));
  CHECK(p2.regular);
  REQUIRE(p2.mder);
  CHECK(p2.mder->g_or_h.coeff == doctest::Approx(1.0));
  CHECK(p2.mder->g_or_h.exponent == 2.0);

  const auto p15 = classify(FluxProfile::p_laplace(1.5));
  CHECK(p15.mder);
  CHECK(p15.cond3);

  // Deterministic.
  const auto again = classify(FluxProfile::minimal_surface());
  CHECK(again.cond4->alpha == ms.cond4->alpha);
  CHECK(again.sder->g_or_h.coeff == ms.sder->g_or_h.coeff);
}
