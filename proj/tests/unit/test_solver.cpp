#include <chrono>
#include <cmath>
#include <memory>

#include "doctest.h"
#include "orbitpde/errors.hpp"
#include "orbitpde/solver.hpp"

using namespace orbitpde;

namespace {

std::shared_ptr<const QuotientChart> share(QuotientChart c) { return std::make_shared<const QuotientChart>(std::move(c)); }

DomainSpec catenoid_problem() {
  return {share(rotational_chart(1.5, 3.0)), [](const Vec& x) { return std::acosh(x(0)); }, {}};
}

double catenoid_error(const SolutionField& f) {
  double err = 0.0;
  for (int k = 0; k < f.grid->size(); ++k)
    err = std::max(err, std::abs(f.values[k] - std::acosh(f.grid->point(k)(0))));
  return err;
}

SolveSettings settings_for(Scheme scheme, int n1, int n2 = 1) {
  SolveSettings s;
  s.scheme = scheme;
  s.n1 = n1;
  s.n2 = n2;
  s.max_iterations = 500;
  return s;
}

}  // namespace

TEST_CASE("linear data on flat charts") {
  const auto p2 = FluxProfile::p_laplace(2.0);
  const auto ms = FluxProfile::minimal_surface();
  auto lin = [](const Vec& p) { return 0.4 * p(0) - 1.3 * p(1) + 0.25; };
  // Corner-triangle elements reproduce linear functions on a Cartesian grid.
  for (const auto& prof : {p2, ms}) {
    const DomainSpec rect{share(flat_rectangle_chart(0, 1, 0, 1)), lin, {}};
    const auto r = solve(rect, prof, settings_for(Scheme::Newton, 24, 24));
    REQUIRE(r.field.converged);
    for (int k = 0; k < r.field.grid->size(); ++k) CHECK(std::abs(r.field.values[k] - lin(r.field.grid->point(k))) <= 1e-9);
  }
  // On the polar disk u = x is reproduced to second order.
  auto x = [](const Vec& p) { return p(0) * std::cos(p(1)); };
  const DomainSpec disk{share(flat_polar_chart(0.0, 1.0)), x, {}};
  std::vector<double> errs;
  for (int n : {16, 32, 64}) {
    const auto r = solve(disk, p2, settings_for(Scheme::Newton, n, 2 * n));
    REQUIRE(r.field.converged);
    double e = 0.0;
    for (int k = 0; k < r.field.grid->size(); ++k) e = std::max(e, std::abs(r.field.values[k] - x(r.field.grid->point(k))));
    errs.push_back(e);
  }
  CHECK(std::log2(errs[0] / errs[1]) >= 1.9);
  CHECK(std::log2(errs[1] / errs[2]) >= 1.9);
}

TEST_CASE("catenoid oracle") {
  const auto ms = FluxProfile::minimal_surface();
  const auto prob = catenoid_problem();
  CHECK_THROWS_AS(solve(prob, ms, settings_for(Scheme::Newton, 64)), GateFailure);
  std::vector<double> errs;
  const auto t0 = std::chrono::steady_clock::now();
  for (int n : {64, 128, 256, 512}) {
    auto s = settings_for(Scheme::Newton, n);
    s.override_gate = true;
    const auto r = solve(prob, ms, s);
    REQUIRE(r.field.converged);
    CHECK(r.report.gate.overridden);
    CHECK(r.field.residual_norm <= s.tolerance);
    errs.push_back(catenoid_error(r.field));
  }
  const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  CHECK(errs.back() <= 1e-4);
  for (int l = 0; l < 3; ++l) CHECK(std::log2(errs[l] / errs[l + 1]) >= 1.9);
  CHECK(secs < 5.0);
}

TEST_CASE("schemes agree and follow their contracts") {
  const auto ms = FluxProfile::minimal_surface();
  const auto prob = catenoid_problem();
  std::vector<SolveResult> res;
  for (Scheme sc : {Scheme::Picard, Scheme::Newton, Scheme::EnergyDescent}) {
    auto s = settings_for(sc, 128);
    s.override_gate = true;
    res.push_back(solve(prob, ms, s));
    REQUIRE(res.back().field.converged);
  }
  for (int k = 0; k < res[0].field.grid->size(); ++k) {
    CHECK(std::abs(res[0].field.values[k] - res[1].field.values[k]) <= 1e-9);
    CHECK(std::abs(res[2].field.values[k] - res[1].field.values[k]) <= 1e-9);
  }
  // Energy never increases across accepted descent steps.
  const auto& eh = res[2].report.energy_history;
  REQUIRE(eh.size() >= 2);
  for (std::size_t i = 1; i < eh.size(); ++i) CHECK(eh[i] <= eh[i - 1]);

  // Newton from a poor start: superlinear decay once the residual is small.
  auto s = settings_for(Scheme::Newton, 256);
  s.harmonic_start = false;
  auto grid = std::make_shared<const Grid>(prob.chart, 256);
  NonlinearSolver ns(grid, ms, s);
  std::vector<double> v0(grid->size());
  for (int k = 0; k < grid->size(); ++k) {
    const double r = grid->point(k)(0);
    v0[k] = grid->is_boundary(k) ? std::acosh(r) : std::acosh(1.5) + (r - 1.5) / 1.5 * (std::acosh(3.0) - std::acosh(1.5));
  }
  SolveReport rep;
  const auto f = ns.run(v0, &rep);
  REQUIRE(f.converged);
  const auto& h = rep.residual_history;
  // Below about eps/h^2 the residual is roundoff and the rate is meaningless.
  const double floor = 10 * 2.2e-16 / (grid->axis(0).h * grid->axis(0).h);
  int checked = 0;
  for (std::size_t i = 0; i + 1 < h.size(); ++i) {
    if (h[i] >= 1e-3 || h[i + 1] <= floor) continue;
    CHECK(std::log(h[i + 1]) / std::log(h[i]) >= 1.5);
    ++checked;
  }
  CHECK(checked >= 1);
}

TEST_CASE("picard solves the Laplacian in one step") {
  const auto p2 = FluxProfile::p_laplace(2.0);
  const DomainSpec prob{share(helicoidal_chart(1.0, 0.0, 1.0)),
                        [](const Vec& x) { return std::sin(x(1)) + 0.5 * std::cos(2 * x(1)); }, {}};
  const auto r = solve(prob, p2, settings_for(Scheme::Picard, 24, 48));
  CHECK(r.field.converged);
  CHECK(r.report.iterations == 1);
}

TEST_CASE("trivial and invariance properties") {
  const auto ms = FluxProfile::minimal_surface();
  const DomainSpec zero{share(helicoidal_chart(1.0, 0.0, 1.0)), [](const Vec&) { return 0.0; }, {}};
  const auto r0 = solve(zero, ms, settings_for(Scheme::Newton, 24, 48));
  CHECK(r0.field.converged);
  for (double v : r0.field.values) CHECK(std::abs(v) <= 1e-14);

  auto psi = [](const Vec& x) { return 0.3 * x(0) * std::cos(x(1)); };
  const DomainSpec a{zero.chart, psi, {}};
  const DomainSpec b{zero.chart, [&](const Vec& x) { return psi(x) + 2.5; }, {}};
  const auto s = settings_for(Scheme::Newton, 24, 48);
  const auto ra = solve(a, ms, s), rb = solve(b, ms, s);
  for (int k = 0; k < ra.field.grid->size(); ++k)
    CHECK(std::abs(rb.field.values[k] - ra.field.values[k] - 2.5) <= 10 * s.tolerance);
  CHECK(ra.report.gate.path == "SDER");
  CHECK(ra.report.gate.passed);
  CHECK(ra.report.verification.all_pass());
}

TEST_CASE("non-divergence path and failures") {
  const auto ms = FluxProfile::minimal_surface();
  auto psi = [](const Vec& x) { return 0.3 * x(0) * std::cos(x(1)); };
  const DomainSpec hel{share(helicoidal_chart(1.0, 0.0, 1.0)), psi, {}};
  auto sd = settings_for(Scheme::Newton, 32, 64);
  auto sn = sd;
  sn.form = Discretization::NonDivergence;
  const auto rd = solve(hel, ms, sd), rn = solve(hel, ms, sn);
  REQUIRE(rn.field.converged);
  CHECK(rn.report.form == Discretization::NonDivergence);
  double diff = 0.0;
  for (int k = 0; k < rd.field.grid->size(); ++k) diff = std::max(diff, std::abs(rd.field.values[k] - rn.field.values[k]));
  CHECK(diff <= 1e-3);
  sn.scheme = Scheme::Picard;
  CHECK(solve(hel, ms, sn).field.converged);

  // A chart without orbit volume goes to the non-divergence path.
  CustomChartTable t;
  t.axes = {{"x", 0.0, 1.0, EdgeTag::Boundary, EdgeTag::Boundary}, {"y", 0.0, 1.0, EdgeTag::Boundary, EdgeTag::Boundary}};
  t.nodes = {2, 2};
  t.metric.assign(4, {1.0, 0.0, 1.0});
  t.drift.assign(4, {0.5, 0.0});
  const DomainSpec drift{share(custom_chart(t)), [](const Vec& x) { return x(0) * x(1); }, {}};
  const auto rc = solve(drift, FluxProfile::p_laplace(2.0), settings_for(Scheme::Newton, 16, 16));
  CHECK(rc.field.converged);
  CHECK(rc.report.form == Discretization::NonDivergence);
  CHECK_THROWS_AS(solve(drift, FluxProfile::p_laplace(2.0), settings_for(Scheme::EnergyDescent, 16, 16)),
                  PreconditionError);

  auto s1 = settings_for(Scheme::EnergyDescent, 32, 64);
  s1.max_iterations = 1;
  const auto rf = solve(hel, ms, s1);
  CHECK_FALSE(rf.field.converged);
  CHECK(rf.field.iterations == 1);
  CHECK_FALSE(rf.report.warnings.empty());
  CHECK_THROWS_AS(scheme_from_string("gauss_seidel"), PreconditionError);
}
