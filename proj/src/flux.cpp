#include "orbitpde/flux.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <limits>
#include <sstream>

#include "orbitpde/errors.hpp"

namespace orbitpde {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

// 5-point Gauss-Legendre on [-1, 1].
constexpr std::array<double, 5> kGlNodes{-0.9061798459386640, -0.5384693101056831, 0.0,
                                         0.5384693101056831, 0.9061798459386640};
constexpr std::array<double, 5> kGlWeights{0.2369268850561891, 0.4786286704993665,
                                           0.5688888888888889, 0.4786286704993665,
                                           0.2369268850561891};

template <class F>
double gauss_legendre(F&& f, double s0, double ds) {
  const double mid = s0 + 0.5 * ds;
  double acc = 0.0;
  for (std::size_t k = 0; k < kGlNodes.size(); ++k) acc += kGlWeights[k] * f(mid + 0.5 * ds * kGlNodes[k]);
  return 0.5 * ds * acc;
}

}  // namespace

// Monotone cubic in (ln s, ln a).
struct FluxProfile::Table {
  std::vector<double> x;  // ln s
  std::vector<double> y;  // ln a
  std::vector<double> m;  // dy/dx at knots

  double value(double lx) const {
    const std::size_t n = x.size();
    if (lx <= x.front()) return y.front() + m.front() * (lx - x.front());
    if (lx >= x.back()) return y.back() + m.back() * (lx - x.back());
    const auto it = std::upper_bound(x.begin(), x.end(), lx);
    const std::size_t k = static_cast<std::size_t>(it - x.begin()) - 1;
    (void)n;
    const double h = x[k + 1] - x[k];
    const double t = (lx - x[k]) / h;
    const double t2 = t * t, t3 = t2 * t;
    return (2 * t3 - 3 * t2 + 1) * y[k] + (t3 - 2 * t2 + t) * h * m[k] + (-2 * t3 + 3 * t2) * y[k + 1] +
           (t3 - t2) * h * m[k + 1];
  }

  double slope(double lx) const {
    if (lx <= x.front()) return m.front();
    if (lx >= x.back()) return m.back();
    const auto it = std::upper_bound(x.begin(), x.end(), lx);
    const std::size_t k = static_cast<std::size_t>(it - x.begin()) - 1;
    const double h = x[k + 1] - x[k];
    const double t = (lx - x[k]) / h;
    const double t2 = t * t;
    return ((6 * t2 - 6 * t) * y[k] + (3 * t2 - 4 * t + 1) * h * m[k] + (-6 * t2 + 6 * t) * y[k + 1] +
            (3 * t2 - 2 * t) * h * m[k + 1]) /
           h;
  }
};

FluxProfile::FluxProfile(ProfileKind kind, double p)
    : kind_(kind), p_(p), eps_reg_(p == 2.0 ? 1e-8 : 1e-4) {}

FluxProfile FluxProfile::p_laplace(double p) {
  if (!(p > 1.0) || !std::isfinite(p)) {
    std::ostringstream os;
    os << "p-Laplace profile requires p > 1, got " << p;
    throw ProfileInvalid(os.str());
  }
  FluxProfile out(ProfileKind::PLaplace, p);
  out.validate();
  return out;
}

FluxProfile FluxProfile::minimal_surface() {
  FluxProfile out(ProfileKind::MinimalSurface, 2.0);
  out.validate();
  return out;
}

FluxProfile FluxProfile::tabulated(std::vector<std::pair<double, double>> table, double p) {
  if (!(p > 1.0) || !std::isfinite(p)) throw ProfileInvalid("tabulated profile requires p > 1");
  if (table.size() < 2) throw ProfileInvalid("tabulated profile needs at least two rows");
  std::sort(table.begin(), table.end());
  auto t = std::make_shared<Table>();
  for (std::size_t k = 0; k < table.size(); ++k) {
    const auto [s, a] = table[k];
    if (!(s > 0.0) || !(a > 0.0) || !std::isfinite(s) || !std::isfinite(a))
      throw ProfileInvalid("tabulated profile needs s > 0 and a(s) > 0 in every row");
    if (k > 0 && !(s > table[k - 1].first)) throw ProfileInvalid("tabulated profile has repeated s values");
    if (k > 0 && !(a > table[k - 1].second))
      throw ProfileInvalid("tabulated profile is not strictly increasing (a' <= 0 near s = " + std::to_string(s) + ")");
    t->x.push_back(std::log(s));
    t->y.push_back(std::log(a));
  }
  // Fritsch-Carlson slopes.
  const std::size_t n = t->x.size();
  std::vector<double> delta(n - 1);
  for (std::size_t k = 0; k + 1 < n; ++k) delta[k] = (t->y[k + 1] - t->y[k]) / (t->x[k + 1] - t->x[k]);
  t->m.resize(n);
  t->m.front() = delta.front();
  t->m.back() = delta.back();
  for (std::size_t k = 1; k + 1 < n; ++k) {
    const double h0 = t->x[k] - t->x[k - 1], h1 = t->x[k + 1] - t->x[k];
    const double w1 = 2 * h1 + h0, w2 = h1 + 2 * h0;
    t->m[k] = (w1 + w2) / (w1 / delta[k - 1] + w2 / delta[k]);
  }
  FluxProfile out(ProfileKind::Tabulated, p);
  out.table_ = std::move(t);
  out.validate();
  return out;
}

FluxProfile FluxProfile::with_eps_reg(double eps) const {
  if (!(eps >= 0.0)) throw PreconditionError("eps_reg must be >= 0");
  FluxProfile out = *this;
  out.eps_reg_ = eps;
  return out;
}

std::string FluxProfile::name() const {
  switch (kind_) {
    case ProfileKind::PLaplace: {
      std::ostringstream os;
      os << "p_laplace(p=" << p_ << ")";
      return os.str();
    }
    case ProfileKind::MinimalSurface:
      return "minimal_surface";
    case ProfileKind::Tabulated:
      return "table(" + std::to_string(table_->x.size()) + " rows)";
  }
  return "unknown";
}

void FluxProfile::validate() const {
  const auto samples = log_grid(1e-4, 1e4, 1000);
  const double lo = std::min(1.0, p_ - 1.0);
  for (double s : samples) {
    const double av = a(s), dav = da(s), Av = A(s);
    if (!(av > 0.0) || !(dav > 0.0) || !(Av > 0.0)) {
      std::ostringstream os;
      os << name() << ": a > 0, a' > 0, A > 0 violated at s = " << s;
      throw ProfileInvalid(os.str());
    }
    if (!(lo + s * dA(s) / Av > 0.0)) {
      std::ostringstream os;
      os << name() << ": min{1,p-1} + sA'/A > 0 violated at s = " << s;
      throw ProfileInvalid(os.str());
    }
  }
}

double FluxProfile::a(double s) const {
  switch (kind_) {
    case ProfileKind::PLaplace:
      return std::pow(s, p_ - 1.0);
    case ProfileKind::MinimalSurface:
      return s / std::sqrt(1.0 + s * s);
    case ProfileKind::Tabulated:
      return s > 0.0 ? std::exp(table_->value(std::log(s))) : 0.0;
  }
  return 0.0;
}

double FluxProfile::log_slope(double s) const {
  switch (kind_) {
    case ProfileKind::PLaplace:
      return p_ - 1.0;
    case ProfileKind::MinimalSurface:
      return 1.0 / (1.0 + s * s);
    case ProfileKind::Tabulated:
      return table_->slope(std::log(s));
  }
  return 0.0;
}

double FluxProfile::da(double s) const {
  switch (kind_) {
    case ProfileKind::PLaplace:
      return (p_ - 1.0) * std::pow(s, p_ - 2.0);
    case ProfileKind::MinimalSurface:
      return std::pow(1.0 + s * s, -1.5);
    case ProfileKind::Tabulated:
      return a(s) * log_slope(s) / s;
  }
  return 0.0;
}

double FluxProfile::d2a(double s) const {
  switch (kind_) {
    case ProfileKind::PLaplace:
      return (p_ - 1.0) * (p_ - 2.0) * std::pow(s, p_ - 3.0);
    case ProfileKind::MinimalSurface:
      return -3.0 * s * std::pow(1.0 + s * s, -2.5);
    case ProfileKind::Tabulated: {
      const double h = 1e-5 * s;
      return (da(s + h) - da(s - h)) / (2.0 * h);
    }
  }
  return 0.0;
}

double FluxProfile::A(double s) const {
  switch (kind_) {
    case ProfileKind::PLaplace:
      return 1.0;
    case ProfileKind::MinimalSurface:
      return 1.0 / std::sqrt(1.0 + s * s);
    case ProfileKind::Tabulated:
      return a(s) / std::pow(s, p_ - 1.0);
  }
  return 0.0;
}

double FluxProfile::dA(double s) const {
  switch (kind_) {
    case ProfileKind::PLaplace:
      return 0.0;
    case ProfileKind::MinimalSurface:
      return -s * std::pow(1.0 + s * s, -1.5);
    case ProfileKind::Tabulated:
      // A'/A = (ln a)' - (p-1)/s
      return A(s) * (log_slope(s) - (p_ - 1.0)) / s;
  }
  return 0.0;
}

double FluxProfile::potential(double s) const {
  switch (kind_) {
    case ProfileKind::PLaplace:
      return std::pow(s, p_) / p_;
    case ProfileKind::MinimalSurface:
      return s * s / (std::sqrt(1.0 + s * s) + 1.0);
    case ProfileKind::Tabulated: {
      // Below the first knot a is a power law, integrate it in closed form.
      const double s_first = std::exp(table_->x.front());
      const double k = table_->m.front();
      const double lo = std::min(s, s_first);
      double acc = a(lo) * lo / (k + 1.0);
      if (s > s_first) acc += potential_increment(s_first, s, s - s_first);
      return acc;
    }
  }
  return 0.0;
}

double FluxProfile::potential_increment(double s0, double s1, double ds) const {
  const double scale = std::max(std::abs(s0), std::abs(s1));
  if (std::abs(ds) <= 1e-3 * scale) {
    return gauss_legendre([this](double t) { return a(t); }, s0, ds);
  }
  if (kind_ != ProfileKind::Tabulated) return potential(s1) - potential(s0);
  // Composite rule with panels no wider than 5% of the local argument.
  const double lo = std::min(s0, s1);
  const int panels = std::clamp(static_cast<int>(std::ceil(std::abs(ds) / (0.05 * std::max(lo, 1e-12)))), 1, 20000);
  const double h = ds / panels;
  double acc = 0.0;
  for (int k = 0; k < panels; ++k) acc += gauss_legendre([this](double t) { return a(t); }, s0 + k * h, h);
  return acc;
}

double FluxProfile::a_sup() const {
  switch (kind_) {
    case ProfileKind::PLaplace:
      return kInf;
    case ProfileKind::MinimalSurface:
      return 1.0;
    case ProfileKind::Tabulated:
      return table_->m.back() > 0.0 ? kInf : std::exp(table_->y.back());
  }
  return kInf;
}

double FluxProfile::inverse_a(double y) const {
  if (!(y > 0.0) || !(y < a_sup())) {
    std::ostringstream os;
    os << name() << ": a(s) = " << y << " has no solution";
    throw PreconditionError(os.str());
  }
  switch (kind_) {
    case ProfileKind::PLaplace:
      return std::pow(y, 1.0 / (p_ - 1.0));
    case ProfileKind::MinimalSurface:
      return y / std::sqrt((1.0 - y) * (1.0 + y));
    case ProfileKind::Tabulated: {
      double lo = 1e-300, hi = 1.0;
      while (a(hi) < y) hi *= 2.0;
      lo = hi;
      while (a(lo) > y && lo > 1e-300) lo *= 0.5;
      for (int it = 0; it < 200 && hi - lo > 1e-16 * hi; ++it) {
        const double mid = 0.5 * (lo + hi);
        (a(mid) < y ? lo : hi) = mid;
      }
      return 0.5 * (lo + hi);
    }
  }
  return 0.0;
}

double eval_b(const FluxProfile& profile, double s) {
  if (!(s > 0.0)) throw PreconditionError("eval_b requires s > 0");
  const double se = std::max(s, profile.eps_reg());
  if (!(profile.a(se) > 0.0)) throw ProfileInvalid(profile.name() + ": a(s) <= 0");
  if (profile.kind() == ProfileKind::PLaplace) return profile.p() - 2.0;
  return profile.log_slope(se) - 1.0;
}

double eval_db(const FluxProfile& profile, double s) {
  if (!(s > 0.0)) throw PreconditionError("eval_db requires s > 0");
  switch (profile.kind()) {
    case ProfileKind::PLaplace:
      return 0.0;
    case ProfileKind::MinimalSurface: {
      const double q = 1.0 + s * s;
      return -2.0 * s / (q * q);
    }
    case ProfileKind::Tabulated: {
      const double h = 1e-5 * s;
      return (profile.log_slope(s + h) - profile.log_slope(s - h)) / (2.0 * h);
    }
  }
  return 0.0;
}

double eigenvalue_ratio(const FluxProfile& profile, double s) {
  return 1.0 + std::min(eval_b(profile, s), 0.0);
}

// ---------------------------------------------------------------------------

std::string to_string(ConditionKind kind) {
  switch (kind) {
    case ConditionKind::I:
      return "I";
    case ConditionKind::II:
      return "II";
    case ConditionKind::III:
      return "III";
    case ConditionKind::IV:
      return "IV";
  }
  return "?";
}

std::string to_string(VerdictKind kind) {
  switch (kind) {
    case VerdictKind::Holds:
      return "holds";
    case VerdictKind::Fails:
      return "fails";
    case VerdictKind::Inconclusive:
      return "inconclusive";
  }
  return "?";
}

double WitnessFunction::operator()(double s) const {
  if (custom) return custom(s);
  return coeff * std::pow(s, exponent);
}

std::string WitnessFunction::describe() const {
  if (custom) return "custom";
  std::ostringstream os;
  os.precision(17);
  os << coeff << "*s^" << exponent;
  return os.str();
}

double condition_lhs(const FluxProfile& profile, ConditionKind kind, double s, double beta) {
  const double b = eval_b(profile, s);
  const double s2 = s * s;
  switch (kind) {
    case ConditionKind::I:
    case ConditionKind::II:
      return (1.0 + std::min(b, 0.0)) * s2;
    case ConditionKind::III:
      return (b + 1.0 - beta * std::max(eval_db(profile, s), 0.0) * s) * s2;
    case ConditionKind::IV:
      return (-eval_db(profile, s) * s - (b + 1.0)) * s2;
  }
  return 0.0;
}

ConditionVerdict check_condition(const FluxProfile& profile, const ConditionWitness& witness,
                                 std::span<const double> grid) {
  if (grid.empty()) throw PreconditionError("check_condition: empty grid");
  std::vector<double> samples(grid.begin(), grid.end());
  std::sort(samples.begin(), samples.end());
  const double lo = witness.s0 * (1.0 - 1e-12), hi = witness.s_max * (1.0 + 1e-12);
  if (samples.front() < lo || samples.back() > hi || !(samples.front() > 0.0))
    throw PreconditionError("check_condition: grid outside the witness range [s0, s_max]");
  if (witness.kind == ConditionKind::III && !(witness.beta > 0.0))
    throw PreconditionError("check_condition: Condition III needs beta > 0");
  if (witness.kind == ConditionKind::IV && !(witness.alpha > 0.0))
    throw PreconditionError("check_condition: Condition IV needs alpha > 0");

  ConditionVerdict verdict;
  verdict.kind = VerdictKind::Holds;
  verdict.worst_margin = kInf;
  double previous_g = 0.0;
  for (std::size_t k = 0; k < samples.size(); ++k) {
    const double s = samples[k];
    const double lhs = condition_lhs(profile, witness.kind, s, witness.beta);
    const double rhs = witness.kind == ConditionKind::IV ? witness.alpha : witness.g_or_h(s);
    const double margin = lhs - rhs;
    verdict.worst_margin = std::min(verdict.worst_margin, margin);
    const double slack = 1e-12 * std::max({std::abs(lhs), std::abs(rhs), 1e-300});
    if (verdict.kind == VerdictKind::Holds && margin < -slack) {
      verdict.kind = VerdictKind::Fails;
      verdict.failing_s = s;
      std::ostringstream os;
      os.precision(17);
      os << "inequality fails at s = " << s << " (lhs " << lhs << " < rhs " << rhs << ")";
      verdict.detail = os.str();
    }
    if (k > 0 && verdict.kind == VerdictKind::Holds &&
        (witness.kind == ConditionKind::I || witness.kind == ConditionKind::II)) {
      const double tol = 1e-12 * std::max(std::abs(rhs), std::abs(previous_g));
      const bool monotone = witness.kind == ConditionKind::I ? rhs >= previous_g - tol : rhs <= previous_g + tol;
      if (!monotone) {
        verdict.kind = VerdictKind::Fails;
        verdict.failing_s = s;
        verdict.detail = witness.kind == ConditionKind::I ? "g is not nondecreasing" : "g is not nonincreasing";
      }
    }
    previous_g = rhs;
  }
  if (verdict.kind != VerdictKind::Holds) return verdict;

  // Divergence / growth side conditions.
  const auto& w = witness.g_or_h;
  switch (witness.kind) {
    case ConditionKind::I:
      if (!w.is_power_law()) {
        verdict.kind = VerdictKind::Inconclusive;
        verdict.detail = "pointwise inequality holds; divergence of int g/s^2 not certified for custom g";
      } else if (!(w.coeff > 0.0 && w.exponent >= 1.0)) {
        verdict.kind = VerdictKind::Fails;
        verdict.failing_s = std::numeric_limits<double>::quiet_NaN();
        verdict.detail = "int g/s^2 converges for " + w.describe();
      }
      break;
    case ConditionKind::II:
      if (!w.is_power_law()) {
        verdict.kind = VerdictKind::Inconclusive;
        verdict.detail = "pointwise inequality holds; divergence of int g/s not certified for custom g";
      } else if (!(w.coeff > 0.0 && w.exponent >= 0.0)) {
        verdict.kind = VerdictKind::Fails;
        verdict.failing_s = std::numeric_limits<double>::quiet_NaN();
        verdict.detail = "int g/s converges for " + w.describe();
      }
      break;
    case ConditionKind::III:
      if (!w.is_power_law()) {
        verdict.kind = VerdictKind::Inconclusive;
        verdict.detail = "pointwise inequality holds; h -> infinity not certified for custom h";
      } else if (!(w.coeff > 0.0 && w.exponent > 0.0)) {
        verdict.kind = VerdictKind::Fails;
        verdict.failing_s = std::numeric_limits<double>::quiet_NaN();
        verdict.detail = "h = " + w.describe() + " does not tend to infinity";
      }
      break;
    case ConditionKind::IV:
      break;
  }
  return verdict;
}

std::vector<double> log_grid(double lo, double hi, std::size_t n) {
  if (!(lo > 0.0) || !(hi >= lo) || n == 0) throw PreconditionError("log_grid: need 0 < lo <= hi and n > 0");
  std::vector<double> out(n);
  if (n == 1) {
    out[0] = lo;
    return out;
  }
  const double a = std::log(lo), b = std::log(hi);
  for (std::size_t k = 0; k < n; ++k) out[k] = std::exp(a + (b - a) * static_cast<double>(k) / static_cast<double>(n - 1));
  out.front() = lo;
  out.back() = hi;
  return out;
}

namespace {

constexpr double kSearchMax = 1e4;
constexpr std::size_t kSearchPoints = 1000;

// Infimum of ratio over the grid, and over the part of the grid below
// s_max/10. A ratio whose infimum keeps falling as the range grows is
// treated as decaying to zero and rejected.
struct TailInfimum {
  double full = kInf;
  double head = kInf;
  bool stable() const { return full > 0.0 && full >= head * (1.0 - 1e-9); }
};

template <class F>
TailInfimum tail_infimum(const std::vector<double>& grid, F&& ratio) {
  TailInfimum out;
  const double cut = grid.back() / 10.0;
  for (double s : grid) {
    const double r = ratio(s);
    out.full = std::min(out.full, r);
    if (s <= cut) out.head = std::min(out.head, r);
  }
  return out;
}

bool verified(const FluxProfile& profile, const ConditionWitness& w, const std::vector<double>& grid) {
  return check_condition(profile, w, grid).kind == VerdictKind::Holds;
}

}  // namespace

Classification classify(const FluxProfile& profile) {
  Classification out;
  out.regular = profile.regular();

  const auto grid = log_grid(1.0, kSearchMax, kSearchPoints);

  // Condition I: g = c s^m, m in {2, 1, 0}; m = 0 never passes the divergence test.
  for (double m : {2.0, 1.0, 0.0}) {
    const auto inf = tail_infimum(grid, [&](double s) {
      return condition_lhs(profile, ConditionKind::I, s) / std::pow(s, m);
    });
    if (!inf.stable()) continue;
    ConditionWitness w{ConditionKind::I, WitnessFunction::power_law(inf.full, m), 1.0, 0.0, 0.0, kSearchMax};
    if (verified(profile, w, grid)) {
      out.mder = w;
      break;
    }
  }

  // Condition II: constant g.
  {
    const auto inf = tail_infimum(grid, [&](double s) { return condition_lhs(profile, ConditionKind::II, s); });
    if (inf.stable()) {
      ConditionWitness w{ConditionKind::II, WitnessFunction::power_law(inf.full, 0.0), 1.0, 0.0, 0.0, kSearchMax};
      if (verified(profile, w, grid)) out.sder = w;
    }
  }

  // Condition III: h = c s^m with m in {2, 1}; beta from the listed ladder.
  {
    const double s_lo = 1e-3;
    const auto grid3 = log_grid(s_lo, kSearchMax, kSearchPoints);
    bool found = false;
    for (double beta : {0.5, 1.0, 2.0, 0.25, 0.125, 0.0625}) {
      for (double m : {2.0, 1.0}) {
        const auto inf = tail_infimum(grid3, [&](double s) {
          return condition_lhs(profile, ConditionKind::III, s, beta) / std::pow(s, m);
        });
        if (!inf.stable()) continue;
        ConditionWitness w{ConditionKind::III, WitnessFunction::power_law(inf.full, m), s_lo, 0.0, beta, kSearchMax};
        if (verified(profile, w, grid3)) {
          out.cond3 = w;
          found = true;
          break;
        }
      }
      if (found) break;
    }
  }

  // Condition IV: s0 on a doubling ladder, alpha = half the infimum.
  for (double s0 = 0.5; s0 <= kSearchMax / 10.0; s0 *= 2.0) {
    const auto grid4 = log_grid(s0, kSearchMax, kSearchPoints);
    const auto inf = tail_infimum(grid4, [&](double s) { return condition_lhs(profile, ConditionKind::IV, s); });
    if (!inf.stable()) continue;
    ConditionWitness w{ConditionKind::IV, WitnessFunction::power_law(0.0, 0.0), s0, 0.5 * inf.full, 0.0, kSearchMax};
    if (verified(profile, w, grid4)) {
      out.cond4 = w;
      break;
    }
  }
  return out;
}

}  // namespace orbitpde
