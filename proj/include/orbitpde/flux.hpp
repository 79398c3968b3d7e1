#pragma once

#include <functional>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <utility>
#include <vector>

namespace orbitpde {

enum class ProfileKind { PLaplace, MinimalSurface, Tabulated };

/// The flux magnitude a(s) of div(a(|grad u|)/|grad u| grad u) = 0, written as
/// a(s) = s^(p-1) A(s).
///
/// Built-in profiles carry analytic derivatives. Tabulated profiles are
/// interpolated with monotone piecewise cubics (Fritsch-Carlson) and
/// differentiated by centered differences; outside the table they continue as
/// power laws matched to the end slopes.
///
/// Construction validates a > 0, a' > 0, A > 0 and
/// min{1, p-1} + s A'/A > 0 on a log-spaced sample and throws ProfileInvalid
/// otherwise. Instances are immutable.
class FluxProfile {
 public:
  static FluxProfile p_laplace(double p);
  static FluxProfile minimal_surface();
  static FluxProfile tabulated(std::vector<std::pair<double, double>> table, double p = 2.0);

  ProfileKind kind() const { return kind_; }
  double p() const { return p_; }
  bool regular() const { return p_ == 2.0; }
  std::string name() const;

  /// Gradient floor used by the discretization: |grad v| is replaced by
  /// sqrt(|grad v|^2 + eps^2). Defaults to 1e-8 for p = 2 and 1e-4 otherwise.
  double eps_reg() const { return eps_reg_; }
  FluxProfile with_eps_reg(double eps) const;

  double a(double s) const;
  double da(double s) const;
  double d2a(double s) const;

  /// Regular factor A(s) = a(s) / s^(p-1) and its derivative.
  double A(double s) const;
  double dA(double s) const;

  /// s a'(s) / a(s), i.e. b(s) + 1.
  double log_slope(double s) const;

  /// Phi(s1) - Phi(s0) where Phi' = a. `ds` must equal s1 - s0 computed
  /// without cancellation by the caller; small increments are integrated by
  /// Gauss-Legendre so nearly equal arguments keep full relative accuracy.
  double potential_increment(double s0, double s1, double ds) const;
  double potential(double s) const;

  /// Solves a(s) = y for s > 0. Throws PreconditionError when y lies outside
  /// the range of a.
  double inverse_a(double y) const;

  /// Supremum of a over (0, inf); +inf for unbounded profiles.
  double a_sup() const;

 private:
  struct Table;
  FluxProfile(ProfileKind kind, double p);
  void validate() const;

  ProfileKind kind_;
  double p_;
  double eps_reg_;
  std::shared_ptr<const Table> table_;
};

/// b(s) = s a'(s)/a(s) - 1. For s below eps_reg the floor value b(eps_reg) is
/// returned. Throws PreconditionError for s <= 0 and ProfileInvalid if a(s) <= 0.
double eval_b(const FluxProfile& profile, double s);

/// b'(s); analytic for built-ins, centered differences for tables.
double eval_db(const FluxProfile& profile, double s);

/// lambda/Lambda = 1 + min{b(s), 0}, always in (0, 1].
double eigenvalue_ratio(const FluxProfile& profile, double s);

// ---------------------------------------------------------------------------
// Structural conditions I-IV.

enum class ConditionKind { I, II, III, IV };
std::string to_string(ConditionKind kind);

/// Witness function g (Conditions I/II) or h (Condition III). Power laws
/// c*s^m carry a symbolic tag that lets divergence side conditions be decided;
/// custom functions only get pointwise checks.
struct WitnessFunction {
  double coeff = 0.0;
  double exponent = 0.0;
  std::function<double(double)> custom;

  static WitnessFunction power_law(double c, double m) { return {c, m, {}}; }
  static WitnessFunction from_function(std::function<double(double)> f) { return {0.0, 0.0, std::move(f)}; }

  bool is_power_law() const { return !custom; }
  double operator()(double s) const;
  std::string describe() const;
};

struct ConditionWitness {
  ConditionKind kind = ConditionKind::I;
  WitnessFunction g_or_h;
  double s0 = 1.0;
  double alpha = 0.0;  // Condition IV
  double beta = 0.0;   // Condition III
  double s_max = 1e4;  // upper end of the verified range [s0, s_max]
};

enum class VerdictKind { Holds, Fails, Inconclusive };
std::string to_string(VerdictKind kind);

struct ConditionVerdict {
  VerdictKind kind = VerdictKind::Inconclusive;
  double failing_s = 0.0;     // first failing sample when kind == Fails
  double worst_margin = 0.0;  // min over samples of lhs - rhs
  std::string detail;
};

/// Pointwise check of the defining inequality of `witness.kind` on `grid`,
/// plus the monotonicity requirement on g (I/II) and the divergence side
/// condition, decided symbolically for power-law witnesses.
/// Throws PreconditionError on an empty grid or samples outside [s0, s_max].
ConditionVerdict check_condition(const FluxProfile& profile, const ConditionWitness& witness,
                                 std::span<const double> grid);

/// Left-hand side of the pointwise inequality of each condition at s.
double condition_lhs(const FluxProfile& profile, ConditionKind kind, double s, double beta = 0.0);

struct Classification {
  bool regular = false;
  std::optional<ConditionWitness> mder;   // Condition I
  std::optional<ConditionWitness> sder;   // Condition II
  std::optional<ConditionWitness> cond3;
  std::optional<ConditionWitness> cond4;
};

/// Deterministic witness search over log-spaced grids. A missing witness
/// means the search found none, not that the condition is false.
Classification classify(const FluxProfile& profile);

/// n log-spaced samples in [lo, hi], endpoints included.
std::vector<double> log_grid(double lo, double hi, std::size_t n);

}  // namespace orbitpde
