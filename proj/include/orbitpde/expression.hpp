#pragma once

#include <memory>
#include <span>
#include <string>
#include <vector>

#include "orbitpde/geometry.hpp"

namespace orbitpde {

/// Scalar expression over named variables.
///
/// Grammar: + - * / ^ (right associative, binds tighter than unary minus),
/// parentheses, numbers, the constant pi and the functions sin, cos, cosh,
/// sinh, tanh, arccosh, exp, ln, sqrt, abs (one argument) and min, max (two
/// or more). Variables are resolved to slots of `names` at parse time.
class Expression {
 public:
  /// Throws ConfigError with the offending position on syntax errors and
  /// unknown identifiers.
  static Expression parse(const std::string& text, const std::vector<std::string>& names);

  double evaluate(std::span<const double> values) const;
  const std::string& text() const { return text_; }

  struct Node;

 private:
  std::string text_;
  std::shared_ptr<const Node> root_;
};

/// Parses `text` against the variables of `chart` and returns it as a
/// function of the chart point.
std::function<double(const Vec&)> bind_expression(const std::string& text, const QuotientChart& chart);

}  // namespace orbitpde
