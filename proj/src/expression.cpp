#include "orbitpde/expression.hpp"

#include <cctype>
#include <cmath>
#include <cstdlib>
#include <numbers>
#include <sstream>

#include "orbitpde/errors.hpp"

namespace orbitpde {

struct Expression::Node {
  enum class Op { Const, Var, Neg, Add, Sub, Mul, Div, Pow, Call };
  Op op = Op::Const;
  double value = 0.0;
  int slot = -1;
  std::string fn;
  std::vector<std::shared_ptr<const Node>> args;

  double eval(std::span<const double> v) const {
    switch (op) {
      case Op::Const: return value;
      case Op::Var: return v[slot];
      case Op::Neg: return -args[0]->eval(v);
      case Op::Add: return args[0]->eval(v) + args[1]->eval(v);
      case Op::Sub: return args[0]->eval(v) - args[1]->eval(v);
      case Op::Mul: return args[0]->eval(v) * args[1]->eval(v);
      case Op::Div: return args[0]->eval(v) / args[1]->eval(v);
      case Op::Pow: return std::pow(args[0]->eval(v), args[1]->eval(v));
      case Op::Call: break;
    }
    if (fn == "min" || fn == "max") {
      double acc = args[0]->eval(v);
      for (std::size_t i = 1; i < args.size(); ++i)
        acc = fn == "min" ? std::min(acc, args[i]->eval(v)) : std::max(acc, args[i]->eval(v));
      return acc;
    }
    const double x = args[0]->eval(v);
    if (fn == "sin") return std::sin(x);
    if (fn == "cos") return std::cos(x);
    if (fn == "cosh") return std::cosh(x);
    if (fn == "sinh") return std::sinh(x);
    if (fn == "tanh") return std::tanh(x);
    if (fn == "arccosh") return std::acosh(x);
    if (fn == "exp") return std::exp(x);
    if (fn == "ln") return std::log(x);
    if (fn == "sqrt") return std::sqrt(x);
    return std::abs(x);
  }
};

namespace {

using NodePtr = std::shared_ptr<const Expression::Node>;
using Op = Expression::Node::Op;

bool unary_function(const std::string& s) {
  for (const char* f : {"sin", "cos", "cosh", "sinh", "tanh", "arccosh", "exp", "ln", "sqrt", "abs"})
    if (s == f) return true;
  return false;
}

class Parser {
 public:
  Parser(const std::string& text, const std::vector<std::string>& names) : s_(text), names_(names) {}

  NodePtr parse() {
    auto e = expr();
    skip();
    if (pos_ != s_.size()) fail("unexpected '" + std::string(1, s_[pos_]) + "'");
    return e;
  }

 private:
  [[noreturn]] void fail(const std::string& msg) const {
    std::ostringstream os;
    os << "expression \"" << s_ << "\" at position " << pos_ << ": " << msg;
    throw ConfigError(os.str());
  }

  void skip() {
    while (pos_ < s_.size() && std::isspace(static_cast<unsigned char>(s_[pos_]))) ++pos_;
  }

  bool accept(char c) {
    skip();
    if (pos_ < s_.size() && s_[pos_] == c) {
      ++pos_;
      return true;
    }
    return false;
  }

  static NodePtr make(Op op, std::vector<NodePtr> args) {
    auto n = std::make_shared<Expression::Node>();
    n->op = op;
    n->args = std::move(args);
    return n;
  }

  NodePtr expr() {
    auto lhs = term();
    while (true) {
      if (accept('+')) lhs = make(Op::Add, {lhs, term()});
      else if (accept('-')) lhs = make(Op::Sub, {lhs, term()});
      else return lhs;
    }
  }

  NodePtr term() {
    auto lhs = unary();
    while (true) {
      if (accept('*')) lhs = make(Op::Mul, {lhs, unary()});
      else if (accept('/')) lhs = make(Op::Div, {lhs, unary()});
      else return lhs;
    }
  }

  NodePtr unary() {
    if (accept('-')) return make(Op::Neg, {unary()});
    if (accept('+')) return unary();
    auto base = primary();
    if (accept('^')) return make(Op::Pow, {base, unary()});
    return base;
  }

  NodePtr primary() {
    skip();
    if (pos_ >= s_.size()) fail("unexpected end of input");
    if (accept('(')) {
      auto e = expr();
      if (!accept(')')) fail("expected ')'");
      return e;
    }
    const char c = s_[pos_];
    if (std::isdigit(static_cast<unsigned char>(c)) || c == '.') {
      const char* begin = s_.c_str() + pos_;
      char* end = nullptr;
      const double v = std::strtod(begin, &end);
      if (end == begin) fail("bad number");
      pos_ += static_cast<std::size_t>(end - begin);
      auto n = std::make_shared<Expression::Node>();
      n->value = v;
      return n;
    }
    if (!std::isalpha(static_cast<unsigned char>(c)) && c != '_') fail("unexpected '" + std::string(1, c) + "'");
    const std::size_t start = pos_;
    while (pos_ < s_.size() && (std::isalnum(static_cast<unsigned char>(s_[pos_])) || s_[pos_] == '_')) ++pos_;
    const std::string id = s_.substr(start, pos_ - start);
    if (accept('(')) {
      auto n = std::make_shared<Expression::Node>();
      n->op = Op::Call;
      n->fn = id;
      if (!unary_function(id) && id != "min" && id != "max") fail("unknown function '" + id + "'");
      n->args.push_back(expr());
      while (accept(',')) n->args.push_back(expr());
      if (!accept(')')) fail("expected ')'");
      if (unary_function(id) && n->args.size() != 1) fail(id + " takes one argument");
      if (!unary_function(id) && n->args.size() < 2) fail(id + " takes at least two arguments");
      return n;
    }
    for (std::size_t i = 0; i < names_.size(); ++i)
      if (names_[i] == id) {
        auto n = std::make_shared<Expression::Node>();
        n->op = Op::Var;
        n->slot = static_cast<int>(i);
        return n;
      }
    if (id == "pi") {
      auto n = std::make_shared<Expression::Node>();
      n->value = std::numbers::pi;
      return n;
    }
    pos_ = start;
    fail("unknown variable '" + id + "'");
  }

  const std::string& s_;
  const std::vector<std::string>& names_;
  std::size_t pos_ = 0;
};

}  // namespace

Expression Expression::parse(const std::string& text, const std::vector<std::string>& names) {
  Expression e;
  e.text_ = text;
  e.root_ = Parser(text, names).parse();
  return e;
}

double Expression::evaluate(std::span<const double> values) const { return root_->eval(values); }

std::function<double(const Vec&)> bind_expression(const std::string& text, const QuotientChart& chart) {
  if (!chart.variables) throw ConfigError("chart exposes no variables for boundary expressions");
  Vec probe(chart.dim);
  for (int a = 0; a < chart.dim; ++a) probe(a) = 0.5 * (chart.axes[a].lo + chart.axes[a].hi);
  std::vector<std::string> names;
  for (const auto& [name, value] : chart.variables(probe)) names.push_back(name);
  const auto expr = Expression::parse(text, names);
  auto vars = chart.variables;
  return [expr, vars](const Vec& x) {
    const auto named = vars(x);
    std::vector<double> vals(named.size());
    for (std::size_t i = 0; i < named.size(); ++i) vals[i] = named[i].second;
    return expr.evaluate(vals);
  };
}

}  // namespace orbitpde
