#pragma once

/// @file expr.hpp
/// Closed-form scalar expressions: a recursive-descent parser, a canonical
/// printer, and evaluation over doubles or jets.
///
/// Grammar:
///   expr   := term (('+'|'-') term)*
///   term   := factor (('*'|'/') factor)*
///   factor := ('-')? atom ('^' factor)?
///   atom   := number | ident | ident '(' expr (',' expr)* ')' | '(' expr ')'
///
/// Functions: sin cos tan exp log sqrt atan2. The identifier `pi` is a
/// built-in constant; every other identifier must be a declared variable or
/// parameter.

#include <cctype>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <map>
#include <memory>
#include <numbers>
#include <set>
#include <span>
#include <stdexcept>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "bochner/jet.hpp"

namespace bochner {

class ParseError : public std::runtime_error {
 public:
  ParseError(std::size_t position, std::vector<std::string> expected, const std::string& message)
      : std::runtime_error(message), position_(position), expected_(std::move(expected)) {}
  std::size_t position() const { return position_; }
  const std::vector<std::string>& expected() const { return expected_; }

 private:
  std::size_t position_;
  std::vector<std::string> expected_;
};

/// Domain failure during evaluation; `subtree()` is the offending node.
class EvalError : public std::domain_error {
 public:
  EvalError(const std::string& what, std::string subtree)
      : std::domain_error(what + " in '" + subtree + "'"), subtree_(std::move(subtree)) {}
  const std::string& subtree() const { return subtree_; }

 private:
  std::string subtree_;
};

using Bindings = std::map<std::string, double>;

namespace expr_detail {

enum class Op { Const, Var, Param, Neg, Add, Sub, Mul, Div, Pow, Sin, Cos, Tan, Exp, Log, Sqrt, Atan2 };

struct Node;
using NodePtr = std::shared_ptr<const Node>;

struct Node {
  Op op = Op::Const;
  double value = 0.0;
  int index = -1;
  NodePtr lhs, rhs;
};

inline NodePtr make(Op op, NodePtr a = nullptr, NodePtr b = nullptr) {
  auto n = std::make_shared<Node>();
  n->op = op;
  n->lhs = std::move(a);
  n->rhs = std::move(b);
  return n;
}

inline NodePtr make_const(double v) {
  auto n = std::make_shared<Node>();
  n->op = Op::Const;
  n->value = v;
  return n;
}

inline NodePtr make_leaf(Op op, int index) {
  auto n = std::make_shared<Node>();
  n->op = op;
  n->index = index;
  return n;
}

struct FunctionInfo {
  const char* name;
  Op op;
  int arity;
};

inline constexpr FunctionInfo kFunctions[] = {
    {"sin", Op::Sin, 1},   {"cos", Op::Cos, 1},   {"tan", Op::Tan, 1},     {"exp", Op::Exp, 1},
    {"log", Op::Log, 1},   {"sqrt", Op::Sqrt, 1}, {"atan2", Op::Atan2, 2},
};

inline const FunctionInfo* find_function(std::string_view name) {
  for (const auto& f : kFunctions)
    if (name == f.name) return &f;
  return nullptr;
}

inline std::string format_number(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

inline std::string print(const Node& n, const std::vector<std::string>& vars, const std::vector<std::string>& params) {
  auto p = [&](const NodePtr& c) { return print(*c, vars, params); };
  switch (n.op) {
    case Op::Const:
      return n.value < 0 ? "(" + format_number(n.value) + ")" : format_number(n.value);
    case Op::Var:
      return vars[n.index];
    case Op::Param:
      return params[n.index];
    case Op::Neg:
      return "(-" + p(n.lhs) + ")";
    case Op::Add:
      return "(" + p(n.lhs) + " + " + p(n.rhs) + ")";
    case Op::Sub:
      return "(" + p(n.lhs) + " - " + p(n.rhs) + ")";
    case Op::Mul:
      return "(" + p(n.lhs) + " * " + p(n.rhs) + ")";
    case Op::Div:
      return "(" + p(n.lhs) + " / " + p(n.rhs) + ")";
    case Op::Pow:
      return "(" + p(n.lhs) + "^" + p(n.rhs) + ")";
    case Op::Atan2:
      return "atan2(" + p(n.lhs) + ", " + p(n.rhs) + ")";
    default:
      for (const auto& f : kFunctions)
        if (f.op == n.op) return std::string(f.name) + "(" + p(n.lhs) + ")";
  }
  return "?";
}

class Parser {
 public:
  Parser(std::string_view src, const std::vector<std::string>& vars, const std::vector<std::string>& params)
      : src_(src), vars_(vars), params_(params) {}

  NodePtr parse() {
    NodePtr e = parse_expr();
    skip_ws();
    if (pos_ != src_.size()) fail({"operator", "end of input"}, "unexpected '" + std::string(1, src_[pos_]) + "'");
    return e;
  }

 private:
  [[noreturn]] void fail(std::vector<std::string> expected, const std::string& what) const {
    std::string msg = "syntax error at position " + std::to_string(pos_) + ": " + what + "; expected ";
    for (std::size_t i = 0; i < expected.size(); ++i) msg += (i ? " or " : "") + expected[i];
    throw ParseError(pos_, std::move(expected), msg);
  }

  void skip_ws() {
    while (pos_ < src_.size() && std::isspace(static_cast<unsigned char>(src_[pos_]))) ++pos_;
  }

  bool accept(char c) {
    skip_ws();
    if (pos_ < src_.size() && src_[pos_] == c) {
      ++pos_;
      return true;
    }
    return false;
  }

  NodePtr parse_expr() {
    NodePtr lhs = parse_term();
    for (;;) {
      if (accept('+'))
        lhs = make(Op::Add, lhs, parse_term());
      else if (accept('-'))
        lhs = make(Op::Sub, lhs, parse_term());
      else
        return lhs;
    }
  }

  NodePtr parse_term() {
    NodePtr lhs = parse_factor();
    for (;;) {
      if (accept('*'))
        lhs = make(Op::Mul, lhs, parse_factor());
      else if (accept('/'))
        lhs = make(Op::Div, lhs, parse_factor());
      else
        return lhs;
    }
  }

  NodePtr parse_factor() {
    const bool negate = accept('-');
    NodePtr base = parse_atom();
    if (accept('^')) base = make(Op::Pow, base, parse_factor());
    return negate ? make(Op::Neg, base) : base;
  }

  NodePtr parse_atom() {
    skip_ws();
    if (pos_ >= src_.size()) fail({"number", "identifier", "'('"}, "unexpected end of input");
    const char c = src_[pos_];
    if (c == '(') {
      ++pos_;
      NodePtr e = parse_expr();
      if (!accept(')')) fail({"')'"}, "unbalanced parenthesis");
      return e;
    }
    if (std::isdigit(static_cast<unsigned char>(c)) || c == '.') return parse_number();
    if (std::isalpha(static_cast<unsigned char>(c)) || c == '_') return parse_identifier();
    fail({"number", "identifier", "'('"}, "unexpected '" + std::string(1, c) + "'");
  }

  NodePtr parse_number() {
    const std::size_t start = pos_;
    auto digits = [&] {
      while (pos_ < src_.size() && std::isdigit(static_cast<unsigned char>(src_[pos_]))) ++pos_;
    };
    digits();
    if (pos_ < src_.size() && src_[pos_] == '.') {
      ++pos_;
      digits();
    }
    if (pos_ < src_.size() && (src_[pos_] == 'e' || src_[pos_] == 'E')) {
      std::size_t save = pos_++;
      if (pos_ < src_.size() && (src_[pos_] == '+' || src_[pos_] == '-')) ++pos_;
      if (pos_ < src_.size() && std::isdigit(static_cast<unsigned char>(src_[pos_])))
        digits();
      else
        pos_ = save;
    }
    const std::string text(src_.substr(start, pos_ - start));
    if (text == ".") {
      pos_ = start;
      fail({"number"}, "malformed number");
    }
    return make_const(std::strtod(text.c_str(), nullptr));
  }

  NodePtr parse_identifier() {
    const std::size_t start = pos_;
    while (pos_ < src_.size() && (std::isalnum(static_cast<unsigned char>(src_[pos_])) || src_[pos_] == '_')) ++pos_;
    const std::string name(src_.substr(start, pos_ - start));
    skip_ws();
    if (pos_ < src_.size() && src_[pos_] == '(') {
      const FunctionInfo* fn = find_function(name);
      if (!fn) {
        pos_ = start;
        throw ParseError(start, {"function name"}, "unknown function '" + name + "' at position " + std::to_string(start));
      }
      ++pos_;
      std::vector<NodePtr> args{parse_expr()};
      while (accept(',')) args.push_back(parse_expr());
      if (!accept(')')) fail({"',' or ')'"}, "unterminated argument list");
      if (static_cast<int>(args.size()) != fn->arity)
        throw ParseError(start, {std::to_string(fn->arity) + " argument(s)"},
                         "arity mismatch: '" + name + "' takes " + std::to_string(fn->arity) + " argument(s), got " +
                             std::to_string(args.size()));
      return fn->arity == 1 ? make(fn->op, args[0]) : make(fn->op, args[0], args[1]);
    }
    for (std::size_t i = 0; i < vars_.size(); ++i)
      if (vars_[i] == name) return make_leaf(Op::Var, static_cast<int>(i));
    for (std::size_t i = 0; i < params_.size(); ++i)
      if (params_[i] == name) return make_leaf(Op::Param, static_cast<int>(i));
    if (name == "pi") return make_const(std::numbers::pi);
    throw ParseError(start, {"declared variable or parameter"},
                     "unknown identifier '" + name + "' at position " + std::to_string(start));
  }

  std::string_view src_;
  const std::vector<std::string>& vars_;
  const std::vector<std::string>& params_;
  std::size_t pos_ = 0;
};

inline bool integer_exponent(const Node& n, int& out) {
  const Node* e = &n;
  double sign = 1.0;
  if (e->op == Op::Neg) {
    sign = -1.0;
    e = e->lhs.get();
  }
  if (e->op != Op::Const) return false;
  const double v = sign * e->value;
  if (std::abs(v) > 64 || v != std::floor(v)) return false;
  out = static_cast<int>(v);
  return true;
}

inline double real_pow(double b, int n) { return std::pow(b, n); }
inline Jet real_pow(const Jet& b, int n) { return pow(b, n); }

}  // namespace expr_detail

/// Immutable parsed expression over an ordered variable list and a parameter list.
class Expr {
 public:
  Expr() = default;

  static Expr parse(std::string_view source, std::vector<std::string> vars, std::vector<std::string> params = {}) {
    Expr e;
    e.vars_ = std::move(vars);
    e.params_ = std::move(params);
    e.root_ = expr_detail::Parser(source, e.vars_, e.params_).parse();
    return e;
  }

  const std::vector<std::string>& variables() const { return vars_; }
  const std::vector<std::string>& parameters() const { return params_; }
  bool empty() const { return root_ == nullptr; }

  /// Canonical, fully parenthesized text; parses back to an equivalent tree.
  std::string to_string() const { return root_ ? expr_detail::print(*root_, vars_, params_) : ""; }

  /// Names of the variables and parameters actually referenced.
  std::set<std::string> free_symbols() const {
    std::set<std::string> out;
    collect(root_.get(), out);
    return out;
  }

  template <class T>
  T evaluate(std::span<const T> point, std::span<const double> param_values) const {
    if (point.size() != vars_.size()) throw std::invalid_argument("expression evaluated with wrong point dimension");
    if (param_values.size() != params_.size()) throw std::invalid_argument("expression evaluated with wrong parameter count");
    return eval_node<T>(*root_, point, param_values);
  }

  double eval(std::span<const double> point, std::span<const double> param_values = {}) const {
    return evaluate<double>(point, param_values);
  }

  /// Jet of the expression at `point`: coefficients are partial derivatives
  /// divided by multi-index factorials.
  Jet eval_jet(std::span<const double> point, int order, std::span<const double> param_values = {}) const {
    std::vector<Jet> vars;
    vars.reserve(point.size());
    const int nv = static_cast<int>(point.size());
    for (int i = 0; i < nv; ++i) vars.push_back(Jet::variable(i, point[i], order, std::max(nv, 1)));
    return evaluate<Jet>(vars, param_values);
  }

 private:
  void collect(const expr_detail::Node* n, std::set<std::string>& out) const {
    if (!n) return;
    if (n->op == expr_detail::Op::Var) out.insert(vars_[n->index]);
    if (n->op == expr_detail::Op::Param) out.insert(params_[n->index]);
    collect(n->lhs.get(), out);
    collect(n->rhs.get(), out);
  }

  template <class T>
  T eval_node(const expr_detail::Node& n, std::span<const T> x, std::span<const double> p) const {
    using expr_detail::Op;
    auto sub = [&](const expr_detail::NodePtr& c) { return eval_node<T>(*c, x, p); };
    auto domain = [&](const std::string& what) -> EvalError {
      return EvalError(what, expr_detail::print(n, vars_, params_));
    };
    try {
      switch (n.op) {
        case Op::Const:
          return T(n.value);
        case Op::Var:
          return x[n.index];
        case Op::Param:
          return T(p[n.index]);
        case Op::Neg:
          return -sub(n.lhs);
        case Op::Add:
          return sub(n.lhs) + sub(n.rhs);
        case Op::Sub:
          return sub(n.lhs) - sub(n.rhs);
        case Op::Mul:
          return sub(n.lhs) * sub(n.rhs);
        case Op::Div: {
          T den = sub(n.rhs);
          if (value_of(den) == 0.0) throw domain("division by zero");
          return sub(n.lhs) / den;
        }
        case Op::Pow: {
          T base = sub(n.lhs);
          int k = 0;
          if (expr_detail::integer_exponent(*n.rhs, k)) {
            if (k < 0 && value_of(base) == 0.0) throw domain("division by zero");
            return expr_detail::real_pow(base, k);
          }
          if (!(value_of(base) > 0.0)) throw domain("non-integer power of a nonpositive base");
          using std::exp;
          using std::log;
          return exp(sub(n.rhs) * log(base));
        }
        case Op::Sin: {
          using std::sin;
          return sin(sub(n.lhs));
        }
        case Op::Cos: {
          using std::cos;
          return cos(sub(n.lhs));
        }
        case Op::Tan: {
          using std::cos;
          using std::tan;
          T a = sub(n.lhs);
          if (std::cos(value_of(a)) == 0.0) throw domain("tan at a pole");
          return tan(a);
        }
        case Op::Exp: {
          using std::exp;
          return exp(sub(n.lhs));
        }
        case Op::Log: {
          using std::log;
          T a = sub(n.lhs);
          if (!(value_of(a) > 0.0)) throw domain("log of a nonpositive value");
          return log(a);
        }
        case Op::Sqrt: {
          using std::sqrt;
          T a = sub(n.lhs);
          if (value_of(a) < 0.0) throw domain("sqrt of a negative value");
          if constexpr (std::is_same_v<T, Jet>) {
            if (value_of(a) == 0.0) throw domain("sqrt jet at zero");
          }
          return sqrt(a);
        }
        case Op::Atan2: {
          using std::atan2;
          T a = sub(n.lhs), b = sub(n.rhs);
          if (value_of(a) == 0.0 && value_of(b) == 0.0) throw domain("atan2 at the origin");
          return atan2(a, b);
        }
      }
    } catch (const JetDomainError& e) {
      throw domain(e.what());
    }
    throw std::logic_error("unreachable expression node");
  }

  static double value_of(double v) { return v; }
  static double value_of(const Jet& j) { return j.value(); }

  expr_detail::NodePtr root_;
  std::vector<std::string> vars_;
  std::vector<std::string> params_;
};

/// A map R^n -> R^m given by one expression per output component.
class SmoothMap {
 public:
  SmoothMap() = default;

  static SmoothMap parse(const std::vector<std::string>& sources, std::vector<std::string> vars,
                         const Bindings& bindings = {}) {
    SmoothMap m;
    m.vars_ = std::move(vars);
    for (const auto& [name, value] : bindings) {
      m.param_names_.push_back(name);
      m.param_values_.push_back(value);
    }
    for (const auto& s : sources) m.components_.push_back(Expr::parse(s, m.vars_, m.param_names_));
    return m;
  }

  int domain_dim() const { return static_cast<int>(vars_.size()); }
  int codomain_dim() const { return static_cast<int>(components_.size()); }
  const std::vector<std::string>& variables() const { return vars_; }
  const Expr& component(int i) const { return components_.at(i); }
  Bindings bindings() const {
    Bindings b;
    for (std::size_t i = 0; i < param_names_.size(); ++i) b[param_names_[i]] = param_values_[i];
    return b;
  }

  std::vector<double> eval(std::span<const double> point) const {
    std::vector<double> out;
    out.reserve(components_.size());
    for (const auto& c : components_) out.push_back(c.eval(point, param_values_));
    return out;
  }

  double eval_component(int i, std::span<const double> point) const {
    return components_.at(i).eval(point, param_values_);
  }

  std::vector<Jet> eval_jet(std::span<const double> point, int order) const {
    std::vector<Jet> out;
    out.reserve(components_.size());
    for (const auto& c : components_) out.push_back(c.eval_jet(point, order, param_values_));
    return out;
  }

  Jet eval_component_jet(int i, std::span<const double> point, int order) const {
    return components_.at(i).eval_jet(point, order, param_values_);
  }

 private:
  std::vector<std::string> vars_;
  std::vector<std::string> param_names_;
  std::vector<double> param_values_;
  std::vector<Expr> components_;
};

}  // namespace bochner
