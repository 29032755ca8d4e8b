#pragma once

// Immutable expression DAG with symbolic differentiation and substitution.
//
// Nodes are shared and never mutated.  Each node caches a structural hash and
// a bitmask of the variables it depends on, so derivatives with respect to an
// absent variable short-circuit to zero.

#include <bit>
#include <cmath>
#include <cstdint>
#include <functional>
#include <map>
#include <memory>
#include <string>
#include <unordered_map>
#include <unordered_set>
#include <vector>

#include "collar/error.hpp"

namespace collar {

inline constexpr std::size_t kNodeBudget = 1'000'000;
inline constexpr int kMaxVars = 64;

// Slot layout for a problem in dimension n:
//   x'_i -> i (i < n-1), x_n -> n-1, xi'_i -> n+i, xi_n -> 2n-1,
//   t -> 2n, tau -> 2n+1, lambda -> 2n+2.
class VarLayout {
 public:
  explicit VarLayout(int n = 2) : n_(n) {
    if (n < 1 || 2 * n + 3 > kMaxVars) throw Error(ErrorKind::ValidationError, "dimension out of range");
  }
  int dim() const { return n_; }
  int x(int i) const { return i; }
  int xn() const { return n_ - 1; }
  int k(int i) const { return n_ + i; }
  int kn() const { return 2 * n_ - 1; }
  int t() const { return 2 * n_; }
  int tau() const { return 2 * n_ + 1; }
  int lam() const { return 2 * n_ + 2; }
  int size() const { return 2 * n_ + 3; }

  std::string name(int v) const {
    if (v < n_ - 1) return "x" + std::to_string(v + 1);
    if (v == n_ - 1) return "xn";
    if (v < 2 * n_ - 1) return "k" + std::to_string(v - n_ + 1);
    if (v == 2 * n_ - 1) return "kn";
    if (v == t()) return "t";
    if (v == tau()) return "tau";
    if (v == lam()) return "lam";
    return "v" + std::to_string(v);
  }

  bool operator==(const VarLayout&) const = default;

 private:
  int n_;
};

enum class Op : std::uint8_t {
  Const, Var, Add, Mul, Div, Pow, Exp, Log, Sin, Cos, Sqrt, Bracket, Norm, Bump, Inverse
};

struct Node;

class Expr {
 public:
  Expr();  // zero
  explicit Expr(std::shared_ptr<const Node> n) : n_(std::move(n)) {}

  const Node& node() const { return *n_; }
  const Node* get() const { return n_.get(); }

  bool is_const() const;
  bool is_const(double c) const;
  double const_value() const;
  std::uint64_t deps() const;
  bool depends_on(int v) const { return (deps() >> v) & 1u; }
  std::size_t hash() const;

 private:
  std::shared_ptr<const Node> n_;
};

struct Node {
  Op op = Op::Const;
  double value = 0.0;  // Const
  int param = 0;       // Var index, Pow exponent, Bump order, Inverse bound variable
  std::vector<Expr> args;
  std::vector<int> tuple;  // Norm components
  std::uint64_t deps = 0;
  std::size_t hash = 0;
};

namespace detail {

inline std::size_t mix(std::size_t h, std::size_t v) {
  return h ^ (v + 0x9e3779b97f4a7c15ULL + (h << 6) + (h >> 2));
}

inline Expr make(Node n) {
  std::size_t h = std::hash<int>{}(static_cast<int>(n.op));
  h = mix(h, std::hash<std::uint64_t>{}(std::bit_cast<std::uint64_t>(n.value)));
  h = mix(h, std::hash<int>{}(n.param));
  for (const auto& a : n.args) {
    h = mix(h, a.hash());
    n.deps |= a.deps();
  }
  for (int v : n.tuple) {
    h = mix(h, std::hash<int>{}(v));
    n.deps |= std::uint64_t{1} << v;
  }
  if (n.op == Op::Var) n.deps = std::uint64_t{1} << n.param;
  if (n.op == Op::Inverse) n.deps = n.args[1].deps();
  n.hash = h;
  return Expr(std::make_shared<const Node>(std::move(n)));
}

inline const std::vector<std::vector<double>>& bump_polys() {
  // f^(n)(s) = P_n(1/s) e^{-1/s},  P_0 = 1,  P_{n+1}(u) = u^2 (P_n(u) - P_n'(u)).
  static const std::vector<std::vector<double>> table = [] {
    std::vector<std::vector<double>> p{{1.0}};
    for (int n = 0; n < 40; ++n) {
      const auto& q = p.back();
      std::vector<double> r(q.size() + 2, 0.0);
      for (std::size_t i = 0; i < q.size(); ++i) r[i + 2] += q[i];
      for (std::size_t i = 1; i < q.size(); ++i) r[i + 1] -= static_cast<double>(i) * q[i];
      p.push_back(std::move(r));
    }
    return p;
  }();
  return table;
}

}  // namespace detail

// n-th derivative of F(s) = e^{-1/s} for s > 0, 0 otherwise.
inline double bump_value(int order, double s) {
  if (!(s > 0.0)) return 0.0;
  const double u = 1.0 / s;
  if (u > 745.0) return 0.0;
  const auto& tab = detail::bump_polys();
  if (order < 0 || order >= static_cast<int>(tab.size()))
    throw Error(ErrorKind::DerivativeUnavailable, "bump derivative order too high");
  const auto& c = tab[order];
  double acc = 0.0;
  for (std::size_t i = c.size(); i-- > 0;) acc = acc * u + c[i];
  return acc * std::exp(-u);
}

inline Expr constant(double c) {
  Node n;
  n.op = Op::Const;
  n.value = c == 0.0 ? 0.0 : c;  // drop negative zero
  return detail::make(std::move(n));
}

inline Expr::Expr() : n_(constant(0.0).n_) {}
inline bool Expr::is_const() const { return n_->op == Op::Const; }
inline bool Expr::is_const(double c) const { return n_->op == Op::Const && n_->value == c; }
inline double Expr::const_value() const { return n_->value; }
inline std::uint64_t Expr::deps() const { return n_->deps; }
inline std::size_t Expr::hash() const { return n_->hash; }

inline Expr var(int index) {
  if (index < 0 || index >= kMaxVars) throw Error(ErrorKind::ValidationError, "variable index out of range");
  Node n;
  n.op = Op::Var;
  n.param = index;
  return detail::make(std::move(n));
}

inline Expr operator*(const Expr& a, const Expr& b);

inline Expr operator+(const Expr& a, const Expr& b) {
  if (a.is_const() && b.is_const()) return constant(a.const_value() + b.const_value());
  if (a.is_const(0.0)) return b;
  if (b.is_const(0.0)) return a;
  Node n;
  n.op = Op::Add;
  if (b.is_const()) n.args = {b, a};
  else n.args = {a, b};
  return detail::make(std::move(n));
}

inline Expr operator*(const Expr& a, const Expr& b) {
  if (a.is_const() && b.is_const()) return constant(a.const_value() * b.const_value());
  if (a.is_const(0.0) || b.is_const(0.0)) return constant(0.0);
  if (a.is_const(1.0)) return b;
  if (b.is_const(1.0)) return a;
  if (b.is_const()) return b * a;
  if (a.is_const() && b.node().op == Op::Mul && b.node().args[0].is_const())
    return constant(a.const_value() * b.node().args[0].const_value()) * b.node().args[1];
  Node n;
  n.op = Op::Mul;
  n.args = {a, b};
  return detail::make(std::move(n));
}

inline Expr operator-(const Expr& a) { return constant(-1.0) * a; }
inline Expr operator-(const Expr& a, const Expr& b) { return a + (-b); }

inline Expr operator/(const Expr& a, const Expr& b) {
  if (b.is_const() && b.const_value() != 0.0) return constant(1.0 / b.const_value()) * a;
  if (a.is_const(0.0) && !b.is_const()) return constant(0.0);
  Node n;
  n.op = Op::Div;
  n.args = {a, b};
  return detail::make(std::move(n));
}

inline Expr operator+(const Expr& a, double b) { return a + constant(b); }
inline Expr operator+(double a, const Expr& b) { return constant(a) + b; }
inline Expr operator-(const Expr& a, double b) { return a + constant(-b); }
inline Expr operator-(double a, const Expr& b) { return constant(a) - b; }
inline Expr operator*(double a, const Expr& b) { return constant(a) * b; }
inline Expr operator*(const Expr& a, double b) { return constant(b) * a; }
inline Expr operator/(const Expr& a, double b) { return a / constant(b); }
inline Expr operator/(double a, const Expr& b) { return constant(a) / b; }

inline Expr pow(const Expr& a, int k) {
  if (k == 0) return constant(1.0);
  if (k == 1) return a;
  if (a.is_const() && (a.const_value() != 0.0 || k > 0)) return constant(std::pow(a.const_value(), k));
  Node n;
  n.op = Op::Pow;
  n.param = k;
  n.args = {a};
  return detail::make(std::move(n));
}

namespace detail {
inline Expr unary(Op op, const Expr& a, int param = 0) {
  Node n;
  n.op = op;
  n.param = param;
  n.args = {a};
  return make(std::move(n));
}
}  // namespace detail

inline Expr exp(const Expr& a) {
  if (a.is_const()) return constant(std::exp(a.const_value()));
  return detail::unary(Op::Exp, a);
}
inline Expr log(const Expr& a) {
  if (a.is_const() && a.const_value() > 0.0) return constant(std::log(a.const_value()));
  return detail::unary(Op::Log, a);
}
inline Expr sin(const Expr& a) {
  if (a.is_const()) return constant(std::sin(a.const_value()));
  return detail::unary(Op::Sin, a);
}
inline Expr cos(const Expr& a) {
  if (a.is_const()) return constant(std::cos(a.const_value()));
  return detail::unary(Op::Cos, a);
}
inline Expr sqrt(const Expr& a) {
  if (a.is_const() && a.const_value() > 0.0) return constant(std::sqrt(a.const_value()));
  return detail::unary(Op::Sqrt, a);
}
// <e> = sqrt(1 + e^2)
inline Expr bracket(const Expr& a) {
  if (a.is_const()) return constant(std::sqrt(1.0 + a.const_value() * a.const_value()));
  return detail::unary(Op::Bracket, a);
}
inline Expr bump(const Expr& a, int order = 0) {
  if (a.is_const()) return constant(bump_value(order, a.const_value()));
  return detail::unary(Op::Bump, a, order);
}

// Euclidean norm of a tuple of variables.  Singular where all vanish.
inline Expr norm(std::vector<int> vars) {
  if (vars.empty()) return constant(0.0);
  Node n;
  n.op = Op::Norm;
  n.tuple = std::move(vars);
  return detail::make(std::move(n));
}

// Inverse of a strictly monotone scalar function f(v_bound), applied to arg.
// f may depend on the bound variable only.
inline Expr inverse(const Expr& f, int bound, const Expr& arg) {
  if (f.deps() & ~(std::uint64_t{1} << bound))
    throw Error(ErrorKind::ValidationError, "inverse: function depends on more than its bound variable");
  Node n;
  n.op = Op::Inverse;
  n.param = bound;
  n.args = {f, arg};
  return detail::make(std::move(n));
}

// Unique node count of the DAG.
inline std::size_t node_count(const Expr& e) {
  std::unordered_set<const Node*> seen;
  std::vector<const Node*> stack{e.get()};
  while (!stack.empty()) {
    const Node* n = stack.back();
    stack.pop_back();
    if (!seen.insert(n).second) continue;
    for (const auto& a : n->args) stack.push_back(a.get());
  }
  return seen.size();
}

inline Expr substitute(const Expr& e, const std::map<int, Expr>& repl);

namespace detail {

class Differentiator {
 public:
  explicit Differentiator(int v) : v_(v) {}

  Expr operator()(const Expr& e) {
    if (!e.depends_on(v_)) return constant(0.0);
    auto it = memo_.find(e.get());
    if (it != memo_.end()) return it->second;
    Expr d = rule(e);
    memo_.emplace(e.get(), d);
    return d;
  }

 private:
  Expr rule(const Expr& e) {
    const Node& n = e.node();
    switch (n.op) {
      case Op::Const: return constant(0.0);
      case Op::Var: return constant(n.param == v_ ? 1.0 : 0.0);
      case Op::Add: return (*this)(n.args[0]) + (*this)(n.args[1]);
      case Op::Mul: {
        const Expr& a = n.args[0];
        const Expr& b = n.args[1];
        return (*this)(a) * b + a * (*this)(b);
      }
      case Op::Div: {
        const Expr& a = n.args[0];
        const Expr& b = n.args[1];
        Expr da = (*this)(a);
        Expr db = (*this)(b);
        if (db.is_const(0.0)) return da / b;
        // Single numerator keeps exact cancellation where a = b and da = db.
        return (da * b - a * db) / pow(b, 2);
      }
      case Op::Pow: {
        const Expr& a = n.args[0];
        return constant(n.param) * pow(a, n.param - 1) * (*this)(a);
      }
      case Op::Exp: return e * (*this)(n.args[0]);
      case Op::Log: return (*this)(n.args[0]) / n.args[0];
      case Op::Sin: return cos(n.args[0]) * (*this)(n.args[0]);
      case Op::Cos: return -(sin(n.args[0]) * (*this)(n.args[0]));
      case Op::Sqrt: return (*this)(n.args[0]) / (2.0 * e);
      case Op::Bracket: return n.args[0] * (*this)(n.args[0]) / e;
      case Op::Norm: return var(v_) / e;
      case Op::Bump: return bump(n.args[0], n.param + 1) * (*this)(n.args[0]);
      case Op::Inverse: {
        Differentiator inner(n.param);
        Expr fprime = inner(n.args[0]);
        return (*this)(n.args[1]) / substitute(fprime, {{n.param, e}});
      }
    }
    return constant(0.0);
  }

  int v_;
  std::unordered_map<const Node*, Expr> memo_;
};

class Substituter {
 public:
  explicit Substituter(const std::map<int, Expr>& repl) : repl_(repl) {
    for (const auto& [v, _] : repl) mask_ |= std::uint64_t{1} << v;
  }

  Expr operator()(const Expr& e) {
    if (!(e.deps() & mask_)) return e;
    auto it = memo_.find(e.get());
    if (it != memo_.end()) return it->second;
    Expr r = rule(e);
    memo_.emplace(e.get(), r);
    return r;
  }

 private:
  Expr rule(const Expr& e) {
    const Node& n = e.node();
    auto arg = [&](int i) { return (*this)(n.args[i]); };
    switch (n.op) {
      case Op::Const: return e;
      case Op::Var: {
        auto it = repl_.find(n.param);
        return it == repl_.end() ? e : it->second;
      }
      case Op::Add: return arg(0) + arg(1);
      case Op::Mul: return arg(0) * arg(1);
      case Op::Div: return arg(0) / arg(1);
      case Op::Pow: return pow(arg(0), n.param);
      case Op::Exp: return exp(arg(0));
      case Op::Log: return log(arg(0));
      case Op::Sin: return sin(arg(0));
      case Op::Cos: return cos(arg(0));
      case Op::Sqrt: return sqrt(arg(0));
      case Op::Bracket: return bracket(arg(0));
      case Op::Bump: return bump(arg(0), n.param);
      case Op::Inverse: return inverse(n.args[0], n.param, arg(1));
      case Op::Norm: {
        // Substituted components are expanded into sqrt of a sum of squares.
        Expr sum = constant(0.0);
        for (int v : n.tuple) {
          auto it = repl_.find(v);
          sum = sum + pow(it == repl_.end() ? var(v) : it->second, 2);
        }
        return sqrt(sum);
      }
    }
    return e;
  }

  const std::map<int, Expr>& repl_;
  std::uint64_t mask_ = 0;
  std::unordered_map<const Node*, Expr> memo_;
};

inline void enforce_budget(const Expr& e) {
  if (node_count(e) > kNodeBudget)
    throw Error(ErrorKind::NodeBudgetExceeded, "expression exceeds " + std::to_string(kNodeBudget) + " nodes");
}

}  // namespace detail

inline Expr differentiate(const Expr& e, int v) {
  Expr d = detail::Differentiator(v)(e);
  detail::enforce_budget(d);
  return d;
}

// Partial derivative along a sequence of variables, applied left to right.
inline Expr differentiate(const Expr& e, const std::vector<int>& vars) {
  Expr d = e;
  for (int v : vars) d = differentiate(d, v);
  return d;
}

inline Expr substitute(const Expr& e, const std::map<int, Expr>& repl) {
  return detail::Substituter(repl)(e);
}

// True if evaluation can hit a declared singular locus.
inline bool has_singular_locus(const Expr& e) {
  std::unordered_set<const Node*> seen;
  std::vector<const Node*> stack{e.get()};
  while (!stack.empty()) {
    const Node* n = stack.back();
    stack.pop_back();
    if (!seen.insert(n).second) continue;
    switch (n->op) {
      case Op::Div:
      case Op::Log:
      case Op::Sqrt:
      case Op::Norm: return true;
      case Op::Pow:
        if (n->param < 0) return true;
        break;
      default: break;
    }
    for (const auto& a : n->args) stack.push_back(a.get());
  }
  return false;
}

namespace detail {
inline int precedence(Op op) {
  switch (op) {
    case Op::Add: return 1;
    case Op::Mul:
    case Op::Div: return 2;
    case Op::Pow: return 3;
    default: return 4;
  }
}

inline std::string fmt_double(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}
}  // namespace detail

inline std::string to_string(const Expr& e, const VarLayout& lay) {
  const Node& n = e.node();
  auto sub = [&](const Expr& a, int prec) {
    std::string s = to_string(a, lay);
    bool neg_const = a.is_const() && a.const_value() < 0.0;
    if (detail::precedence(a.node().op) < prec || (neg_const && prec > 1)) return "(" + s + ")";
    return s;
  };
  switch (n.op) {
    case Op::Const: return detail::fmt_double(n.value);
    case Op::Var: return lay.name(n.param);
    case Op::Add: return sub(n.args[0], 1) + " + " + sub(n.args[1], 1);
    case Op::Mul: return sub(n.args[0], 2) + "*" + sub(n.args[1], 3);
    case Op::Div: return sub(n.args[0], 2) + "/" + sub(n.args[1], 3);
    case Op::Pow: return sub(n.args[0], 4) + "^" + (n.param < 0 ? "(" + std::to_string(n.param) + ")" : std::to_string(n.param));
    case Op::Exp: return "exp(" + to_string(n.args[0], lay) + ")";
    case Op::Log: return "log(" + to_string(n.args[0], lay) + ")";
    case Op::Sin: return "sin(" + to_string(n.args[0], lay) + ")";
    case Op::Cos: return "cos(" + to_string(n.args[0], lay) + ")";
    case Op::Sqrt: return "sqrt(" + to_string(n.args[0], lay) + ")";
    case Op::Bracket: return "bracket(" + to_string(n.args[0], lay) + ")";
    case Op::Bump: return "bump(" + to_string(n.args[0], lay) + ", " + std::to_string(n.param) + ")";
    case Op::Inverse: return "inv(" + to_string(n.args[0], lay) + ", " + to_string(n.args[1], lay) + ")";
    case Op::Norm: {
      std::string s = "norm(";
      for (std::size_t i = 0; i < n.tuple.size(); ++i) s += (i ? ", " : "") + lay.name(n.tuple[i]);
      return s + ")";
    }
  }
  return "?";
}

}  // namespace collar
