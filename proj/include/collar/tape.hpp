#pragma once

// Flat evaluation program compiled from one or more expressions.  Common
// subexpressions are shared across all outputs.

#include <cmath>
#include <cstring>
#include <memory>
#include <span>
#include <string>
#include <unordered_map>
#include <vector>

#include "collar/expr.hpp"

namespace collar {

class Tape {
 public:
  Tape() = default;
  explicit Tape(const std::vector<Expr>& outputs) { compile(outputs); }
  explicit Tape(const Expr& e) : Tape(std::vector<Expr>{e}) {}

  std::size_t size() const { return code_.size(); }
  std::size_t outputs() const { return out_.size(); }
  // Minimum length of the point vector.
  int arity() const { return arity_; }

  void eval(std::span<const double> p, std::span<double> out, std::vector<double>& ws) const {
    if (static_cast<int>(p.size()) < arity_) throw Error(ErrorKind::ValidationError, "point has too few coordinates");
    ws.resize(code_.size());
    double* r = ws.data();
    for (std::size_t i = 0; i < code_.size(); ++i) {
      const Instr& c = code_[i];
      switch (c.op) {
        case Op::Const: r[i] = c.c; break;
        case Op::Var: r[i] = p[c.p]; break;
        case Op::Add: r[i] = r[c.a] + r[c.b]; break;
        case Op::Mul: r[i] = r[c.a] * r[c.b]; break;
        case Op::Div:
          if (r[c.b] == 0.0) throw Error(ErrorKind::SingularLocus, "division by zero");
          r[i] = r[c.a] / r[c.b];
          break;
        case Op::Pow: r[i] = ipow(r[c.a], c.p); break;
        case Op::Exp: r[i] = std::exp(r[c.a]); break;
        case Op::Log:
          if (!(r[c.a] > 0.0)) throw Error(ErrorKind::SingularLocus, "log of non-positive value");
          r[i] = std::log(r[c.a]);
          break;
        case Op::Sin: r[i] = std::sin(r[c.a]); break;
        case Op::Cos: r[i] = std::cos(r[c.a]); break;
        case Op::Sqrt:
          if (!(r[c.a] > 0.0)) throw Error(ErrorKind::SingularLocus, "sqrt at non-positive value");
          r[i] = std::sqrt(r[c.a]);
          break;
        case Op::Bracket: r[i] = std::sqrt(1.0 + r[c.a] * r[c.a]); break;
        case Op::Bump: r[i] = bump_value(c.p, r[c.a]); break;
        case Op::Norm: {
          double s = 0.0;
          for (int v : tuples_[c.b]) s += p[v] * p[v];
          if (s == 0.0) throw Error(ErrorKind::SingularLocus, "norm at the origin");
          r[i] = std::sqrt(s);
          break;
        }
        case Op::Inverse: r[i] = solve_inverse(subs_[c.b], c.p, r[c.a]); break;
      }
    }
    for (std::size_t j = 0; j < out_.size(); ++j) out[j] = r[out_[j]];
  }

  std::vector<double> eval(std::span<const double> p) const {
    std::vector<double> ws, out(out_.size());
    eval(p, out, ws);
    return out;
  }

  double eval1(std::span<const double> p) const { return eval(p).at(0); }

 private:
  struct Instr {
    Op op;
    int a = -1;
    int b = -1;  // second operand, tuple index (Norm) or sub-program index (Inverse)
    int p = 0;
    double c = 0.0;
  };

  struct Key {
    Op op;
    int a, b, p;
    std::uint64_t c;
    bool operator==(const Key&) const = default;
  };
  struct KeyHash {
    std::size_t operator()(const Key& k) const {
      std::size_t h = static_cast<std::size_t>(k.op);
      h = detail::mix(h, static_cast<std::size_t>(k.a));
      h = detail::mix(h, static_cast<std::size_t>(k.b));
      h = detail::mix(h, static_cast<std::size_t>(k.p));
      return detail::mix(h, std::hash<std::uint64_t>{}(k.c));
    }
  };

  static double ipow(double x, int k) {
    if (k < 0) {
      if (x == 0.0) throw Error(ErrorKind::SingularLocus, "negative power of zero");
      return 1.0 / ipow(x, -k);
    }
    double r = 1.0;
    double b = x;
    while (k) {
      if (k & 1) r *= b;
      b *= b;
      k >>= 1;
    }
    return r;
  }

  // Sub-program outputs f and f' in the bound variable.
  static double solve_inverse(const std::shared_ptr<Tape>& f, int bound, double target) {
    std::vector<double> pt(bound + 1, 0.0), ws, out(2);
    auto at = [&](double z) {
      pt[bound] = z;
      f->eval(pt, out, ws);
      return std::pair{out[0], out[1]};
    };
    const double incr = at(0.0).second >= 0.0 ? 1.0 : -1.0;
    auto g = [&](double z) { return incr * (at(z).first - target); };
    // Bracket the root by expansion, then safeguarded Newton.
    double lo = -1.0, hi = 1.0;
    int guard = 0;
    while (g(lo) > 0.0) {
      lo *= 2.0;
      if (++guard > 200) throw Error(ErrorKind::SingularLocus, "inverse: no bracket");
    }
    while (g(hi) < 0.0) {
      hi *= 2.0;
      if (++guard > 200) throw Error(ErrorKind::SingularLocus, "inverse: no bracket");
    }
    double z = 0.5 * (lo + hi);
    for (int it = 0; it < 200; ++it) {
      auto [fv, fd] = at(z);
      double gz = incr * (fv - target);
      if (gz == 0.0) return z;
      if (gz < 0.0) lo = z;
      else hi = z;
      double next = fd != 0.0 ? z - (fv - target) / fd : 0.5 * (lo + hi);
      if (!(next > lo && next < hi)) next = 0.5 * (lo + hi);
      if (std::fabs(next - z) <= 4e-16 * (1.0 + std::fabs(z)) || hi - lo <= 4e-16 * (1.0 + std::fabs(z)))
        return next;
      z = next;
    }
    return z;
  }

  int emit(const Expr& e) {
    auto hit = seen_.find(e.get());
    if (hit != seen_.end()) return hit->second;
    const Node& n = e.node();
    Instr ins{n.op};
    Key key{n.op, -1, -1, n.param, 0};
    switch (n.op) {
      case Op::Const:
        ins.c = n.value;
        key.c = std::bit_cast<std::uint64_t>(n.value);
        break;
      case Op::Var:
        ins.p = n.param;
        arity_ = std::max(arity_, n.param + 1);
        break;
      case Op::Norm: {
        int idx = static_cast<int>(tuples_.size());
        for (std::size_t j = 0; j < tuples_.size(); ++j)
          if (tuples_[j] == n.tuple) idx = static_cast<int>(j);
        if (idx == static_cast<int>(tuples_.size())) tuples_.push_back(n.tuple);
        for (int v : n.tuple) arity_ = std::max(arity_, v + 1);
        ins.b = key.b = idx;
        break;
      }
      case Op::Inverse: {
        ins.a = key.a = emit(n.args[1]);
        Expr fp = differentiate(n.args[0], n.param);
        subs_.push_back(std::make_shared<Tape>(std::vector<Expr>{n.args[0], fp}));
        ins.b = static_cast<int>(subs_.size()) - 1;
        ins.p = n.param;
        key.b = -2 - ins.b;  // never merged structurally
        break;
      }
      default:
        ins.a = key.a = emit(n.args[0]);
        if (n.args.size() > 1) ins.b = key.b = emit(n.args[1]);
        ins.p = n.param;
        break;
    }
    auto [it, fresh] = structural_.emplace(key, static_cast<int>(code_.size()));
    if (fresh) code_.push_back(ins);
    seen_.emplace(e.get(), it->second);
    return it->second;
  }

  void compile(const std::vector<Expr>& outputs) {
    for (const auto& e : outputs) out_.push_back(emit(e));
    if (code_.size() > kNodeBudget) throw Error(ErrorKind::NodeBudgetExceeded, "tape exceeds node budget");
    seen_.clear();
    structural_.clear();
  }

  std::vector<Instr> code_;
  std::vector<int> out_;
  std::vector<std::vector<int>> tuples_;
  std::vector<std::shared_ptr<Tape>> subs_;
  int arity_ = 0;
  std::unordered_map<const Node*, int> seen_;
  std::unordered_map<Key, int, KeyHash> structural_;
};

}  // namespace collar
