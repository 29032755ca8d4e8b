#pragma once

#include <cmath>
#include <map>
#include <span>
#include <vector>

#include "collar/expr.hpp"
#include "collar/tape.hpp"

namespace collar {

// Derivative orders per variable slot.
using MultiIndex = std::vector<int>;

inline int total_order(const MultiIndex& m) {
  int s = 0;
  for (int k : m) s += k;
  return s;
}

// Variables to differentiate along, in ascending slot order.
inline std::vector<int> as_sequence(const MultiIndex& m) {
  std::vector<int> seq;
  for (std::size_t v = 0; v < m.size(); ++v)
    for (int j = 0; j < m[v]; ++j) seq.push_back(static_cast<int>(v));
  return seq;
}

inline Expr partial(const Expr& e, const MultiIndex& m) { return differentiate(e, as_sequence(m)); }

// All multi-indices beta <= bound componentwise, in lexicographic order.
inline std::vector<MultiIndex> box(const MultiIndex& bound) {
  std::vector<MultiIndex> out;
  MultiIndex cur(bound.size(), 0);
  for (;;) {
    out.push_back(cur);
    std::size_t i = 0;
    while (i < cur.size() && cur[i] == bound[i]) cur[i++] = 0;
    if (i == cur.size()) return out;
    ++cur[i];
  }
}

// Table of partial derivatives at one point.  Lookups are by multi-index, so
// every ordering of the same mixed partial reads the same entry.
class Jet {
 public:
  Jet(const Expr& e, std::span<const double> p, const MultiIndex& bound) : bound_(bound) {
    std::map<MultiIndex, Expr> exprs;
    auto idx = box(bound);
    std::vector<Expr> outs;
    for (const auto& m : idx) {
      Expr d;
      if (total_order(m) == 0) {
        d = e;
      } else {
        // Differentiate the parent that drops one order from the first nonzero slot.
        MultiIndex parent = m;
        std::size_t v = 0;
        while (parent[v] == 0) ++v;
        --parent[v];
        d = differentiate(exprs.at(parent), static_cast<int>(v));
      }
      exprs.emplace(m, d);
      outs.push_back(d);
    }
    Tape tape(outs);
    auto vals = tape.eval(p);
    for (std::size_t i = 0; i < idx.size(); ++i) table_.emplace(idx[i], vals[i]);
  }

  double operator[](const MultiIndex& m) const {
    MultiIndex key = m;
    key.resize(bound_.size(), 0);
    auto it = table_.find(key);
    if (it == table_.end()) throw Error(ErrorKind::DerivativeUnavailable, "multi-index outside the jet");
    return it->second;
  }

  // Same partial requested as an ordered sequence of variables.
  double along(const std::vector<int>& seq) const {
    MultiIndex m(bound_.size(), 0);
    for (int v : seq) {
      if (v >= static_cast<int>(m.size())) throw Error(ErrorKind::DerivativeUnavailable, "variable outside the jet");
      ++m[v];
    }
    return (*this)[m];
  }

  const std::map<MultiIndex, double>& table() const { return table_; }

 private:
  MultiIndex bound_;
  std::map<MultiIndex, double> table_;
};

// |symbolic - central difference| / max(1, |symbolic|) for the first partial in v.
inline double fd_crosscheck(const Expr& e, std::span<const double> p, int v, double h = 1e-5) {
  Tape f(e);
  Tape df(differentiate(e, v));
  std::vector<double> q(p.begin(), p.end());
  q.resize(std::max<std::size_t>(q.size(), f.arity()), 0.0);
  const double sym = df.eval1(q);
  const double x0 = q[v];
  q[v] = x0 + h;
  const double fp = f.eval1(q);
  q[v] = x0 - h;
  const double fm = f.eval1(q);
  const double fd = (fp - fm) / (2.0 * h);
  return std::fabs(sym - fd) / std::max(1.0, std::fabs(sym));
}

// Relative defect of e(x, lam*xi) = lam^d e(x, xi) at one point.
inline double homogeneity_defect(const Expr& e, std::span<const double> p, const VarLayout& lay, double degree,
                                 double lam) {
  Tape f(e);
  std::vector<double> q(p.begin(), p.end());
  q.resize(std::max<std::size_t>(q.size(), f.arity()), 0.0);
  const double base = f.eval1(q);
  for (int i = 0; i < lay.dim(); ++i) q[lay.dim() + i] *= lam;
  const double scaled = f.eval1(q);
  const double want = std::pow(lam, degree) * base;
  return std::fabs(scaled - want) / std::max(1.0, std::fabs(want));
}

}  // namespace collar
