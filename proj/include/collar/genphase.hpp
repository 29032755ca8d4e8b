#pragma once

// Generating phases psi(x, xi): boundary phase, graph consistency against a
// map, nondegeneracy, normal coefficients and admissibility.

#include <cmath>
#include <limits>
#include <string>
#include <vector>

#include "collar/expr.hpp"
#include "collar/fit.hpp"
#include "collar/jet.hpp"
#include "collar/symbol.hpp"
#include "collar/symplecto.hpp"
#include "collar/tape.hpp"

namespace collar {

namespace detail {

inline bool same_expr(const Expr& a, const Expr& b) {
  if (a.get() == b.get()) return true;
  const Node &x = a.node(), &y = b.node();
  if (x.hash != y.hash || x.op != y.op || x.param != y.param || x.value != y.value || x.tuple != y.tuple ||
      x.args.size() != y.args.size())
    return false;
  for (std::size_t i = 0; i < x.args.size(); ++i)
    if (!same_expr(x.args[i], y.args[i])) return false;
  return true;
}

inline void add_terms(const Expr& e, std::vector<Expr>& out) {
  if (e.node().op == Op::Add) {
    for (const auto& a : e.node().args) add_terms(a, out);
  } else {
    out.push_back(e);
  }
}

// a - b with summands common to both dropped, so shared terms cancel exactly.
inline Expr cancelling_difference(const Expr& a, const Expr& b) {
  std::vector<Expr> ta, tb;
  add_terms(a, ta);
  add_terms(b, tb);
  std::vector<bool> used(tb.size(), false);
  Expr out = constant(0.0);
  for (const auto& t : ta) {
    bool hit = false;
    for (std::size_t j = 0; j < tb.size() && !hit; ++j)
      if (!used[j] && same_expr(t, tb[j])) used[j] = hit = true;
    if (!hit) out = out + t;
  }
  for (std::size_t j = 0; j < tb.size(); ++j)
    if (!used[j]) out = out - tb[j];
  return out;
}

}  // namespace detail

struct GeneratingPhase {
  VarLayout lay{2};
  Expr psi;
  double collar = 1.0;
  Expr psi_boundary;  // psi(x', 0, xi', 1), a function of (x', xi')
  Expr phi;           // psi - psi_boundary

  static GeneratingPhase make(const VarLayout& lay, Expr psi, double collar = 1.0) {
    if (!(collar > 0.0)) throw Error(ErrorKind::ValidationError, "collar half-width must be positive");
    GeneratingPhase g{lay, std::move(psi), collar, {}, {}};
    g.psi_boundary = substitute(g.psi, {{lay.xn(), constant(0.0)}, {lay.kn(), constant(1.0)}});
    g.phi = detail::cancelling_difference(g.psi, g.psi_boundary);
    return g;
  }
};

namespace detail {

inline const std::vector<double>& tangential_covariables() {
  static const std::vector<double> v{-2.5, -1.0, -0.3, 0.4, 1.5, 3.0};
  return v;
}

// Points (x', 0, xi', 0) over U' and the nonzero xi' set.
inline std::vector<Point> boundary_points(const VarLayout& lay, const std::vector<double>& u) {
  std::vector<Point> out;
  const int m = lay.dim() - 1;
  auto xs = tensor(u, m);
  auto ks = tensor(tangential_covariables(), m);
  for (const auto& x : xs)
    for (const auto& k : ks) {
      Point p(lay.size(), 0.0);
      for (int i = 0; i < m; ++i) {
        p[lay.x(i)] = x[i];
        p[lay.k(i)] = k[i];
      }
      out.push_back(p);
    }
  return out;
}

}  // namespace detail

struct BoundaryPhaseReport {
  Expr psi_boundary;
  double xi_n_residual = 0.0;       // |psi(x',0,xi',xi_n) - psi_d(x',xi')|
  double linearity_residual = 0.0;  // second xi'-derivatives of psi_d
  double phi_residual = 0.0;        // |phi(x',0,xi',xi_n)|
  Point worst_point;
  bool pass = true;
};

inline BoundaryPhaseReport boundary_phase(const GeneratingPhase& g,
                                          const std::vector<double>& u = linspace(-1.0, 1.0, 21),
                                          double tol = 1e-10) {
  const VarLayout& lay = g.lay;
  const int m = lay.dim() - 1;
  std::vector<Expr> outs{g.psi, g.psi_boundary, g.phi};
  for (int i = 0; i < m; ++i)
    for (int j = i; j < m; ++j) outs.push_back(differentiate(g.psi_boundary, {lay.k(i), lay.k(j)}));
  Tape tape(outs);
  BoundaryPhaseReport r;
  r.psi_boundary = g.psi_boundary;
  std::vector<double> v(outs.size()), ws;
  for (Point p : detail::boundary_points(lay, u)) {
    for (double kn : {-3.0, -1.0, 2.0, 5.0}) {
      p[lay.kn()] = kn;
      tape.eval(p, v, ws);
      const double d = std::fabs(v[0] - v[1]);
      if (d > r.xi_n_residual || r.worst_point.empty()) {
        r.xi_n_residual = std::max(r.xi_n_residual, d);
        r.worst_point = p;
      }
      r.phi_residual = std::max(r.phi_residual, std::fabs(v[2]));
      for (std::size_t c = 3; c < v.size(); ++c) r.linearity_residual = std::max(r.linearity_residual, std::fabs(v[c]));
    }
  }
  if (r.xi_n_residual > tol)
    throw Error(ErrorKind::NotBoundaryFlat,
                "psi at x_n = 0 depends on xi_n (residual " + std::to_string(r.xi_n_residual) + ")");
  r.pass = r.linearity_residual <= tol && r.phi_residual <= tol;
  return r;
}

struct GeneratingReport {
  double residual = 0.0;
  Point worst_point;
  double tol = 1e-8;
  bool pass = true;
};

// Graph test: y = d_xi psi(x, eta) must satisfy chi(y, eta) = (x, d_x psi(x, eta)).
inline GeneratingReport check_generating(const GeneratingPhase& g, const SymplectoMap& chi,
                                         const std::vector<Point>& samples, double tol = 1e-8,
                                         bool throw_on_fail = false) {
  const VarLayout& lay = g.lay;
  const int n = lay.dim();
  std::vector<Expr> grads;
  for (int i = 0; i < n; ++i) grads.push_back(differentiate(g.psi, lay.k(i)));
  for (int i = 0; i < n; ++i) grads.push_back(differentiate(g.psi, lay.x(i)));
  Tape tape(grads);
  GeneratingReport r;
  r.tol = tol;
  for (const auto& s : samples) {
    Point p = chi.padded(s);
    auto v = tape.eval(p);
    Point y = p;
    for (int i = 0; i < n; ++i) y[lay.x(i)] = v[i];
    Point img = chi.apply(y);
    double d = 0.0;
    for (int i = 0; i < n; ++i) {
      d = std::max(d, std::fabs(img[lay.x(i)] - p[lay.x(i)]));
      d = std::max(d, std::fabs(img[lay.k(i)] - v[n + i]));
    }
    if (d > r.residual || r.worst_point.empty()) {
      r.residual = std::max(r.residual, d);
      r.worst_point = p;
    }
  }
  r.pass = r.residual <= tol;
  if (!r.pass && throw_on_fail)
    throw Error(ErrorKind::GraphMismatch, "graph of psi does not match the map (residual " +
                                              std::to_string(r.residual) + ")");
  return r;
}

struct NondegeneracyReport {
  double min_abs = std::numeric_limits<double>::infinity();
  double max_abs = 0.0;
  int sign = 0;
  double delta = 1e-3;
  Point worst_point;
  bool pass = true;
};

// Collar grid: x' over U', x_n over [-h, h], xi on the unit sphere (the mixed
// derivative is homogeneous of degree 0).
inline NondegeneracyReport check_nondegeneracy(const GeneratingPhase& g, double delta = 1e-3,
                                               const std::vector<double>& u = linspace(-1.0, 1.0, 21),
                                               int normal_points = 21, int directions = 32) {
  const VarLayout& lay = g.lay;
  const int n = lay.dim();
  Tape tape({differentiate(g.psi, {lay.xn(), lay.kn()})});
  auto xs = detail::tensor(u, n - 1);
  auto xn = linspace(-g.collar, g.collar, normal_points);
  auto dirs = detail::sphere_directions(n, directions);
  NondegeneracyReport r;
  r.delta = delta;
  double lo = std::numeric_limits<double>::infinity(), hi = -lo;
  std::vector<double> v(1), ws;
  Point p(lay.size(), 0.0);
  for (const auto& x : xs)
    for (double t : xn)
      for (const auto& d : dirs) {
        for (int i = 0; i < n - 1; ++i) p[lay.x(i)] = x[i];
        p[lay.xn()] = t;
        for (int i = 0; i < n; ++i) p[lay.k(i)] = d[i];
        tape.eval(p, v, ws);
        lo = std::min(lo, v[0]);
        hi = std::max(hi, v[0]);
        if (std::fabs(v[0]) < r.min_abs) {
          r.min_abs = std::fabs(v[0]);
          r.worst_point = p;
        }
        r.max_abs = std::max(r.max_abs, std::fabs(v[0]));
      }
  if (lo < 0.0 && hi > 0.0)
    throw Error(ErrorKind::SignChange, "mixed derivative d2 psi / dx_n dxi_n changes sign on the collar grid");
  r.sign = hi > 0.0 ? 1 : (lo < 0.0 ? -1 : 0);
  r.pass = r.min_abs >= delta;
  return r;
}

struct NormalCoeffs {
  Expr q_plus, q_minus;  // functions of x'
  double kappa = 0.0;
  double sum_residual = 0.0;    // max |q+ + q-|
  double euler_residual = 0.0;  // max |q+- -+ d2 psi(x',0,0,+-1)|
  bool degenerate = false;      // q+ and q- both vanish somewhere within tol
  Point worst_x;
  double tol = 1e-10;
  bool pass = true;
};

// q+-(x') = d_{x_n} psi(x', 0, 0, +-1).  The remainders of the expansion are not computed.
inline NormalCoeffs normal_coeffs(const GeneratingPhase& g, const std::vector<double>& u = linspace(-1.0, 1.0, 21),
                                  double tol = 1e-10) {
  const VarLayout& lay = g.lay;
  const int n = lay.dim();
  Expr dn = differentiate(g.psi, lay.xn());
  Expr mixed = differentiate(dn, lay.kn());
  auto at_axis = [&](const Expr& e, double s) {
    std::map<int, Expr> rep{{lay.xn(), constant(0.0)}, {lay.kn(), constant(s)}};
    for (int i = 0; i < n - 1; ++i) rep[lay.k(i)] = constant(0.0);
    return substitute(e, rep);
  };
  NormalCoeffs c;
  c.tol = tol;
  c.q_plus = at_axis(dn, 1.0);
  c.q_minus = at_axis(dn, -1.0);
  Tape tape({c.q_plus, c.q_minus, at_axis(mixed, 1.0), at_axis(mixed, -1.0)});
  double qmin = std::numeric_limits<double>::infinity();
  std::vector<double> v(4), ws;
  Point p(lay.size(), 0.0);
  for (const auto& x : detail::tensor(u, n - 1)) {
    for (int i = 0; i < n - 1; ++i) p[lay.x(i)] = x[i];
    try {
      tape.eval(p, v, ws);
    } catch (const Error& e) {
      if (e.kind() == ErrorKind::SingularLocus)
        throw Error(ErrorKind::SingularAtAxis, "psi is not smooth at xi' = 0, xi_n = +-1");
      throw;
    }
    const double s = std::fabs(v[0] + v[1]);
    if (s > c.sum_residual || c.worst_x.empty()) {
      c.sum_residual = std::max(c.sum_residual, s);
      c.worst_x = x;
    }
    c.euler_residual = std::max({c.euler_residual, std::fabs(v[0] - v[2]), std::fabs(v[1] + v[3])});
    if (s <= tol && std::fabs(v[0] - v[1]) <= tol) c.degenerate = true;
    qmin = std::min(qmin, std::fabs(v[0]));
  }
  c.kappa = qmin / 4.0;
  c.pass = c.sum_residual <= tol && c.euler_residual <= tol && c.kappa > 0.0;
  return c;
}

struct AdmissibilityReport {
  struct Component {
    std::string name;  // d/dx1, d/dk1, ...
    double degree = 0.0;
    TransmissionReport transmission;
  };
  std::vector<Component> components;
  double residual = 0.0;
  std::string worst;
  bool pass = true;
};

// Transmission of every first derivative: d_x psi of degree 1, d_xi psi of degree 0.
inline AdmissibilityReport check_admissibility(const GeneratingPhase& g, int max_order = 2,
                                               const std::vector<double>& u = linspace(-1.0, 1.0, 21),
                                               double tol = 1e-10) {
  const VarLayout& lay = g.lay;
  AdmissibilityReport r;
  for (int i = 0; i < lay.dim(); ++i)
    for (bool cov : {false, true}) {
      const int v = cov ? lay.k(i) : lay.x(i);
      const double deg = cov ? 0.0 : 1.0;
      AdmissibilityReport::Component c;
      c.name = "d/d" + lay.name(v);
      c.degree = deg;
      c.transmission = check_transmission(SymbolFn::make(lay, differentiate(g.psi, v), deg, deg), max_order, u, tol);
      if (c.transmission.residual > r.residual || r.worst.empty()) {
        r.residual = std::max(r.residual, c.transmission.residual);
        r.worst = c.name;
      }
      r.pass = r.pass && c.transmission.pass;
      r.components.push_back(std::move(c));
    }
  return r;
}

struct PhaseInvariants {
  double euler_residual = 0.0;     // relative |xi . grad_xi psi - psi|
  double normal_vanishing = 0.0;   // max |d^a_{xi_n} phi(x',0,xi',xi_n)|, a <= 3
  bool pass = true;
};

inline PhaseInvariants phase_invariants(const GeneratingPhase& g, const std::vector<Point>& samples,
                                        double tol = 1e-10) {
  const VarLayout& lay = g.lay;
  const int n = lay.dim();
  Expr euler = constant(0.0);
  for (int i = 0; i < n; ++i) euler = euler + var(lay.k(i)) * differentiate(g.psi, lay.k(i));
  std::vector<Expr> outs{euler, g.psi};
  Expr d = g.phi;
  for (int a = 0; a <= 3; ++a) {
    outs.push_back(d);
    d = differentiate(d, lay.kn());
  }
  Tape tape(outs);
  PhaseInvariants r;
  for (const auto& s : samples) {
    Point p(s);
    p.resize(lay.size(), 0.0);
    auto v = tape.eval(p);
    r.euler_residual = std::max(r.euler_residual, std::fabs(v[0] - v[1]) / std::max(1.0, std::fabs(v[1])));
    p[lay.xn()] = 0.0;
    auto w = tape.eval(p);
    for (std::size_t c = 2; c < w.size(); ++c) r.normal_vanishing = std::max(r.normal_vanishing, std::fabs(w[c]));
  }
  r.pass = r.euler_residual <= tol && r.normal_vanishing <= tol;
  return r;
}

}  // namespace collar
