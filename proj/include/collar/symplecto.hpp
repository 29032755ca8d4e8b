#pragma once

// Boundary-preserving homogeneous symplectic maps in collar coordinates.
//
// Jacobian rows are (x', xi', x_n, xi_n), columns (y', eta', y_n, eta_n).
// Map inputs reuse the x/xi slots: y -> x slots, eta -> xi slots.

#include <Eigen/Dense>
#include <cmath>
#include <map>
#include <memory>
#include <random>
#include <vector>

#include "collar/expr.hpp"
#include "collar/jet.hpp"
#include "collar/tape.hpp"

namespace collar {

using Point = std::vector<double>;

class SymplectoMap {
 public:
  SymplectoMap(const VarLayout& lay, std::vector<Expr> x, std::vector<Expr> xi, double collar = 1.0)
      : lay_(lay), x_(std::move(x)), xi_(std::move(xi)), collar_(collar) {
    const int n = lay.dim();
    if (static_cast<int>(x_.size()) != n || static_cast<int>(xi_.size()) != n)
      throw Error(ErrorKind::ValidationError, "map needs n base and n fiber components");
    if (!(collar > 0.0)) throw Error(ErrorKind::ValidationError, "collar half-width must be positive");
    std::vector<Expr> rows = row_exprs();
    values_ = std::make_shared<Tape>(rows);
    std::vector<Expr> entries;
    for (const auto& r : rows)
      for (int c : col_vars()) entries.push_back(differentiate(r, c));
    jac_ = std::make_shared<Tape>(entries);
  }

  const VarLayout& layout() const { return lay_; }
  double collar() const { return collar_; }
  const std::vector<Expr>& x() const { return x_; }
  const std::vector<Expr>& xi() const { return xi_; }

  // (x', xi', x_n, xi_n) in the documented row order.
  std::vector<Expr> row_exprs() const {
    const int n = lay_.dim();
    std::vector<Expr> r;
    for (int i = 0; i < n - 1; ++i) r.push_back(x_[i]);
    for (int i = 0; i < n - 1; ++i) r.push_back(xi_[i]);
    r.push_back(x_[n - 1]);
    r.push_back(xi_[n - 1]);
    return r;
  }

  // Input slots in column order (y', eta', y_n, eta_n).
  std::vector<int> col_vars() const {
    const int n = lay_.dim();
    std::vector<int> c;
    for (int i = 0; i < n - 1; ++i) c.push_back(lay_.x(i));
    for (int i = 0; i < n - 1; ++i) c.push_back(lay_.k(i));
    c.push_back(lay_.xn());
    c.push_back(lay_.kn());
    return c;
  }

  // Image (x, xi) of (y, eta) in slot layout order.
  Point apply(const Point& p) const {
    auto v = values_->eval(padded(p));
    const int n = lay_.dim();
    Point out(2 * n);
    for (int i = 0; i < n - 1; ++i) {
      out[lay_.x(i)] = v[i];
      out[lay_.k(i)] = v[n - 1 + i];
    }
    out[lay_.xn()] = v[2 * n - 2];
    out[lay_.kn()] = v[2 * n - 1];
    return out;
  }

  Eigen::MatrixXd jacobian(const Point& p) const {
    const int N = 2 * lay_.dim();
    auto v = jac_->eval(padded(p));
    Eigen::MatrixXd J(N, N);
    for (int r = 0; r < N; ++r)
      for (int c = 0; c < N; ++c) J(r, c) = v[r * N + c];
    return J;
  }

  Point padded(const Point& p) const {
    Point q = p;
    q.resize(std::max<std::size_t>(q.size(), lay_.size()), 0.0);
    return q;
  }

 private:
  VarLayout lay_;
  std::vector<Expr> x_, xi_;
  double collar_;
  std::shared_ptr<const Tape> values_, jac_;
};

inline Eigen::MatrixXd jacobian(const SymplectoMap& chi, const Point& p) { return chi.jacobian(p); }

// Standard symplectic form in the (q', p', q_n, p_n) ordering.
inline Eigen::MatrixXd omega_matrix(int n) {
  const int N = 2 * n;
  Eigen::MatrixXd W = Eigen::MatrixXd::Zero(N, N);
  for (int i = 0; i < n - 1; ++i) {
    W(i, n - 1 + i) = 1.0;
    W(n - 1 + i, i) = -1.0;
  }
  W(N - 2, N - 1) = 1.0;
  W(N - 1, N - 2) = -1.0;
  return W;
}

// Seeded samples: y' in [-1,1]^{n-1}, y_n in [-h, h] (or 0), eta of modulus in [0.5, 2].
inline std::vector<Point> collar_samples(const VarLayout& lay, double h, int count, std::uint64_t seed,
                                         bool boundary = false) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> u(-1.0, 1.0), rad(0.5, 2.0);
  std::normal_distribution<double> nd;
  std::vector<Point> out;
  const int n = lay.dim();
  for (int s = 0; s < count; ++s) {
    Point p(lay.size(), 0.0);
    for (int i = 0; i < n - 1; ++i) p[lay.x(i)] = u(rng);
    p[lay.xn()] = boundary ? 0.0 : h * u(rng);
    double r2 = 0.0;
    for (int i = 0; i < n; ++i) {
      p[lay.k(i)] = nd(rng);
      r2 += p[lay.k(i)] * p[lay.k(i)];
    }
    const double scale = rad(rng) / std::sqrt(r2);
    for (int i = 0; i < n; ++i) p[lay.k(i)] *= scale;
    out.push_back(p);
  }
  return out;
}

struct SymplecticReport {
  double residual = 0.0;
  double det_defect = 0.0;  // max |det J - 1|
  Point worst_point;
  double tol = 1e-10;
  bool pass = true;
};

inline SymplecticReport check_symplectic(const SymplectoMap& chi, const std::vector<Point>& samples,
                                         double tol = 1e-10) {
  const Eigen::MatrixXd W = omega_matrix(chi.layout().dim());
  SymplecticReport r;
  r.tol = tol;
  for (const auto& p : samples) {
    Eigen::MatrixXd J = chi.jacobian(p);
    const double res = (J.transpose() * W * J - W).cwiseAbs().maxCoeff();
    r.det_defect = std::max(r.det_defect, std::fabs(J.determinant() - 1.0));
    if (res > r.residual || r.worst_point.empty()) {
      r.residual = std::max(r.residual, res);
      r.worst_point = p;
    }
  }
  r.pass = r.residual <= tol;
  return r;
}

struct BoundaryPreservingReport {
  double sup = 0.0;
  Point worst_point;
  bool pass = true;
};

inline BoundaryPreservingReport check_boundary_preserving(const SymplectoMap& chi,
                                                          const std::vector<Point>& boundary_samples) {
  const VarLayout& lay = chi.layout();
  BoundaryPreservingReport r;
  for (Point p : boundary_samples) {
    p[lay.xn()] = 0.0;
    const double v = std::fabs(chi.apply(p)[lay.xn()]);
    if (v > r.sup || r.worst_point.empty()) {
      r.sup = std::max(r.sup, v);
      r.worst_point = p;
    }
  }
  r.pass = r.sup <= 1e-12;
  return r;
}

// Boundary part (x'_d(y'), xi'_d = M(y') eta').
struct BoundaryMap {
  std::vector<Expr> b;                   // n-1 components in y'
  std::vector<std::vector<Expr>> coeff;  // (n-1)x(n-1) matrix in y'
  double eta_n_residual = 0.0;           // |d_{eta_n} x'|, |d_{eta_n} xi'| at y_n = 0
  double eta_prime_residual = 0.0;       // |d_{eta'} x'| at y_n = 0
  double linearity_residual = 0.0;       // |xi'_d - M eta'| / |eta|
  double det_defect = 0.0;               // |det D(x'_d, xi'_d)/D(y', eta') - 1|
};

inline BoundaryMap induced_boundary_map(const SymplectoMap& chi,
                                        const std::vector<Point>& boundary_samples,
                                        double tol = 1e-10) {
  if (!check_boundary_preserving(chi, boundary_samples).pass)
    throw Error(ErrorKind::NotBoundaryPreserving, "x_n does not vanish on the boundary");
  const VarLayout& lay = chi.layout();
  const int n = lay.dim();
  const std::map<int, Expr> at_boundary{{lay.xn(), constant(0.0)}};
  std::map<int, Expr> frozen_fiber{{lay.xn(), constant(0.0)}, {lay.kn(), constant(1.0)}};
  for (int i = 0; i < n - 1; ++i) frozen_fiber[lay.k(i)] = constant(0.0);

  BoundaryMap bm;
  std::vector<Expr> probes;  // derivatives that must vanish, then fiber residual inputs
  for (int i = 0; i < n - 1; ++i) {
    Expr xb = substitute(chi.x()[i], at_boundary);
    bm.b.push_back(substitute(xb, frozen_fiber));
    std::vector<Expr> row;
    for (int j = 0; j < n - 1; ++j)
      row.push_back(substitute(differentiate(substitute(chi.xi()[i], at_boundary), lay.k(j)), frozen_fiber));
    bm.coeff.push_back(row);
  }

  std::vector<Expr> eta_n, eta_p, xs, xis;
  for (int i = 0; i < n - 1; ++i) {
    Expr xb = substitute(chi.x()[i], at_boundary);
    Expr kb = substitute(chi.xi()[i], at_boundary);
    eta_n.push_back(differentiate(xb, lay.kn()));
    eta_n.push_back(differentiate(kb, lay.kn()));
    for (int j = 0; j < n - 1; ++j) eta_p.push_back(differentiate(xb, lay.k(j)));
    xis.push_back(kb);
  }
  Tape t_eta_n(eta_n), t_eta_p(eta_p), t_xis(xis);
  std::vector<Expr> flat;
  for (const auto& row : bm.coeff) flat.insert(flat.end(), row.begin(), row.end());
  Tape t_coeff(flat);

  for (Point p : boundary_samples) {
    p = chi.padded(p);
    p[lay.xn()] = 0.0;
    for (double v : t_eta_n.eval(p)) bm.eta_n_residual = std::max(bm.eta_n_residual, std::fabs(v));
    if (!eta_p.empty())
      for (double v : t_eta_p.eval(p)) bm.eta_prime_residual = std::max(bm.eta_prime_residual, std::fabs(v));
    auto got = t_xis.eval(p);
    auto M = t_coeff.eval(p);
    double eta_norm = 0.0;
    for (int i = 0; i < n; ++i) eta_norm += p[lay.k(i)] * p[lay.k(i)];
    eta_norm = std::sqrt(eta_norm);
    for (int i = 0; i < n - 1; ++i) {
      double want = 0.0;
      for (int j = 0; j < n - 1; ++j) want += M[i * (n - 1) + j] * p[lay.k(j)];
      bm.linearity_residual = std::max(bm.linearity_residual, std::fabs(got[i] - want) / eta_norm);
    }
    // Boundary block of the full Jacobian is the Jacobian of (x'_d, xi'_d).
    Eigen::MatrixXd J = chi.jacobian(p);
    const int B = 2 * (n - 1);
    if (B > 0) bm.det_defect = std::max(bm.det_defect, std::fabs(J.topLeftCorner(B, B).determinant() - 1.0));
  }
  const double worst = std::max({bm.eta_n_residual, bm.eta_prime_residual, bm.linearity_residual});
  if (worst > tol)
    throw Error(ErrorKind::NotFiberLinear, "boundary map is not a cotangent lift (residual " + std::to_string(worst) + ")");
  return bm;
}

struct JacobianStructureReport {
  double zero_block_max = 0.0;
  double det_boundary_defect = 0.0;
  double product_defect = 0.0;  // |d_{y_n}x_n * d_{eta_n}xi_n - 1|
  double min_normal_derivative = std::numeric_limits<double>::infinity();  // min |d_{y_n} x_n| over the collar
  Point worst_point;
  bool pass = true;
};

inline JacobianStructureReport check_jacobian_structure(const SymplectoMap& chi,
                                                        const std::vector<Point>& boundary_samples,
                                                        const std::vector<Point>& collar_points = {}) {
  if (!check_boundary_preserving(chi, boundary_samples).pass)
    throw Error(ErrorKind::NotBoundaryPreserving, "x_n does not vanish on the boundary");
  const VarLayout& lay = chi.layout();
  const int n = lay.dim();
  const int N = 2 * n, B = 2 * (n - 1);
  JacobianStructureReport r;
  for (Point p : boundary_samples) {
    p = chi.padded(p);
    p[lay.xn()] = 0.0;
    Eigen::MatrixXd J = chi.jacobian(p);
    double z = 0.0;
    for (int i = 0; i < B; ++i) z = std::max(z, std::fabs(J(i, N - 1)));  // (x', xi') against eta_n
    for (int j = 0; j < B; ++j) z = std::max(z, std::fabs(J(N - 2, j)));  // x_n against (y', eta')
    z = std::max(z, std::fabs(J(N - 2, N - 1)));                          // x_n against eta_n
    if (z > r.zero_block_max || r.worst_point.empty()) r.worst_point = p;
    r.zero_block_max = std::max(r.zero_block_max, z);
    if (B > 0) r.det_boundary_defect = std::max(r.det_boundary_defect, std::fabs(J.topLeftCorner(B, B).determinant() - 1.0));
    r.product_defect = std::max(r.product_defect, std::fabs(J(N - 2, N - 2) * J(N - 1, N - 1) - 1.0));
    r.min_normal_derivative = std::min(r.min_normal_derivative, std::fabs(J(N - 2, N - 2)));
  }
  for (const auto& p : collar_points)
    r.min_normal_derivative = std::min(r.min_normal_derivative, std::fabs(chi.jacobian(p)(N - 2, N - 2)));
  r.pass = r.zero_block_max <= 1e-10 && r.det_boundary_defect <= 1e-8 && r.product_defect <= 1e-8 &&
           r.min_normal_derivative > 0.0;
  return r;
}

// Largest relative homogeneity defect: fiber components degree 1, base degree 0.
inline double map_homogeneity_defect(const SymplectoMap& chi, const std::vector<Point>& samples) {
  const VarLayout& lay = chi.layout();
  double worst = 0.0;
  for (const auto& p : samples)
    for (int i = 0; i < lay.dim(); ++i)
      for (double lam : {2.0, 10.0, 100.0}) {
        worst = std::max(worst, homogeneity_defect(chi.x()[i], chi.padded(p), lay, 0.0, lam));
        worst = std::max(worst, homogeneity_defect(chi.xi()[i], chi.padded(p), lay, 1.0, lam));
      }
  return worst;
}

}  // namespace collar
