#pragma once

// Test functions u(t) of one variable: closed-form expression in t, optional
// analytic Fourier transform, decay certificate, group action and seminorms.
// Fourier convention: u^(xi) = int e^{-i t xi} u(t) dt.

#include <cctype>
#include <cmath>
#include <complex>
#include <functional>
#include <memory>
#include <string>
#include <vector>

#include <boost/math/tools/minima.hpp>

#include "collar/error.hpp"
#include "collar/expr.hpp"
#include "collar/parse.hpp"
#include "collar/tape.hpp"

namespace collar {

using cplx = std::complex<double>;

// u lives in the t slot of the one-dimensional layout.
inline const VarLayout& line_layout() {
  static const VarLayout l(1);
  return l;
}

inline constexpr int kCertOrder = 6;
inline constexpr double kCertRadius = 40.0;

struct DecayCertificate {
  // sup |t^l u^(s)(t)| over the certificate grid, l, s <= kCertOrder
  std::vector<std::vector<double>> sup;
  double radius = kCertRadius;
  double edge = 0.0;  // max_{l,s} |t^l u^(s)| at |t| = radius
  bool verified = false;
};

class SchwartzFn {
 public:
  using Transform = std::function<cplx(double)>;

  SchwartzFn() = default;
  // half_line: u is taken on t >= 0 and extended by zero; `ft` is then the
  // transform of that extension.
  SchwartzFn(std::string name, Expr u, Transform ft = {}, bool half_line = false)
      : name_(std::move(name)), expr_(std::move(u)), ft_(std::move(ft)), half_(half_line) {
    const int t = line_layout().t();
    if (expr_.deps() & ~(std::uint64_t{1} << t))
      throw Error(ErrorKind::ValidationError, "test function '" + name_ + "' may only depend on t");
    auto tapes = std::make_shared<std::vector<Tape>>();
    Expr d = expr_;
    for (int s = 0; s <= kCertOrder; ++s) {
      tapes->emplace_back(d);
      d = differentiate(d, t);
    }
    tapes_ = tapes;
    certify();
  }

  const std::string& name() const { return name_; }
  const Expr& expr() const { return expr_; }
  bool half_line() const { return half_; }
  bool has_transform() const { return static_cast<bool>(ft_); }
  const DecayCertificate& certificate() const { return cert_; }

  double operator()(double t) const { return derivative(0, t); }

  double derivative(int s, double t) const {
    if (s < 0 || s > kCertOrder)
      throw Error(ErrorKind::DerivativeUnavailable, "derivative order " + std::to_string(s) + " not available");
    double p[5] = {0, 0, 0, 0, 0};
    p[line_layout().t()] = t;
    return (*tapes_)[s].eval1(p);
  }

  cplx transform(double xi) const {
    if (!ft_) throw Error(ErrorKind::DerivativeUnavailable, "no closed-form transform for '" + name_ + "'");
    return ft_(xi);
  }

  // Smallest R with |u^(s)(t)| (1 + |t|)^2 <= 1e-18 for |t| >= R, s <= 2, on a 1/4 grid up to 60.
  double decay_radius() const {
    double r = 1.0;
    for (double t = 0.0; t <= 60.0; t += 0.25)
      for (double sgn : {1.0, -1.0}) {
        if (half_ && sgn < 0) continue;
        for (int s = 0; s <= 2; ++s)
          if (std::fabs(derivative(s, sgn * t)) * (1 + t) * (1 + t) > 1e-18) r = std::max(r, t + 0.25);
      }
    return r;
  }

 private:
  void certify() {
    cert_.sup.assign(kCertOrder + 1, std::vector<double>(kCertOrder + 1, 0.0));
    const double lo = half_ ? 0.0 : -kCertRadius;
    const int N = static_cast<int>((kCertRadius - lo) * 16);
    for (int i = 0; i <= N; ++i) {
      const double t = lo + i / 16.0;
      for (int s = 0; s <= kCertOrder; ++s) {
        const double v = std::fabs(derivative(s, t));
        double w = 1.0;
        for (int l = 0; l <= kCertOrder; ++l, w *= std::fabs(t)) {
          cert_.sup[l][s] = std::max(cert_.sup[l][s], w * v);
          if (std::fabs(std::fabs(t) - kCertRadius) < 1e-12) cert_.edge = std::max(cert_.edge, w * v);
        }
      }
    }
    double top = 0.0;
    for (const auto& row : cert_.sup)
      for (double v : row) top = std::max(top, v);
    cert_.verified = std::isfinite(top) && cert_.edge <= 1e-6 * std::max(1.0, top);
  }

  std::string name_;
  Expr expr_;
  Transform ft_;
  bool half_ = false;
  std::shared_ptr<const std::vector<Tape>> tapes_;
  DecayCertificate cert_;
};

// Physicists' Hermite polynomial H_j.
inline Expr hermite_poly(int j, const Expr& t) {
  Expr a = constant(1.0), b = 2.0 * t;
  if (j == 0) return a;
  for (int k = 1; k < j; ++k) {
    Expr c = 2.0 * t * b - constant(2.0 * k) * a;
    a = b;
    b = c;
  }
  return b;
}

inline double hermite_value(int j, double t) {
  double a = 1.0, b = 2.0 * t;
  if (j == 0) return a;
  for (int k = 1; k < j; ++k) {
    const double c = 2.0 * t * b - 2.0 * k * a;
    a = b;
    b = c;
  }
  return b;
}

// h_j = H_j(t) e^{-t^2/2}, an eigenfunction of the transform with eigenvalue sqrt(2 pi) (-i)^j.
inline SchwartzFn hermite_function(int j) {
  if (j < 0 || j > 12) throw Error(ErrorKind::ValidationError, "Hermite index out of range");
  Expr t = var(line_layout().t());
  Expr u = hermite_poly(j, t) * exp(-0.5 * pow(t, 2));
  static const cplx mi[4] = {{1, 0}, {0, -1}, {-1, 0}, {0, 1}};
  const cplx f = std::sqrt(2.0 * M_PI) * mi[j % 4];
  return SchwartzFn("h" + std::to_string(j), u,
                    [j, f](double xi) { return f * hermite_value(j, xi) * std::exp(-0.5 * xi * xi); });
}

// e^{-t} on t >= 0:  F(e+ u)(xi) = 1 / (1 + i xi).
inline SchwartzFn exp_half_line() {
  Expr t = var(line_layout().t());
  return SchwartzFn("exp_half", exp(-t), [](double xi) { return 1.0 / cplx(1.0, xi); }, true);
}

// t e^{-t} on t >= 0:  1 / (1 + i xi)^2.
inline SchwartzFn texp_half_line() {
  Expr t = var(line_layout().t());
  return SchwartzFn("texp_half", t * exp(-t), [](double xi) { return 1.0 / (cplx(1.0, xi) * cplx(1.0, xi)); }, true);
}

// e^{-t^2/2} on t >= 0, numeric transform only.
inline SchwartzFn gauss_half_line() {
  Expr t = var(line_layout().t());
  return SchwartzFn("gauss_half", exp(-0.5 * pow(t, 2)), {}, true);
}

inline std::vector<std::string> test_function_names() {
  return {"h0", "h1", "h2", "h3", "h4", "exp_half", "texp_half", "gauss_half"};
}

// Catalog name, or an inline expression in t (whole line, numeric transform).
inline SchwartzFn test_function(const std::string& name) {
  if (name.size() == 2 && name[0] == 'h' && std::isdigit(static_cast<unsigned char>(name[1])))
    return hermite_function(name[1] - '0');
  if (name == "exp_half") return exp_half_line();
  if (name == "texp_half") return texp_half_line();
  if (name == "gauss_half") return gauss_half_line();
  return SchwartzFn(name, parse(name, line_layout()));
}

// (kappa_lambda u)(t) = lambda^{1/2} u(lambda t).
inline SchwartzFn apply_group_action(const SchwartzFn& u, double lambda) {
  if (!(lambda > 0.0)) throw Error(ErrorKind::ValidationError, "group action needs lambda > 0");
  const int t = line_layout().t();
  Expr e = std::sqrt(lambda) * substitute(u.expr(), {{t, lambda * var(t)}});
  SchwartzFn::Transform ft;
  if (u.has_transform()) ft = [u, lambda](double xi) { return u.transform(xi / lambda) / std::sqrt(lambda); };
  return SchwartzFn(u.name() + "@" + detail::fmt_double(lambda), e, ft, u.half_line());
}

// sup |t^l u^(s)(t)| over |t| <= 40 (t >= 0 on the half line): 1/128 grid,
// then a Brent refinement around the grid maximum.
inline double schwartz_seminorm(const SchwartzFn& u, int l, int s, double radius = kCertRadius, int per_unit = 128) {
  if (l < 0) throw Error(ErrorKind::ValidationError, "seminorm weight must be >= 0");
  auto f = [&](double t) { return std::pow(std::fabs(t), l) * std::fabs(u.derivative(s, t)); };
  const double lo = u.half_line() ? 0.0 : -radius;
  const int N = static_cast<int>(std::lround((radius - lo) * per_unit));
  const double h = (radius - lo) / N;
  double best = -1.0, at = 0.0;
  for (int i = 0; i <= N; ++i) {
    const double t = lo + i * h;
    const double v = f(t);
    if (v > best) {
      best = v;
      at = t;
    }
  }
  auto neg = [&](double t) { return -f(t); };
  const double a = std::max(lo, at - h), b = std::min(radius, at + h);
  auto r = boost::math::tools::brent_find_minima(neg, a, b, 52);
  return std::max(best, -r.second);
}

// sup |t^l v(t)| over sampled values.
inline double sampled_seminorm(const std::vector<double>& t, const std::vector<double>& absval, int l) {
  double best = 0.0;
  for (std::size_t i = 0; i < t.size(); ++i) best = std::max(best, std::pow(std::fabs(t[i]), l) * absval[i]);
  return best;
}

}  // namespace collar
