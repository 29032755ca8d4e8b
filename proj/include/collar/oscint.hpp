#pragma once

// Fourier transforms of test functions and the normal-direction operators
//   (A_n u)(x_n)  = int e^{i phi(x', x_n, xi', xi_n)} a(x', x_n, xi', xi_n) u^(xi_n) dxi_n / 2pi
//   (A+_n u)(x_n) = r+ of the same with F(e+ u) in place of u^,
// with phi = psi - psi(x', 0, xi', 1) and (x', xi') frozen.

#include <cmath>
#include <complex>
#include <map>
#include <mutex>
#include <string>
#include <vector>

#include "collar/catalog.hpp"
#include "collar/cutoff.hpp"
#include "collar/fit.hpp"
#include "collar/genphase.hpp"
#include "collar/parallel.hpp"
#include "collar/quadrature.hpp"
#include "collar/schwartz.hpp"

namespace collar {

enum class QuadMode { Auto, Direct, CutoffExtrapolate };

inline std::string to_string(QuadMode m) {
  switch (m) {
    case QuadMode::Auto: return "auto";
    case QuadMode::Direct: return "direct-adaptive";
    case QuadMode::CutoffExtrapolate: return "cutoff-extrapolate";
  }
  return "?";
}

struct QuadratureSpec {
  QuadMode mode = QuadMode::Auto;
  double tol = 1e-12;          // relative Gauss-Kronrod tolerance per panel
  double panel = 1.0;          // panel width in xi_n
  double radius = 0.0;         // truncation radius, 0 = from decay
  double cutoff_radius = 256;  // first radius R of the cutoff-extrapolate ladder R, 2R, 4R, ...
  int levels = 3;
  unsigned max_depth = 10;
  double budget = 1e-4;        // QuadratureBudget above this error estimate
};

struct NormalOperatorSpec {
  GeneratingPhase phase;
  Expr a_re = constant(1.0), a_im = constant(0.0);
  double order = 0.0;
  std::vector<double> x_prime, xi_prime;
  QuadratureSpec quad;
};

inline NormalOperatorSpec normal_spec(const Scenario& s) {
  NormalOperatorSpec sp;
  const VarLayout lay = s.layout();
  sp.phase = build_phase(s);
  sp.a_re = parse(s.amplitude.re, lay);
  sp.a_im = parse(s.amplitude.im, lay);
  sp.order = s.amplitude.order;
  sp.x_prime = s.frozen_x.empty() ? std::vector<double>(s.n - 1, 0.0) : s.frozen_x;
  sp.xi_prime = s.frozen_xi.empty() ? std::vector<double>(s.n - 1, 0.0) : s.frozen_xi;
  return sp;
}

namespace detail {

// e^{i phi} a at (x', x_n, xi', xi_n), one compiled program per spec.
class PhaseAmplitude {
 public:
  explicit PhaseAmplitude(const NormalOperatorSpec& sp)
      : lay_(sp.phase.lay), tape_(std::vector<Expr>{sp.phase.phi, sp.a_re, sp.a_im}) {
    base_.assign(lay_.size(), 0.0);
    if (static_cast<int>(sp.x_prime.size()) != lay_.dim() - 1 || static_cast<int>(sp.xi_prime.size()) != lay_.dim() - 1)
      throw Error(ErrorKind::ValidationError, "frozen x' and xi' need n-1 entries");
    for (int i = 0; i < lay_.dim() - 1; ++i) {
      base_[lay_.x(i)] = sp.x_prime[i];
      base_[lay_.k(i)] = sp.xi_prime[i];
    }
  }

  cplx operator()(double xn, double kn, std::vector<double>& p, std::vector<double>& ws) const {
    p = base_;
    p[lay_.xn()] = xn;
    p[lay_.kn()] = kn;
    double v[3];
    tape_.eval(p, v, ws);
    return std::polar(1.0, v[0]) * cplx(v[1], v[2]);
  }

 private:
  VarLayout lay_;
  Tape tape_;
  std::vector<double> base_;
};

// Memoized numeric transform for functions without a closed form.
class TransformCache {
 public:
  explicit TransformCache(std::function<cplx(double)> f) : f_(std::move(f)) {}
  cplx operator()(double xi) {
    {
      std::lock_guard<std::mutex> g(m_);
      auto it = c_.find(xi);
      if (it != c_.end()) return it->second;
    }
    const cplx v = f_(xi);
    std::lock_guard<std::mutex> g(m_);
    c_.emplace(xi, v);
    return v;
  }

 private:
  std::function<cplx(double)> f_;
  std::map<double, cplx> c_;
  std::mutex m_;
};

}  // namespace detail

struct TransformValues {
  std::vector<double> xi;
  std::vector<cplx> value;
  std::vector<double> error;
};

namespace detail {

// Quadrature transform of one test function.  On the half line, large |xi| uses
// the endpoint expansion sum_{s<S} u^(s)(0) / (i xi)^{s+1}, whose remainder is
// bounded by ||u^(S)||_1 / |xi|^S.
class NumericTransform {
 public:
  static constexpr int kTerms = 10;

  NumericTransform(const SchwartzFn& u, double tol) : u_(u), tol_(tol) {
    T_ = u.decay_radius();
    lo_ = u.half_line() ? 0.0 : -T_;
    if (u.half_line()) {
      const int t = line_layout().t();
      double p[5] = {0, 0, 0, 0, 0};
      Expr d = u.expr();
      for (int s = 0; s < kTerms; ++s) {
        d0_[s] = Tape(d).eval1(p);
        d = differentiate(d, t);
      }
      const Tape top(d);
      auto q = integrate_panels(
          [&](double x) {
            double pp[5] = {0, 0, 0, 0, 0};
            pp[t] = x;
            return std::fabs(top.eval1(pp));
          },
          0.0, T_, 0.5, 1e-8);
      dS_ = q.value.real() + q.error;
      l1_ = integrate_panels([&](double x) { return std::fabs(u(x)); }, 0.0, T_, 1.0, 1e-10).value.real();
    }
  }

  cplx operator()(double xi, double& err) const {
    if (u_.half_line() && std::fabs(xi) > 1.0) {
      const double bound = dS_ / std::pow(std::fabs(xi), kTerms);
      if (bound <= 1e-15 * std::max(1.0, l1_)) {
        const cplx ix(0.0, xi);
        cplx v = 0.0, p = 1.0 / ix;
        for (int s = 0; s < kTerms; ++s, p /= ix) v += d0_[s] * p;
        err = bound;
        return v;
      }
    }
    auto f = [&](double t) { return std::polar(u_(t), -t * xi); };
    const double width = std::min(1.0, 6.0 * M_PI / std::max(1.0, std::fabs(xi)));  // three periods per panel
    auto q = integrate_panels(f, lo_, T_, width, tol_, 4);
    if (!std::isfinite(q.error) || q.error > 1e-6 * std::max(1.0, q.l1))
      throw Error(ErrorKind::QuadratureBudget,
                  "transform of '" + u_.name() + "' did not converge at xi = " + std::to_string(xi));
    err = q.error;
    return q.value;
  }

 private:
  SchwartzFn u_;
  double tol_, T_ = 0.0, lo_ = 0.0, dS_ = 0.0, l1_ = 0.0;
  double d0_[kTerms] = {};
};

}  // namespace detail

// Numeric transform over the decay radius of u (t >= 0 for half-line functions).
inline TransformValues fourier_transform_numeric(const SchwartzFn& u, const std::vector<double>& xis,
                                                 double tol = 1e-13) {
  const detail::NumericTransform nt(u, tol);
  TransformValues r{xis, std::vector<cplx>(xis.size()), std::vector<double>(xis.size())};
  parallel_for(xis.size(), [&](std::size_t i) { r.value[i] = nt(xis[i], r.error[i]); });
  return r;
}

// Closed form when the test function carries one, numeric otherwise.
inline std::vector<cplx> fourier_transform(const SchwartzFn& u, const std::vector<double>& xis) {
  if (u.half_line()) throw Error(ErrorKind::ValidationError, "'" + u.name() + "' lives on the half line");
  if (!u.has_transform()) return fourier_transform_numeric(u, xis).value;
  std::vector<cplx> v;
  for (double x : xis) v.push_back(u.transform(x));
  return v;
}

// F(e+ u)(xi) = int_0^inf e^{-i t xi} u(t) dt, always by quadrature.
inline TransformValues half_line_ft(const SchwartzFn& u, const std::vector<double>& xis, double tol = 1e-13) {
  if (!u.half_line()) {
    SchwartzFn h(u.name(), u.expr(), {}, true);
    return fourier_transform_numeric(h, xis, tol);
  }
  return fourier_transform_numeric(u, xis, tol);
}

struct DecayReport {
  PowerFit positive, negative;
  double exponent = 0.0;  // the slower of the two sides
};

// Log-log slope of |F(e+ u)(xi)| on +-[lo, hi].
inline DecayReport measure_decay(const SchwartzFn& u, double lo = 10.0, double hi = 1000.0, int count = 25) {
  std::vector<double> pos, xis;
  for (int i = 0; i < count; ++i) pos.push_back(lo * std::pow(hi / lo, static_cast<double>(i) / (count - 1)));
  for (double x : pos) xis.push_back(x);
  for (double x : pos) xis.push_back(-x);
  auto F = half_line_ft(u, xis);
  std::vector<double> ap, an;
  for (int i = 0; i < count; ++i) {
    ap.push_back(std::abs(F.value[i]));
    an.push_back(std::abs(F.value[count + i]));
  }
  DecayReport r;
  r.positive = fit_power_law(pos, ap);
  r.negative = fit_power_law(pos, an);
  r.exponent = std::max(r.positive.slope, r.negative.slope);
  return r;
}

struct ApplyResult {
  std::vector<double> x;
  std::vector<cplx> value;
  std::vector<double> error;
  QuadMode mode = QuadMode::Direct;
  double radius = 0.0;
  double max_error() const {
    double m = 0.0;
    for (double e : error) m = std::max(m, e);
    return m;
  }
};

namespace detail {

// Smallest integer R with |g(xi)| <= rel max|g| for |xi| >= R (scan to 80).
// Numeric transforms bottom out near their own quadrature floor, hence rel.
inline double decay_cut(const std::function<double(double)>& g, double rel = 1e-18) {
  double top = 0.0;
  std::vector<std::pair<double, double>> s;
  for (double x = 0.0; x <= 80.0; x += 0.25) {
    const double v = std::max(g(x), g(-x));
    s.push_back({x, v});
    top = std::max(top, v);
  }
  double R = 4.0;
  for (auto [x, v] : s)
    if (v > rel * top) R = std::max(R, std::ceil(x + 0.25));
  if (R > 80.0) throw Error(ErrorKind::DecayClassUnsupported, "integrand does not decay within |xi| <= 80");
  return R;
}

inline void check_budget(const ApplyResult& r, double budget) {
  for (std::size_t i = 0; i < r.x.size(); ++i)
    if (!(r.error[i] <= budget))
      throw Error(ErrorKind::QuadratureBudget,
                  "error estimate " + std::to_string(r.error[i]) + " at x_n = " + std::to_string(r.x[i]));
}

// Cutoff-extrapolate: I(R) = int omega(xi/R) f(xi), R = R0 2^j, then Aitken on the last three.
inline void cutoff_extrapolate(const NormalOperatorSpec& sp, const PhaseAmplitude& pa,
                               const std::function<cplx(double)>& F, ApplyResult& r) {
  const QuadratureSpec& q = sp.quad;
  const int L = std::max(3, q.levels);
  std::vector<double> radii;
  for (int j = 0; j < L; ++j) radii.push_back(q.cutoff_radius * std::pow(2.0, j));
  const Nodes nd = gauss_panels(-radii.back(), radii.back(), q.panel);
  std::vector<cplx> Fv(nd.x.size());
  parallel_for(nd.x.size(), [&](std::size_t i) { Fv[i] = F(nd.x[i]); });
  std::vector<std::vector<double>> wj(L, std::vector<double>(nd.x.size()));
  for (int j = 0; j < L; ++j)
    for (std::size_t i = 0; i < nd.x.size(); ++i) wj[j][i] = nd.w[i] * omega_value(nd.x[i] / radii[j]);
  r.radius = radii.back();
  parallel_for(r.x.size(), [&](std::size_t k) {
    std::vector<double> p, ws;
    std::vector<cplx> I(L);
    double l1 = 0.0;
    for (std::size_t i = 0; i < nd.x.size(); ++i) {
      const cplx b = pa(r.x[k], nd.x[i], p, ws) * Fv[i];
      l1 += nd.w[i] * std::abs(b);
      for (int j = 0; j < L; ++j) I[j] += wj[j][i] * b;
    }
    for (auto& v : I) v /= 2.0 * M_PI;
    const cplx d1 = I[L - 2] - I[L - 3], d2 = I[L - 1] - I[L - 2];
    cplx v = I[L - 1];
    if (std::abs(d1) > 0.0) {
      const cplx rho = d2 / d1;
      if (std::abs(rho) < 0.5) v += d2 * rho / (1.0 - rho);
    }
    r.value[k] = v;
    r.error[k] = std::abs(d2) + 64 * std::numeric_limits<double>::epsilon() * l1 / (2.0 * M_PI);
  });
}

}  // namespace detail

// A_n u for u on the whole line: direct adaptive panels over |xi_n| <= R.
inline ApplyResult apply_normal_op(const NormalOperatorSpec& sp, const SchwartzFn& u, const std::vector<double>& xs) {
  if (u.half_line()) throw Error(ErrorKind::ValidationError, "'" + u.name() + "' is a half-line function");
  if (sp.quad.mode == QuadMode::CutoffExtrapolate)
    throw Error(ErrorKind::DecayClassUnsupported, "a Schwartz transform is integrated directly");
  detail::PhaseAmplitude pa(sp);
  std::shared_ptr<detail::TransformCache> cache;
  if (!u.has_transform())
    cache = std::make_shared<detail::TransformCache>(
        [nt = std::make_shared<detail::NumericTransform>(u, 1e-13)](double xi) {
          double e;
          return (*nt)(xi, e);
        });
  auto uhat = [&](double xi) { return cache ? (*cache)(xi) : u.transform(xi); };
  const double m = std::max(0.0, sp.order);
  ApplyResult r;
  r.mode = QuadMode::Direct;
  r.radius = sp.quad.radius > 0 ? sp.quad.radius
                                : detail::decay_cut([&](double xi) { return std::abs(uhat(xi)) * std::pow(std::sqrt(1.0 + xi * xi), m); },
                                                    cache ? 1e-14 : 1e-18);
  r.x = xs;
  r.value.resize(xs.size());
  r.error.resize(xs.size());
  parallel_for(xs.size(), [&](std::size_t k) {
    std::vector<double> p, ws;
    auto f = [&](double kn) { return pa(xs[k], kn, p, ws) * uhat(kn); };
    auto q = integrate_panels(f, -r.radius, r.radius, sp.quad.panel, sp.quad.tol, sp.quad.max_depth);
    r.value[k] = q.value / (2.0 * M_PI);
    r.error[k] = q.error / (2.0 * M_PI);
  });
  detail::check_budget(r, sp.quad.budget);
  return r;
}

// r+ A+_n e+ u at x_n > 0.  Integrand decay is (order - 1): direct panels up to
// a sharp radius when that is <= -3/2, cutoff-extrapolate otherwise.
inline ApplyResult apply_truncated_op(const NormalOperatorSpec& sp, const SchwartzFn& u, const std::vector<double>& xs) {
  if (!u.half_line()) throw Error(ErrorKind::ValidationError, "'" + u.name() + "' is not a half-line function");
  for (double x : xs)
    if (!(x > 0.0)) throw Error(ErrorKind::ValidationError, "the truncated operator is evaluated at x_n > 0 only");
  const double decay = sp.order - 1.0;
  QuadMode mode = sp.quad.mode;
  if (mode == QuadMode::Auto) mode = decay <= -1.5 ? QuadMode::Direct : QuadMode::CutoffExtrapolate;
  if (mode == QuadMode::Direct && decay > -1.5)
    throw Error(ErrorKind::DecayClassUnsupported, "direct mode needs integrand decay <= -3/2");
  detail::PhaseAmplitude pa(sp);
  std::shared_ptr<detail::TransformCache> cache;
  if (!u.has_transform())
    cache = std::make_shared<detail::TransformCache>(
        [nt = std::make_shared<detail::NumericTransform>(u, 1e-13)](double xi) {
          double e;
          return (*nt)(xi, e);
        });
  std::function<cplx(double)> F = [&](double xi) { return cache ? (*cache)(xi) : u.transform(xi); };
  ApplyResult r;
  r.mode = mode;
  r.x = xs;
  r.value.resize(xs.size());
  r.error.resize(xs.size());
  if (mode == QuadMode::CutoffExtrapolate) {
    detail::cutoff_extrapolate(sp, pa, F, r);
  } else {
    r.radius = sp.quad.radius > 0 ? sp.quad.radius : 1024.0;
    parallel_for(xs.size(), [&](std::size_t k) {
      std::vector<double> p, ws;
      auto f = [&](double kn) { return pa(xs[k], kn, p, ws) * F(kn); };
      auto q = integrate_panels(f, -r.radius, r.radius, sp.quad.panel, sp.quad.tol, sp.quad.max_depth);
      // one integration by parts bounds each oscillating tail by |f(R)| / x_n
      const double tail = (std::abs(f(r.radius)) + std::abs(f(-r.radius))) / xs[k];
      r.value[k] = q.value / (2.0 * M_PI);
      r.error[k] = (q.error + tail) / (2.0 * M_PI);
    });
  }
  detail::check_budget(r, sp.quad.budget);
  return r;
}

inline ApplyResult apply_op(const NormalOperatorSpec& sp, const SchwartzFn& u, const std::vector<double>& xs) {
  return u.half_line() ? apply_truncated_op(sp, u, xs) : apply_normal_op(sp, u, xs);
}

// Fraction of points where halving the panel tolerance moves the value by no
// more than the reported error estimate.
inline double halving_consistency(NormalOperatorSpec sp, const SchwartzFn& u, const std::vector<double>& xs) {
  auto a = apply_op(sp, u, xs);
  sp.quad.tol /= 2.0;
  sp.quad.cutoff_radius *= 2.0;
  auto b = apply_op(sp, u, xs);
  int ok = 0;
  for (std::size_t i = 0; i < xs.size(); ++i)
    if (std::abs(a.value[i] - b.value[i]) <= a.error[i]) ++ok;
  return xs.empty() ? 1.0 : static_cast<double>(ok) / xs.size();
}

// Trapezoid L2 norm of samples on an increasing grid.
inline double discrete_l2(const std::vector<double>& x, const std::vector<cplx>& v) {
  double s = 0.0;
  for (std::size_t i = 1; i < x.size(); ++i) s += 0.5 * (x[i] - x[i - 1]) * (std::norm(v[i]) + std::norm(v[i - 1]));
  return std::sqrt(s);
}

}  // namespace collar
