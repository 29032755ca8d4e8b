#pragma once

// Operator-valued symbol estimates for the normal-direction operator:
//   kappa_{1/L} d^alpha_{x'} d^beta_{xi'} A_n kappa_L u,   L = <xi'>,
// computed as
//   out(t) = int e^{i phi(x', t/L, xi', L eta)} b(x', t/L, xi', L eta) u^(eta) deta / 2pi
// where e^{i phi} b = d^alpha_{x'} d^beta_{xi'} (e^{i phi} a).  Slopes of
// sup |t^l d_t^s out| against L are the acceptance object.

#include <cmath>
#include <complex>
#include <string>
#include <vector>

#include "collar/fit.hpp"
#include "collar/jet.hpp"
#include "collar/oscint.hpp"
#include "collar/symbol.hpp"

namespace collar {

struct AmplitudePair {
  Expr re = constant(0.0), im = constant(0.0);
};

// One step of e^{i phi} b -> D(e^{i phi} b) = e^{i phi}(i D phi b + D b).
inline AmplitudePair differentiate_oscillatory(const Expr& phi, const AmplitudePair& b, int v) {
  const Expr dphi = differentiate(phi, v);
  return {differentiate(b.re, v) - dphi * b.im, differentiate(b.im, v) + dphi * b.re};
}

// b with e^{i phi} b = d^alpha_{x'} d^beta_{xi'} (e^{i phi} a); alpha, beta have n-1 entries.
inline AmplitudePair tilde_amplitude(const VarLayout& lay, const Expr& phi, const AmplitudePair& a,
                                     const MultiIndex& alpha, const MultiIndex& beta) {
  if (static_cast<int>(alpha.size()) != lay.dim() - 1 || static_cast<int>(beta.size()) != lay.dim() - 1)
    throw Error(ErrorKind::ValidationError, "alpha and beta need n-1 entries");
  AmplitudePair b = a;
  for (int i = 0; i < lay.dim() - 1; ++i) {
    for (int j = 0; j < alpha[i]; ++j) b = differentiate_oscillatory(phi, b, lay.x(i));
    for (int j = 0; j < beta[i]; ++j) b = differentiate_oscillatory(phi, b, lay.k(i));
  }
  return b;
}

inline AmplitudePair tilde_amplitude(const NormalOperatorSpec& sp, const MultiIndex& alpha, const MultiIndex& beta) {
  return tilde_amplitude(sp.phase.lay, sp.phase.phi, {sp.a_re, sp.a_im}, alpha, beta);
}

struct ConjugationGrid {
  std::vector<double> brackets = dyadic_ladder(9);  // <xi'> = 1, 2, ..., 256
  std::vector<double> t = linspace(-8.0, 8.0, 161);
  int s_max = 2;
  double panel = 0.5;  // eta panel width; 20- and 10-point Gauss rules per panel
};

struct ConjugatedFamily {
  MultiIndex alpha, beta;
  std::vector<double> brackets, t;
  std::vector<std::string> names;
  // value[u][rung][s][i] = d_t^s out at t[i]
  std::vector<std::vector<std::vector<std::vector<cplx>>>> value;
  double max_error = 0.0;  // largest |20-point - 10-point| over everything
  double radius = 0.0;
};

namespace detail {

// Unit direction for xi' at the frozen point (e_1 when xi' = 0).
inline std::vector<double> xi_direction(const std::vector<double>& xi) {
  double r = 0.0;
  for (double v : xi) r += v * v;
  std::vector<double> d(xi.size(), 0.0);
  if (r == 0.0) {
    if (!d.empty()) d[0] = 1.0;
    return d;
  }
  for (std::size_t i = 0; i < xi.size(); ++i) d[i] = xi[i] / std::sqrt(r);
  return d;
}

}  // namespace detail

inline ConjugatedFamily conjugated_family(const NormalOperatorSpec& sp, const MultiIndex& alpha, const MultiIndex& beta,
                                          const std::vector<SchwartzFn>& us, const ConjugationGrid& g = {}) {
  const VarLayout& lay = sp.phase.lay;
  const int n = lay.dim();
  for (const auto& u : us)
    if (u.half_line()) throw Error(ErrorKind::ValidationError, "'" + u.name() + "' is a half-line function");
  AmplitudePair b = tilde_amplitude(sp, alpha, beta);

  // rescale x_n = t / L, xi_n = L eta (L in the lam slot, eta in the tau slot)
  const std::map<int, Expr> rescale{{lay.xn(), var(lay.t()) / var(lay.lam())}, {lay.kn(), var(lay.lam()) * var(lay.tau())}};
  const Expr phi = substitute(sp.phase.phi, rescale);
  b = {substitute(b.re, rescale), substitute(b.im, rescale)};
  std::vector<Expr> outs{phi};
  for (int s = 0; s <= g.s_max; ++s) {
    outs.push_back(b.re);
    outs.push_back(b.im);
    if (s < g.s_max) b = differentiate_oscillatory(phi, b, lay.t());
  }
  const Tape tape(outs);

  ConjugatedFamily fam;
  fam.alpha = alpha;
  fam.beta = beta;
  fam.brackets = g.brackets;
  fam.t = g.t;
  for (const auto& u : us) fam.names.push_back(u.name());

  // eta range from the slowest transform, weighted by the polynomial growth of b
  const double grow = std::max(0.0, sp.order) + total_order(alpha) + g.s_max + 2;
  fam.radius = 4.0;
  for (const auto& u : us)
    fam.radius = std::max(fam.radius, detail::decay_cut([&](double eta) {
                            return std::abs(u.has_transform() ? u.transform(eta) : fourier_transform(u, {eta})[0]) *
                                   std::pow(1.0 + eta * eta, grow / 2);
                          }));
  const double R = std::ceil(fam.radius / g.panel) * g.panel;
  fam.radius = R;

  using GL20 = boost::math::quadrature::gauss<double, 20>;
  using GL10 = boost::math::quadrature::gauss<double, 10>;
  struct Rule {
    Nodes nd;
    std::vector<std::vector<cplx>> uhat;  // per u
  };
  auto make_rule = [&](const auto& ab, const auto& wt) {
    Rule r;
    const int panels = static_cast<int>(std::lround(2 * R / g.panel));
    for (int p = 0; p < panels; ++p) {
      const double c = -R + (p + 0.5) * g.panel, h = 0.5 * g.panel;
      for (std::size_t i = 0; i < ab.size(); ++i)
        for (double sg : {-1.0, 1.0}) {
          if (ab[i] == 0.0 && sg > 0) continue;
          r.nd.x.push_back(c + sg * h * ab[i]);
          r.nd.w.push_back(wt[i] * h);
        }
    }
    for (const auto& u : us) r.uhat.push_back(fourier_transform(u, r.nd.x));
    return r;
  };
  const Rule fine = make_rule(GL20::abscissa(), GL20::weights());
  const Rule coarse = make_rule(GL10::abscissa(), GL10::weights());

  const std::vector<double> dir = detail::xi_direction(sp.xi_prime);
  const std::size_t S = g.s_max + 1, T = g.t.size();
  fam.value.assign(us.size(), std::vector<std::vector<std::vector<cplx>>>(
                                  g.brackets.size(), std::vector<std::vector<cplx>>(S, std::vector<cplx>(T))));
  std::vector<double> errs(g.brackets.size() * T, 0.0);
  parallel_for(g.brackets.size() * T, [&](std::size_t job) {
    const std::size_t j = job / T, i = job % T;
    const double L = g.brackets[j], r = std::sqrt(std::max(0.0, L * L - 1.0));
    std::vector<double> p(lay.size(), 0.0), out(outs.size()), ws;
    for (int q = 0; q < n - 1; ++q) {
      p[lay.x(q)] = sp.x_prime[q];
      p[lay.k(q)] = r * dir[q];
    }
    p[lay.t()] = g.t[i];
    p[lay.lam()] = L;
    auto integrate = [&](const Rule& rule) {
      std::vector<cplx> acc(us.size() * S);
      for (std::size_t k = 0; k < rule.nd.x.size(); ++k) {
        p[lay.tau()] = rule.nd.x[k];
        tape.eval(p, out, ws);
        const cplx e = std::polar(rule.nd.w[k] / (2.0 * M_PI), out[0]);
        for (std::size_t s = 0; s < S; ++s) {
          const cplx ker = e * cplx(out[1 + 2 * s], out[2 + 2 * s]);
          for (std::size_t v = 0; v < us.size(); ++v) acc[v * S + s] += ker * rule.uhat[v][k];
        }
      }
      return acc;
    };
    const auto a20 = integrate(fine), a10 = integrate(coarse);
    double e = 0.0;
    for (std::size_t v = 0; v < us.size(); ++v)
      for (std::size_t s = 0; s < S; ++s) {
        fam.value[v][j][s][i] = a20[v * S + s];
        e = std::max(e, std::abs(a20[v * S + s] - a10[v * S + s]));
      }
    errs[job] = e;
  });
  for (double e : errs) fam.max_error = std::max(fam.max_error, e);
  return fam;
}

struct OrderFit {
  MultiIndex alpha, beta;  // x' and xi' derivative counts
  int l = 0, s = 0;
  std::vector<double> brackets;
  std::vector<double> values;  // per rung, for the worst test function
  std::string worst;           // that test function
  PowerFit fit;
  double residual = 0.0;  // rms log residual of the fit
  double target = 0.0;    // m - |beta|
  bool pass = false;
};

inline constexpr double kOrderTol = 0.1;

// Decay tracks the xi'-derivatives: target m - |beta|.
inline OrderFit fit_order(const ConjugatedFamily& fam, double m, int l, int s) {
  if (fam.brackets.size() < 6) throw Error(ErrorKind::RegressionIllConditioned, "order fit needs at least 6 rungs");
  if (fam.value.empty()) throw Error(ErrorKind::ValidationError, "no test functions");
  if (s < 0 || s >= static_cast<int>(fam.value[0][0].size()))
    throw Error(ErrorKind::DerivativeUnavailable, "d_t^" + std::to_string(s) + " not computed");
  OrderFit best;
  bool first = true;
  for (std::size_t v = 0; v < fam.value.size(); ++v) {
    OrderFit f;
    f.alpha = fam.alpha;
    f.beta = fam.beta;
    f.l = l;
    f.s = s;
    f.brackets = fam.brackets;
    f.worst = fam.names[v];
    f.target = m - total_order(fam.beta);
    for (std::size_t j = 0; j < fam.brackets.size(); ++j) {
      std::vector<double> av;
      for (const cplx& z : fam.value[v][j][s]) av.push_back(std::abs(z));
      f.values.push_back(sampled_seminorm(fam.t, av, l));
    }
    f.fit = fit_power_law(f.brackets, f.values, 6);
    if (!f.fit.vanishing) {
      double ss = 0.0;
      int k = 0;
      for (std::size_t j = 0; j < f.values.size(); ++j) {
        if (f.values[j] < 1e-13) continue;
        const double r = std::log(f.values[j]) - (f.fit.slope * std::log(f.brackets[j]) + f.fit.intercept);
        ss += r * r;
        ++k;
      }
      f.residual = k ? std::sqrt(ss / k) : 0.0;
    }
    f.pass = f.fit.vanishing || f.fit.slope <= f.target + kOrderTol;
    const double key = f.fit.vanishing ? -1e300 : f.fit.slope;
    const double cur = best.fit.vanishing ? -1e300 : best.fit.slope;
    if (first || key > cur) best = f;
    first = false;
  }
  return best;
}

inline OrderFit estimate_symbol_order(const NormalOperatorSpec& sp, const MultiIndex& alpha, const MultiIndex& beta,
                                      int l, int s, const std::vector<SchwartzFn>& us, const ConjugationGrid& g = {}) {
  ConjugationGrid gg = g;
  gg.s_max = std::max(s, 0);
  return fit_order(conjugated_family(sp, alpha, beta, us, gg), sp.order, l, s);
}

// Every (alpha, beta) with |alpha|, |beta| <= dmax and every l, s <= 2.
struct OrderSweep {
  std::vector<OrderFit> fits;
  double worst_excess = -std::numeric_limits<double>::infinity();  // max slope - target
  double max_error = 0.0;
  bool pass = true;
};

inline OrderSweep certify_symbol_order(const NormalOperatorSpec& sp, const std::vector<SchwartzFn>& us, int dmax = 2,
                                       int lmax = 2, int smax = 2, const ConjugationGrid& g = {}) {
  OrderSweep sw;
  const int n = sp.phase.lay.dim();
  ConjugationGrid gg = g;
  gg.s_max = smax;
  for (const auto& al : indices_upto(n - 1, dmax))
    for (const auto& be : indices_upto(n - 1, dmax)) {
      const auto fam = conjugated_family(sp, al, be, us, gg);
      sw.max_error = std::max(sw.max_error, fam.max_error);
      for (int l = 0; l <= lmax; ++l)
        for (int s = 0; s <= smax; ++s) {
          auto f = fit_order(fam, sp.order, l, s);
          if (!f.fit.vanishing) sw.worst_excess = std::max(sw.worst_excess, f.fit.slope - f.target);
          sw.pass = sw.pass && f.pass;
          sw.fits.push_back(std::move(f));
        }
    }
  return sw;
}

// The amplitude b from one derivative, as a symbol for the BS test:
// tangential order m - |beta|, xi_n order m + |alpha|.
struct TildeCheck {
  BsReport report;
  double tangential_bound = 0.0, normal_bound = 0.0;
  bool pass = false;
};

inline TildeCheck check_tilde_amplitude(const NormalOperatorSpec& sp, const MultiIndex& alpha, const MultiIndex& beta,
                                        const GridSpec& grid = default_bs_grid(), double tol = 0.15) {
  const AmplitudePair b = tilde_amplitude(sp, alpha, beta);
  const SymbolFn sym = SymbolFn::make(sp.phase.lay, b.re, sp.order, {}, b.im);
  TildeCheck c;
  c.tangential_bound = sp.order - total_order(beta);
  c.normal_bound = sp.order + total_order(alpha);
  BsOptions opt;
  opt.tol = tol;
  c.report = check_bs_membership(sym, c.tangential_bound, c.normal_bound, grid, opt);
  c.pass = c.report.exponent <= c.tangential_bound + tol && c.report.xi_order <= c.normal_bound + tol;
  return c;
}

// <A u, v> against <u, A^t v>, with
//   w(xi) = int e^{i phi(x, xi)} a(x, xi) v(x) dx,   (A^t v)(y) = int e^{-i y xi} w(xi) dxi / 2pi.
struct TransposeCheck {
  cplx lhs, rhs;
  double residual = 0.0;
  bool pass = false;
  std::vector<double> y;   // sample points of A^t v
  std::vector<cplx> at_v;  // A^t v on y
};

inline TransposeCheck transpose_check(const NormalOperatorSpec& sp, const SchwartzFn& u, const SchwartzFn& v,
                                      double tol = 1e-6) {
  if (u.half_line() || v.half_line()) throw Error(ErrorKind::ValidationError, "transpose check needs whole-line functions");
  const double X = std::max(u.decay_radius(), v.decay_radius());
  const Nodes xs = gauss_panels(-X, X, 0.5);
  const double R = std::max(16.0, detail::decay_cut([&](double xi) {
                                    return std::abs(u.has_transform() ? u.transform(xi) : fourier_transform(u, {xi})[0]) *
                                           std::pow(1.0 + xi * xi, std::max(0.0, sp.order) / 2);
                                  }));
  const Nodes ks = gauss_panels(-R, R, 0.5);
  const detail::PhaseAmplitude pa(sp);
  const auto uhat = fourier_transform(u, ks.x);

  // kernel e^{i phi} a on the (x, xi) product grid
  std::vector<cplx> K(xs.x.size() * ks.x.size());
  parallel_for(xs.x.size(), [&](std::size_t i) {
    std::vector<double> p, ws;
    for (std::size_t k = 0; k < ks.x.size(); ++k) K[i * ks.x.size() + k] = pa(xs.x[i], ks.x[k], p, ws);
  });

  TransposeCheck c;
  // <A u, v> = int v(x) int K(x, xi) u^(xi) dxi/2pi dx
  for (std::size_t i = 0; i < xs.x.size(); ++i) {
    cplx au = 0.0;
    for (std::size_t k = 0; k < ks.x.size(); ++k) au += ks.w[k] * K[i * ks.x.size() + k] * uhat[k];
    c.lhs += xs.w[i] * v(xs.x[i]) * au / (2.0 * M_PI);
  }
  std::vector<cplx> w(ks.x.size());
  for (std::size_t k = 0; k < ks.x.size(); ++k)
    for (std::size_t i = 0; i < xs.x.size(); ++i) w[k] += xs.w[i] * K[i * ks.x.size() + k] * v(xs.x[i]);
  // A^t v on the x nodes, then paired with u
  c.y = xs.x;
  c.at_v.resize(xs.x.size());
  parallel_for(xs.x.size(), [&](std::size_t i) {
    cplx s = 0.0;
    for (std::size_t k = 0; k < ks.x.size(); ++k) s += ks.w[k] * std::polar(1.0, -xs.x[i] * ks.x[k]) * w[k];
    c.at_v[i] = s / (2.0 * M_PI);
  });
  for (std::size_t i = 0; i < xs.x.size(); ++i) c.rhs += xs.w[i] * u(xs.x[i]) * c.at_v[i];
  c.residual = std::abs(c.lhs - c.rhs);
  c.pass = c.residual <= tol;
  return c;
}

// Cumulative seminorm max_{l' <= l, s' <= s} sup |t^l' u^(s')|.  The single
// sup is not monotone in l (h0: 1 at l = 0, e^{-1/2} at l = 1); this one is.
inline double schwartz_seminorm_upto(const SchwartzFn& u, int l, int s) {
  double best = 0.0;
  for (int a = 0; a <= l; ++a)
    for (int b = 0; b <= s; ++b) best = std::max(best, schwartz_seminorm(u, a, b));
  return best;
}

// Table of cumulative seminorms for l, s <= (lmax, smax) and whether it is monotone.
inline bool seminorms_monotone(const SchwartzFn& u, int lmax = 2, int smax = 2) {
  std::vector<std::vector<double>> raw(lmax + 1, std::vector<double>(smax + 1)), p = raw;
  for (int l = 0; l <= lmax; ++l)
    for (int s = 0; s <= smax; ++s) raw[l][s] = schwartz_seminorm(u, l, s);
  for (int l = 0; l <= lmax; ++l)
    for (int s = 0; s <= smax; ++s) {
      p[l][s] = raw[l][s];
      if (l > 0) p[l][s] = std::max(p[l][s], p[l - 1][s]);
      if (s > 0) p[l][s] = std::max(p[l][s], p[l][s - 1]);
    }
  for (int l = 0; l <= lmax; ++l)
    for (int s = 0; s <= smax; ++s) {
      if (l > 0 && p[l][s] < p[l - 1][s]) return false;
      if (s > 0 && p[l][s] < p[l][s - 1]) return false;
    }
  return true;
}

}  // namespace collar
