#pragma once

// Symbol classes: weighted seminorms, the transmission condition and the
// boundary-rescaled classes BS^{m,l}.

#include <cmath>
#include <numbers>
#include <optional>
#include <random>
#include <string>
#include <vector>

#include "collar/expr.hpp"
#include "collar/fit.hpp"
#include "collar/jet.hpp"
#include "collar/parallel.hpp"
#include "collar/tape.hpp"

namespace collar {

// Possibly complex symbol re + i im in (x', x_n, xi', xi_n).
struct SymbolFn {
  VarLayout lay{2};
  Expr re;
  Expr im;
  double order = 0.0;
  std::optional<double> homogeneous_degree;
  std::optional<std::pair<double, double>> support_xn;

  bool is_complex() const { return !im.is_const(0.0); }

  // Declared homogeneity is checked on 20 seeded rays.
  static SymbolFn make(const VarLayout& lay, Expr re, double order, std::optional<double> hom = {},
                       Expr im = constant(0.0)) {
    SymbolFn a{lay, std::move(re), std::move(im), order, hom, {}};
    if (hom) a.validate_homogeneity();
    return a;
  }

  void validate_homogeneity() const {
    std::mt19937_64 rng(20);
    std::uniform_real_distribution<double> ux(-1.0, 1.0);
    std::normal_distribution<double> nd;
    for (int ray = 0; ray < 20; ++ray) {
      std::vector<double> p(lay.size(), 0.0);
      for (int i = 0; i < lay.dim(); ++i) p[i] = ux(rng);
      double r = 0.0;
      for (int i = 0; i < lay.dim(); ++i) {
        p[lay.dim() + i] = nd(rng);
        r += p[lay.dim() + i] * p[lay.dim() + i];
      }
      for (int i = 0; i < lay.dim(); ++i) p[lay.dim() + i] /= std::sqrt(r);
      for (double lam : {2.0, 10.0, 100.0}) {
        double d = std::max(homogeneity_defect(re, p, lay, *homogeneous_degree, lam),
                            homogeneity_defect(im, p, lay, *homogeneous_degree, lam));
        if (d > 1e-10)
          throw Error(ErrorKind::ValidationError, "symbol is not homogeneous of the declared degree (defect " +
                                                      std::to_string(d) + ")");
      }
    }
  }
};

// x_normal is the collar range for seminorms and the compact set of rescaled
// normal coordinates for the boundary classes.
struct GridSpec {
  std::vector<double> x_tangential = linspace(-1.0, 1.0, 9);
  std::vector<double> x_normal = linspace(-1.0, 1.0, 9);
  std::vector<double> brackets = dyadic_ladder(9);         // <xi> or <xi'> rungs
  std::vector<double> normal_brackets = dyadic_ladder(9);  // <xi_n> rungs
  int directions = 32;

  // Superset grid: linear ranges subdivided, ladders and direction sets densified.
  GridSpec refined(int factor) const {
    GridSpec g = *this;
    auto sub = [&](const std::vector<double>& v) {
      if (v.size() < 2) return v;
      return linspace(v.front(), v.back(), static_cast<int>(v.size() - 1) * factor + 1);
    };
    auto geo = [&](const std::vector<double>& v) {
      std::vector<double> out;
      for (std::size_t i = 0; i + 1 < v.size(); ++i) {
        out.push_back(v[i]);
        for (int j = 1; j < factor; ++j) out.push_back(v[i] * std::pow(v[i + 1] / v[i], double(j) / factor));
      }
      out.push_back(v.back());
      return out;
    };
    g.x_tangential = sub(x_tangential);
    g.x_normal = sub(x_normal);
    g.brackets = geo(brackets);
    g.normal_brackets = geo(normal_brackets);
    g.directions = directions * factor;
    return g;
  }
};

namespace detail {

// Unit directions on S^{n-1}; for n = 2 equally spaced angles, exact on the axes.
inline std::vector<std::vector<double>> sphere_directions(int n, int count) {
  std::vector<std::vector<double>> out;
  if (n == 1) return {{1.0}, {-1.0}};
  if (n == 2) {
    for (int j = 0; j < count; ++j) {
      double c, s;
      if ((4 * j) % count == 0) {
        int q = 4 * j / count;
        c = q == 0 ? 1 : q == 2 ? -1 : 0;
        s = q == 1 ? 1 : q == 3 ? -1 : 0;
      } else {
        double th = 2.0 * std::numbers::pi * j / count;
        c = std::cos(th);
        s = std::sin(th);
      }
      out.push_back({c, s});
    }
    return out;
  }
  for (int i = 0; i < n; ++i)
    for (double s : {1.0, -1.0}) {
      std::vector<double> d(n, 0.0);
      d[i] = s;
      out.push_back(d);
    }
  std::mt19937_64 rng(static_cast<std::uint64_t>(n) * 7919u + static_cast<std::uint64_t>(count));
  std::normal_distribution<double> nd;
  while (static_cast<int>(out.size()) < count) {
    std::vector<double> d(n);
    double r = 0;
    for (auto& v : d) {
      v = nd(rng);
      r += v * v;
    }
    for (auto& v : d) v /= std::sqrt(r);
    out.push_back(d);
  }
  return out;
}

// Tensor grid of `values` in `dims` coordinates.
inline std::vector<std::vector<double>> tensor(const std::vector<double>& values, int dims) {
  std::vector<std::vector<double>> out{{}};
  for (int d = 0; d < dims; ++d) {
    std::vector<std::vector<double>> next;
    for (const auto& p : out)
      for (double v : values) {
        auto q = p;
        q.push_back(v);
        next.push_back(q);
      }
    out = std::move(next);
  }
  return out;
}

inline double modulus(const std::vector<double>& out, std::size_t re, std::size_t im) {
  return std::hypot(out[re], out[im]);
}

}  // namespace detail

struct SeminormReport {
  MultiIndex alpha, beta;
  double constant = 0.0;
  std::vector<double> worst_point;
  double budget = std::numeric_limits<double>::infinity();
  bool pass = true;
  std::size_t points = 0;
};

// Multi-index over xi (length n) lifted to the full slot layout.
inline MultiIndex lift_xi(const VarLayout& lay, const MultiIndex& alpha) {
  MultiIndex m(lay.size(), 0);
  for (std::size_t i = 0; i < alpha.size(); ++i) m[lay.dim() + i] = alpha[i];
  return m;
}
inline MultiIndex lift_x(const VarLayout& lay, const MultiIndex& beta) {
  MultiIndex m(lay.size(), 0);
  for (std::size_t i = 0; i < beta.size(); ++i) m[i] = beta[i];
  return m;
}
inline MultiIndex add(MultiIndex a, const MultiIndex& b) {
  a.resize(std::max(a.size(), b.size()), 0);
  for (std::size_t i = 0; i < b.size(); ++i) a[i] += b[i];
  return a;
}

// sup over the grid of |d_xi^alpha d_x^beta a| <xi>^{|alpha| - m}.
inline SeminormReport estimate_seminorm(const SymbolFn& a, const MultiIndex& alpha, const MultiIndex& beta,
                                        const GridSpec& g,
                                        double budget = std::numeric_limits<double>::infinity()) {
  const VarLayout& lay = a.lay;
  const int n = lay.dim();
  MultiIndex m = add(lift_xi(lay, alpha), lift_x(lay, beta));
  Expr dre = partial(a.re, m);
  Expr dim = partial(a.im, m);
  Tape tape({dre, dim});
  const bool singular = has_singular_locus(a.re) || has_singular_locus(a.im);

  auto xs = detail::tensor(g.x_tangential, n - 1);
  auto dirs = detail::sphere_directions(n, g.directions);
  struct Fiber {
    double bracket;
    std::vector<double> xi;
  };
  std::vector<Fiber> fibers;
  for (double L : g.brackets) {
    if (L < 1.0) throw Error(ErrorKind::ValidationError, "bracket ladder must start at 1 or above");
    const double r = std::sqrt(std::max(0.0, L * L - 1.0));
    if (r == 0.0) {
      if (!singular) fibers.push_back({1.0, std::vector<double>(n, 0.0)});
      continue;
    }
    for (const auto& d : dirs) {
      std::vector<double> xi(n);
      for (int i = 0; i < n; ++i) xi[i] = r * d[i];
      fibers.push_back({L, xi});
    }
  }
  const int abs_alpha = total_order(alpha);
  const std::size_t per_x = g.x_normal.size() * fibers.size();
  const std::size_t total = xs.size() * per_x;
  std::vector<double> best(xs.size(), -1.0);
  std::vector<std::size_t> where(xs.size(), 0);
  parallel_for(xs.size(), [&](std::size_t ix) {
    std::vector<double> p(lay.size(), 0.0), out(2), ws;
    for (int i = 0; i < n - 1; ++i) p[i] = xs[ix][i];
    for (std::size_t j = 0; j < per_x; ++j) {
      const Fiber& f = fibers[j % fibers.size()];
      p[lay.xn()] = g.x_normal[j / fibers.size()];
      for (int i = 0; i < n; ++i) p[n + i] = f.xi[i];
      tape.eval(p, out, ws);
      double v = detail::modulus(out, 0, 1) * std::pow(f.bracket, abs_alpha - a.order);
      if (v > best[ix]) {
        best[ix] = v;
        where[ix] = j;
      }
    }
  });
  std::size_t ix = argmax(best);
  SeminormReport r;
  r.alpha = alpha;
  r.beta = beta;
  r.constant = best[ix];
  r.budget = budget;
  r.pass = r.constant <= budget;
  r.points = total;
  const Fiber& f = fibers[where[ix] % fibers.size()];
  r.worst_point.assign(lay.size(), 0.0);
  for (int i = 0; i < n - 1; ++i) r.worst_point[i] = xs[ix][i];
  r.worst_point[lay.xn()] = g.x_normal[where[ix] / fibers.size()];
  for (int i = 0; i < n; ++i) r.worst_point[n + i] = f.xi[i];
  r.worst_point.resize(2 * n);
  return r;
}

struct TransmissionReport {
  double residual = 0.0;
  double tol = 1e-10;
  std::vector<double> worst_x;
  int worst_k = 0;
  MultiIndex worst_alpha, worst_beta;
  bool pass = true;
  int combos = 0;
};

// All multi-indices of length dims with total order <= max_total.
inline std::vector<MultiIndex> indices_upto(int dims, int max_total) {
  std::vector<MultiIndex> out;
  for (const auto& m : box(MultiIndex(dims, max_total)))
    if (total_order(m) <= max_total) out.push_back(m);
  return out;
}

// Residual of d^k_{x_n} d^alpha_{xi'} d^beta_{x'} a at (x', 0, 0, +1) against
// (-1)^{m - |alpha|} times the same at (x', 0, 0, -1).
inline TransmissionReport check_transmission(const SymbolFn& a, int max_order = 2,
                                             const std::vector<double>& x_samples = linspace(-1.0, 1.0, 21),
                                             double tol = 1e-10) {
  if (!a.homogeneous_degree)
    throw Error(ErrorKind::ValidationError, "transmission check needs a declared homogeneity degree");
  const double m = *a.homogeneous_degree;
  if (std::fabs(m - std::round(m)) > 1e-12)
    throw Error(ErrorKind::ValidationError, "transmission check needs an integer degree");
  const VarLayout& lay = a.lay;
  const int n = lay.dim();
  const int mi = static_cast<int>(std::lround(m));

  std::vector<Expr> outs;
  struct Combo {
    int k;
    MultiIndex alpha, beta;
  };
  std::vector<Combo> combos;
  for (int k = 0; k <= max_order; ++k)
    for (const auto& al : indices_upto(n - 1, max_order))
      for (const auto& be : indices_upto(n - 1, max_order)) {
        MultiIndex mm(lay.size(), 0);
        mm[lay.xn()] = k;
        for (int i = 0; i < n - 1; ++i) {
          mm[lay.k(i)] = al[i];
          mm[lay.x(i)] = be[i];
        }
        outs.push_back(partial(a.re, mm));
        outs.push_back(partial(a.im, mm));
        combos.push_back({k, al, be});
      }
  Tape tape(outs);
  auto xs = detail::tensor(x_samples, n - 1);
  TransmissionReport r;
  r.tol = tol;
  r.combos = static_cast<int>(combos.size());
  std::vector<double> p(lay.size(), 0.0), plus(outs.size()), minus(outs.size()), ws;
  for (const auto& x : xs) {
    for (int i = 0; i < n - 1; ++i) p[i] = x[i];
    try {
      p[lay.kn()] = 1.0;
      tape.eval(p, plus, ws);
      p[lay.kn()] = -1.0;
      tape.eval(p, minus, ws);
    } catch (const Error& e) {
      if (e.kind() == ErrorKind::SingularLocus)
        throw Error(ErrorKind::SingularAtAxis, "symbol is not smooth at xi' = 0, xi_n = +-1");
      throw;
    }
    for (std::size_t c = 0; c < combos.size(); ++c) {
      const double sign = ((mi - total_order(combos[c].alpha)) % 2 == 0) ? 1.0 : -1.0;
      const double res = std::hypot(plus[2 * c] - sign * minus[2 * c], plus[2 * c + 1] - sign * minus[2 * c + 1]);
      if (res > r.residual || r.worst_x.empty()) {
        if (res > r.residual) r.residual = res;
        r.worst_x = x;
        r.worst_k = combos[c].k;
        r.worst_alpha = combos[c].alpha;
        r.worst_beta = combos[c].beta;
      }
    }
  }
  r.pass = r.residual <= tol;
  return r;
}

struct BsOptions {
  int alpha_max = 1;   // |alpha| over xi'
  int beta_max = 1;    // |beta| over x'
  int gamma_max = 2;   // xi_n derivatives
  int delta_max = 2;   // x_n derivatives
  double tol = 0.1;
};

struct BsFit {
  MultiIndex alpha, beta;
  int gamma = 0, delta = 0;
  PowerFit tangential;  // log sup against log <xi'>
  PowerFit normal;      // weighted log sup against log <xi_n>
  double target = 0.0;  // m - |alpha|
  std::vector<double> sups;  // per <xi'> rung
  bool pass = true;
};

struct BsReport {
  double m = 0.0, l = 0.0, tol = 0.1;
  std::vector<BsFit> fits;
  double exponent = -std::numeric_limits<double>::infinity();  // max over fits of slope + |alpha|
  double xi_order = -std::numeric_limits<double>::infinity();  // max fitted <xi_n> order
  bool pass = true;
};

// Rescaled membership test: b(x_n, xi_n) = (d^alpha_{xi'} d^beta_{x'} a)(x', x_n/L, xi', xi_n L)
// with L = <xi'>, x_n over the compact normal grid.
inline GridSpec default_bs_grid() {
  GridSpec g;
  g.x_normal = linspace(-0.5, 0.5, 9);
  return g;
}

inline BsReport check_bs_membership(const SymbolFn& a, double m, double l, const GridSpec& g = default_bs_grid(),
                                    const BsOptions& opt = {}) {
  if (g.brackets.size() < 4) throw Error(ErrorKind::RegressionIllConditioned, "fewer than 4 rungs");
  const VarLayout& lay = a.lay;
  const int n = lay.dim();

  struct Combo {
    MultiIndex alpha, beta;
    int gamma, delta;
  };
  std::vector<Combo> combos;
  std::vector<Expr> outs;
  for (const auto& al : indices_upto(n - 1, opt.alpha_max))
    for (const auto& be : indices_upto(n - 1, opt.beta_max))
      for (int ga = 0; ga <= opt.gamma_max; ++ga)
        for (int de = 0; de <= opt.delta_max; ++de) {
          MultiIndex mm(lay.size(), 0);
          for (int i = 0; i < n - 1; ++i) {
            mm[lay.k(i)] = al[i];
            mm[lay.x(i)] = be[i];
          }
          mm[lay.kn()] = ga;
          mm[lay.xn()] = de;
          outs.push_back(partial(a.re, mm));
          outs.push_back(partial(a.im, mm));
          combos.push_back({al, be, ga, de});
        }
  Tape tape(outs);

  auto xs = detail::tensor(g.x_tangential, n - 1);
  auto dirs = detail::sphere_directions(n - 1, n == 2 ? 2 : 2 * (n - 1));
  const std::size_t R = g.brackets.size(), M = g.normal_brackets.size();
  // sup[c][rung][normal rung]
  std::vector<double> sup(combos.size() * R * M, 0.0);
  auto at = [&](std::size_t c, std::size_t j, std::size_t i) -> double& { return sup[(c * R + j) * M + i]; };

  parallel_for(R, [&](std::size_t j) {
    const double L = g.brackets[j];
    const double r = std::sqrt(std::max(0.0, L * L - 1.0));
    std::vector<double> p(lay.size(), 0.0), out(outs.size()), ws;
    for (const auto& x : xs) {
      for (int i = 0; i < n - 1; ++i) p[i] = x[i];
      for (std::size_t d = 0; d < (r == 0.0 ? 1 : dirs.size()); ++d) {
        for (int i = 0; i < n - 1; ++i) p[lay.k(i)] = r * dirs[d][i];
        for (double xn : g.x_normal) {
          p[lay.xn()] = xn / L;
          for (std::size_t i = 0; i < M; ++i) {
            const double Mi = g.normal_brackets[i];
            const double s = std::sqrt(std::max(0.0, Mi * Mi - 1.0));
            for (double sign : {1.0, -1.0}) {
              if (s == 0.0 && sign < 0) continue;
              p[lay.kn()] = sign * s * L;
              tape.eval(p, out, ws);
              for (std::size_t c = 0; c < combos.size(); ++c) {
                double v = detail::modulus(out, 2 * c, 2 * c + 1) * std::pow(L, combos[c].gamma - combos[c].delta);
                if (v > at(c, j, i)) at(c, j, i) = v;
              }
            }
          }
        }
      }
    }
  });

  BsReport rep;
  rep.m = m;
  rep.l = l;
  rep.tol = opt.tol;
  for (std::size_t c = 0; c < combos.size(); ++c) {
    BsFit f;
    f.alpha = combos[c].alpha;
    f.beta = combos[c].beta;
    f.gamma = combos[c].gamma;
    f.delta = combos[c].delta;
    const int aa = total_order(f.alpha);
    f.target = m - aa;
    std::vector<double> ys(R, 0.0), zs(M, 0.0);
    for (std::size_t j = 0; j < R; ++j)
      for (std::size_t i = 0; i < M; ++i) {
        const double w = at(c, j, i);
        const double Mi = g.normal_brackets[i];
        ys[j] = std::max(ys[j], w * std::pow(Mi, f.gamma - l));
        zs[i] = std::max(zs[i], w * std::pow(Mi, f.gamma) * std::pow(g.brackets[j], -f.target));
      }
    f.sups = ys;
    f.tangential = fit_power_law(g.brackets, ys);
    f.normal = fit_power_law(g.normal_brackets, zs);
    f.pass = f.tangential.vanishing || f.tangential.slope <= f.target + opt.tol;
    if (!f.normal.vanishing && f.normal.slope > l + opt.tol) f.pass = false;
    if (!f.tangential.vanishing) rep.exponent = std::max(rep.exponent, f.tangential.slope + aa);
    if (!f.normal.vanishing) rep.xi_order = std::max(rep.xi_order, f.normal.slope);
    rep.pass = rep.pass && f.pass;
    rep.fits.push_back(std::move(f));
  }
  return rep;
}

}  // namespace collar
