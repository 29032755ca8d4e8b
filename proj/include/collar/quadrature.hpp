#pragma once

// One-dimensional quadrature helpers on top of Boost.Math: composite
// Gauss-Legendre panels and panelwise adaptive Gauss-Kronrod for complex
// integrands.

#include <cmath>
#include <complex>
#include <limits>
#include <vector>

#include <boost/math/quadrature/gauss.hpp>
#include <boost/math/quadrature/gauss_kronrod.hpp>

#include "collar/error.hpp"

namespace collar {

struct Nodes {
  std::vector<double> x, w;
};

// 20-point Gauss-Legendre on each of ceil((b - a) / width) equal panels.
inline Nodes gauss_panels(double a, double b, double width) {
  using GL = boost::math::quadrature::gauss<double, 20>;
  Nodes n;
  const int panels = std::max(1, static_cast<int>(std::ceil((b - a) / width - 1e-12)));
  const double h = (b - a) / panels;
  const auto& ab = GL::abscissa();
  const auto& wt = GL::weights();
  for (int p = 0; p < panels; ++p) {
    const double c = a + (p + 0.5) * h, r = 0.5 * h;
    for (std::size_t i = 0; i < ab.size(); ++i) {
      if (ab[i] == 0.0) {
        n.x.push_back(c);
        n.w.push_back(wt[i] * r);
        continue;
      }
      n.x.push_back(c - r * ab[i]);
      n.w.push_back(wt[i] * r);
      n.x.push_back(c + r * ab[i]);
      n.w.push_back(wt[i] * r);
    }
  }
  return n;
}

struct Integral {
  std::complex<double> value;
  double error = 0.0;  // Kronrod estimate plus a rounding floor
  double l1 = 0.0;
  int panels = 0;
};

// Adaptive 31-point Gauss-Kronrod on each panel of width <= `width` over [a, b].
// `tol` is relative to the L1 norm over the whole interval: a first pass without
// bisection measures it, then only panels above their share are refined.
template <class F>
Integral integrate_panels(F&& f, double a, double b, double width, double tol, unsigned max_depth = 10) {
  using GK = boost::math::quadrature::gauss_kronrod<double, 31>;
  using V = decltype(f(a));
  Integral r;
  if (!(b > a)) return r;
  const int panels = std::max(1, static_cast<int>(std::ceil((b - a) / width - 1e-12)));
  const double h = (b - a) / panels;
  std::vector<V> val(panels);
  std::vector<double> err(panels), l1(panels);
  auto lo = [&](int p) { return a + p * h; };
  auto hi = [&](int p) { return (p + 1 == panels) ? b : a + (p + 1) * h; };
  double total = 0.0;
  for (int p = 0; p < panels; ++p) {
    val[p] = GK::integrate(f, lo(p), hi(p), 0, 0.0, &err[p], &l1[p]);
    total += l1[p];
  }
  const double target = tol * total;
  for (int p = 0; p < panels; ++p) {
    if (max_depth == 0 || err[p] <= target / panels) continue;
    const double rel = std::max(target / panels / std::max(l1[p], 1e-300), std::numeric_limits<double>::epsilon());
    val[p] = GK::integrate(f, lo(p), hi(p), max_depth, rel, &err[p], &l1[p]);
  }
  r.l1 = 0.0;
  for (int p = 0; p < panels; ++p) {
    r.value += val[p];
    r.error += err[p];
    r.l1 += l1[p];
  }
  r.panels = panels;
  r.error += 64 * std::numeric_limits<double>::epsilon() * r.l1;
  return r;
}

}  // namespace collar
