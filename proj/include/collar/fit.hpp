#pragma once

#include <cmath>
#include <limits>
#include <vector>

#include "collar/error.hpp"

namespace collar {

inline constexpr double kVanishingFloor = 1e-13;

struct PowerFit {
  double slope = 0.0;
  double intercept = 0.0;
  double r2 = 1.0;
  int used = 0;             // points entering the regression
  bool vanishing = false;   // every value, or the whole tail, below the floor
};

// Least-squares fit of log y = slope * log x + intercept.  Values below the
// vanishing floor are dropped; if all are, or too few remain and the top rung
// is among the dropped, the fit reports vanishing.
inline PowerFit fit_power_law(const std::vector<double>& x, const std::vector<double>& y, int min_points = 4) {
  if (x.size() != y.size()) throw Error(ErrorKind::ValidationError, "fit: size mismatch");
  if (static_cast<int>(x.size()) < min_points)
    throw Error(ErrorKind::RegressionIllConditioned, "fewer than " + std::to_string(min_points) + " rungs");
  std::vector<double> lx, ly;
  for (std::size_t i = 0; i < x.size(); ++i) {
    if (std::fabs(y[i]) > kVanishingFloor) {
      lx.push_back(std::log(x[i]));
      ly.push_back(std::log(std::fabs(y[i])));
    }
  }
  PowerFit f;
  f.used = static_cast<int>(lx.size());
  if (lx.empty()) {
    f.vanishing = true;
    f.slope = -std::numeric_limits<double>::infinity();
    return f;
  }
  if (f.used < min_points && std::fabs(y.back()) <= kVanishingFloor) {
    // Too few nonzero rungs, all below the top one: the tail vanishes.
    f.vanishing = true;
    f.slope = -std::numeric_limits<double>::infinity();
    return f;
  }
  if (f.used < min_points)
    throw Error(ErrorKind::RegressionIllConditioned, "only " + std::to_string(f.used) + " non-vanishing rungs");
  const double n = static_cast<double>(lx.size());
  double mx = 0, my = 0;
  for (std::size_t i = 0; i < lx.size(); ++i) {
    mx += lx[i];
    my += ly[i];
  }
  mx /= n;
  my /= n;
  double sxx = 0, sxy = 0, syy = 0;
  for (std::size_t i = 0; i < lx.size(); ++i) {
    sxx += (lx[i] - mx) * (lx[i] - mx);
    sxy += (lx[i] - mx) * (ly[i] - my);
    syy += (ly[i] - my) * (ly[i] - my);
  }
  if (sxx <= 0.0) throw Error(ErrorKind::RegressionIllConditioned, "degenerate abscissae");
  f.slope = sxy / sxx;
  f.intercept = my - f.slope * mx;
  f.r2 = syy > 0.0 ? (sxy * sxy) / (sxx * syy) : 1.0;
  return f;
}

// 1, 2, 4, ..., 2^(count-1)
inline std::vector<double> dyadic_ladder(int count) {
  std::vector<double> v;
  for (int j = 0; j < count; ++j) v.push_back(std::ldexp(1.0, j));
  return v;
}

inline std::vector<double> linspace(double a, double b, int n) {
  std::vector<double> v;
  if (n == 1) return {0.5 * (a + b)};
  for (int i = 0; i < n; ++i) v.push_back(a + (b - a) * i / (n - 1));
  return v;
}

}  // namespace collar
