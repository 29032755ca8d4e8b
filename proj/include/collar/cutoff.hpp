#pragma once

// Smooth even cutoff: 1 on [-1/2, 1/2], 0 outside (-1, 1), non-increasing in |s|.
// Written through s^2 so it stays smooth at the origin.

#include "collar/expr.hpp"
#include "collar/tape.hpp"

namespace collar {

inline Expr omega(const Expr& s) {
  Expr u = pow(s, 2);
  Expr inner = bump(1.0 - u);
  Expr outer = bump(u - 0.25);
  return inner / (inner + outer);
}

// omega(s / k)
inline Expr omega_k(const Expr& s, double k) { return omega(s / k); }

inline double omega_value(double s) {
  const double u = s * s;
  const double a = bump_value(0, 1.0 - u);
  const double b = bump_value(0, u - 0.25);
  return a / (a + b);
}

}  // namespace collar
