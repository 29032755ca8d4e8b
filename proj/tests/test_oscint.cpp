#include <gtest/gtest.h>

#include <cmath>

#include "collar/catalog.hpp"
#include "collar/oscint.hpp"

using namespace collar;

namespace {

std::vector<double> grid(double a, double b, double h) {
  std::vector<double> v;
  const int n = static_cast<int>(std::lround((b - a) / h));
  for (int i = 0; i <= n; ++i) v.push_back(a + i * h);
  return v;
}

double dilation_g() { return std::sin(0.3) / 2; }

// Trapezoid with the kink of e^{-|x-y|} on a node: split at x, n nodes per side.
double trapezoid(const std::function<double(double)>& f, double a, double b, int n) {
  const double h = (b - a) / n;
  double s = 0.5 * (f(a) + f(b));
  for (int i = 1; i < n; ++i) s += f(a + i * h);
  return s * h;
}

double kernel_oracle(const std::function<double(double)>& u, double x, double lo, double hi) {
  auto f = [&](double y) { return 0.5 * std::exp(-std::fabs(x - y)) * u(y); };
  double s = 0.0;
  if (x > lo) s += trapezoid(f, lo, x, 50000);
  if (hi > x) s += trapezoid(f, x, hi, 50000);
  return s;
}

NormalOperatorSpec bracket2_spec(const std::string& scen) {
  auto sp = normal_spec(catalog_entry(scen));
  sp.a_re = parse("1/(1 + kn^2)", sp.phase.lay);
  sp.order = -2;
  return sp;
}

}  // namespace

TEST(Transform, GaussianAnalytic) {
  auto h0 = hermite_function(0);
  for (double xi : grid(-6, 6, 0.25)) {
    const cplx want = std::sqrt(2 * M_PI) * std::exp(-xi * xi / 2);
    EXPECT_LE(std::abs(h0.transform(xi) - want), 1e-10 * std::abs(want));
  }
}

TEST(Transform, H2IsMinusItselfTimesRootTwoPi) {
  auto h2 = hermite_function(2);
  for (double xi : grid(-5, 5, 0.5)) EXPECT_NEAR(std::abs(h2.transform(xi) + std::sqrt(2 * M_PI) * h2(xi)), 0.0, 1e-12);
}

TEST(Transform, NumericMatchesAnalyticOnH3) {
  auto h3 = hermite_function(3);
  auto xs = grid(-8, 8, 16.0 / 63);
  ASSERT_EQ(xs.size(), 64u);
  auto num = fourier_transform_numeric(h3, xs);
  double worst = 0;
  for (std::size_t i = 0; i < xs.size(); ++i) worst = std::max(worst, std::abs(num.value[i] - h3.transform(xs[i])));
  EXPECT_LE(worst, 1e-8);
}

TEST(Transform, RejectsHalfLineInWholeLinePath) {
  try {
    fourier_transform(exp_half_line(), {1.0});
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::ValidationError);
  }
}

TEST(HalfLine, ExponentialTransform) {
  auto u = exp_half_line();
  auto xs = grid(-100, 100, 2.5);
  auto F = half_line_ft(u, xs);
  for (std::size_t i = 0; i < xs.size(); ++i) {
    const cplx want = 1.0 / cplx(1.0, xs[i]);
    EXPECT_LE(std::abs(F.value[i] - want), 1e-8 * std::abs(want)) << xs[i];
  }
}

TEST(HalfLine, GaussianHalfIntegral) {
  auto F = half_line_ft(gauss_half_line(), {0.0});
  EXPECT_NEAR(F.value[0].real(), std::sqrt(M_PI / 2), 1e-9);
  EXPECT_NEAR(F.value[0].imag(), 0.0, 1e-12);
}

TEST(HalfLine, FirstOrderDecay) {
  auto d = measure_decay(exp_half_line(), 10, 1000, 25);
  EXPECT_NEAR(d.exponent, -1.0, 0.05);
  EXPECT_NEAR(d.positive.slope, -1.0, 0.05);
  EXPECT_NEAR(d.negative.slope, -1.0, 0.05);
}

TEST(NormalOp, IdentityReproducesHermite) {
  auto sp = normal_spec(catalog_entry("identity"));
  auto xs = grid(-3, 3, 0.1);
  for (int j = 0; j <= 4; ++j) {
    auto u = hermite_function(j);
    auto r = apply_normal_op(sp, u, xs);
    EXPECT_EQ(r.mode, QuadMode::Direct);
    for (std::size_t i = 0; i < xs.size(); ++i) EXPECT_NEAR(std::abs(r.value[i] - u(xs[i])), 0.0, 1e-6);
  }
}

TEST(NormalOp, DilationIsChangeOfVariables) {
  auto sp = normal_spec(catalog_entry("dilation"));
  auto xs = grid(-3, 3, 0.1);
  const double s = std::exp(dilation_g());
  for (int j = 0; j <= 4; ++j) {
    auto u = hermite_function(j);
    auto r = apply_normal_op(sp, u, xs);
    auto sp4 = sp;
    sp4.quad.tol /= 4;
    auto r4 = apply_normal_op(sp4, u, xs);
    for (std::size_t i = 0; i < xs.size(); ++i) {
      EXPECT_NEAR(std::abs(r.value[i] - u(xs[i] * s)), 0.0, 1e-6);
      EXPECT_NEAR(std::abs(r.value[i] - r4.value[i]), 0.0, 1e-9);
    }
  }
}

TEST(NormalOp, BracketMinusTwoIsExponentialKernel) {
  auto sp = bracket2_spec("identity");
  auto xs = grid(-3, 3, 0.25);
  for (int j : {0, 3}) {
    auto u = hermite_function(j);
    auto r = apply_normal_op(sp, u, xs);
    for (std::size_t i = 0; i < xs.size(); ++i)
      EXPECT_NEAR(std::abs(r.value[i] - kernel_oracle(u, xs[i], -20, 20)), 0.0, 1e-6) << j << " " << xs[i];
  }
}

TEST(NormalOp, Linearity) {
  auto sp = normal_spec(catalog_entry("quadratic-collar"));
  auto h1 = hermite_function(1), h3 = hermite_function(3);
  const double a = 0.7, b = -1.3;
  SchwartzFn w("lin", a * h1.expr() + b * h3.expr(),
               [=](double xi) { return a * h1.transform(xi) + b * h3.transform(xi); });
  auto xs = grid(-2, 2, 0.2);
  auto r1 = apply_normal_op(sp, h1, xs), r3 = apply_normal_op(sp, h3, xs), rw = apply_normal_op(sp, w, xs);
  for (std::size_t i = 0; i < xs.size(); ++i)
    EXPECT_NEAR(std::abs(rw.value[i] - (a * r1.value[i] + b * r3.value[i])), 0.0, 1e-9);
}

TEST(NormalOp, NumericTransformPath) {
  auto sp = normal_spec(catalog_entry("identity"));
  auto u = test_function("exp(-t^2/2)*(1 + t)");
  EXPECT_FALSE(u.has_transform());
  auto xs = grid(-2, 2, 0.5);
  auto r = apply_normal_op(sp, u, xs);
  for (std::size_t i = 0; i < xs.size(); ++i) EXPECT_NEAR(std::abs(r.value[i] - u(xs[i])), 0.0, 1e-7);
}

TEST(NormalOp, HalvingConsistency) {
  auto xs = grid(-3, 3, 0.1);
  for (const char* s : {"identity", "dilation"}) {
    auto sp = normal_spec(catalog_entry(s));
    EXPECT_GE(halving_consistency(sp, hermite_function(2), xs), 0.95) << s;
  }
}

TEST(NormalOp, TighterToleranceDoesNotIncreaseError) {
  auto sp = normal_spec(catalog_entry("dilation"));
  sp.quad.panel = 4.0;
  auto u = hermite_function(4);
  auto xs = grid(-3, 3, 0.25);
  const double s = std::exp(dilation_g());
  double prev = 1e300;
  for (double tol : {1e-3, 1e-3 / 16, 1e-3 / 256, 1e-3 / 4096}) {
    sp.quad.tol = tol;
    auto r = apply_normal_op(sp, u, xs);
    double e = 0;
    for (std::size_t i = 0; i < xs.size(); ++i) e = std::max(e, std::abs(r.value[i] - u(xs[i] * s)));
    EXPECT_LE(e, std::max(tol, 1e-13));
    EXPECT_LE(e, std::max(prev, 1e-13));
    prev = e;
  }
}

TEST(NormalOp, L2Bound) {
  auto xs = grid(-6, 6, 0.02);
  const double jac = std::exp(-std::sin(-1.0) / 4);  // sup over x1 in [-1, 1] of e^{-g/2}
  for (const char* s : {"identity", "dilation"}) {
    auto sp = normal_spec(catalog_entry(s));
    for (int j = 0; j <= 4; ++j) {
      auto u = hermite_function(j);
      auto r = apply_normal_op(sp, u, xs);
      std::vector<cplx> uv;
      for (double x : grid(-40, 40, 0.01)) uv.push_back(u(x));
      const double nu = discrete_l2(grid(-40, 40, 0.01), uv);
      const double f = std::string(s) == "identity" ? 1.0 : jac;
      EXPECT_LE(discrete_l2(xs, r.value), 1.05 * nu * f) << s << " h" << j;
    }
  }
}

TEST(NormalOp, RejectsHalfLineAndForcedCutoff) {
  auto sp = normal_spec(catalog_entry("identity"));
  EXPECT_THROW(apply_normal_op(sp, exp_half_line(), {1.0}), Error);
  sp.quad.mode = QuadMode::CutoffExtrapolate;
  try {
    apply_normal_op(sp, hermite_function(0), {1.0});
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::DecayClassUnsupported);
  }
}

TEST(NormalOp, BudgetExceeded) {
  auto sp = normal_spec(catalog_entry("identity"));
  sp.quad.max_depth = 0;
  sp.quad.panel = 20;
  sp.quad.budget = 1e-14;
  try {
    apply_normal_op(sp, hermite_function(4), {0.5, 1.0});
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::QuadratureBudget);
  }
}

TEST(TruncatedOp, IdentityInvertsOnHalfLine) {
  auto sp = normal_spec(catalog_entry("identity"));
  auto xs = grid(0.25, 3, 0.25);
  auto r = apply_truncated_op(sp, exp_half_line(), xs);
  EXPECT_EQ(r.mode, QuadMode::CutoffExtrapolate);
  for (std::size_t i = 0; i < xs.size(); ++i) EXPECT_NEAR(std::abs(r.value[i] - std::exp(-xs[i])), 0.0, 1e-5);
}

TEST(TruncatedOp, BracketMinusTwoMatchesBruteForce) {
  auto sp = bracket2_spec("identity");
  auto xs = grid(0.25, 3, 0.25);
  auto r = apply_truncated_op(sp, exp_half_line(), xs);
  EXPECT_EQ(r.mode, QuadMode::Direct);
  auto u = [](double y) { return std::exp(-y); };
  for (std::size_t i = 0; i < xs.size(); ++i)
    EXPECT_NEAR(std::abs(r.value[i] - kernel_oracle(u, xs[i], 0, 60)), 0.0, 1e-6) << xs[i];
}

TEST(TruncatedOp, DilationComposedWithKernel) {
  auto sp = bracket2_spec("dilation");
  auto xs = grid(0.25, 3, 0.25);
  auto r = apply_truncated_op(sp, exp_half_line(), xs);
  const double s = std::exp(dilation_g());
  for (std::size_t i = 0; i < xs.size(); ++i) {
    const double y = xs[i] * s;
    EXPECT_NEAR(std::abs(r.value[i] - 0.5 * std::exp(-y) * (y + 0.5)), 0.0, 1e-5) << xs[i];
  }
}

TEST(TruncatedOp, ModeRules) {
  auto sp = normal_spec(catalog_entry("identity"));
  EXPECT_THROW(apply_truncated_op(sp, exp_half_line(), {0.0}), Error);
  EXPECT_THROW(apply_truncated_op(sp, hermite_function(0), {1.0}), Error);
  sp.quad.mode = QuadMode::Direct;
  try {
    apply_truncated_op(sp, exp_half_line(), {1.0});
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::DecayClassUnsupported);
  }
}

TEST(TruncatedOp, HalvingConsistency) {
  auto sp = normal_spec(catalog_entry("identity"));
  EXPECT_GE(halving_consistency(sp, exp_half_line(), grid(0.25, 3, 0.25)), 0.95);
}

TEST(GroupAction, ScalesAndComposes) {
  auto h0 = hermite_function(0);
  auto k4 = apply_group_action(h0, 4.0);
  EXPECT_NEAR(k4(0.0), 2.0, 1e-15);
  auto k6 = apply_group_action(apply_group_action(h0, 2.0), 3.0);
  auto k6d = apply_group_action(h0, 6.0);
  for (double t : grid(-2, 2, 0.1)) EXPECT_NEAR(k6(t), k6d(t), 1e-13);
  for (double xi : grid(-3, 3, 0.5)) EXPECT_NEAR(std::abs(k6.transform(xi) - k6d.transform(xi)), 0.0, 1e-13);
  auto xs = grid(-40, 40, 0.005);
  std::vector<cplx> a, b;
  for (double t : xs) {
    a.push_back(h0(t));
    b.push_back(k4(t));
  }
  EXPECT_NEAR(discrete_l2(xs, a), discrete_l2(xs, b), 1e-9);
  EXPECT_TRUE(k4.certificate().verified);
  EXPECT_THROW(apply_group_action(h0, 0.0), Error);
}

TEST(Seminorm, GaussianFirstMoment) {
  EXPECT_NEAR(schwartz_seminorm(hermite_function(0), 1, 0), std::exp(-0.5), 1e-12);
}

TEST(Seminorm, H2DerivativeWeighted) {
  // h2' = (10 t - 4 t^3) e^{-t^2/2}; refined scan of t^2 |h2'|
  auto f = [](double t) { return t * t * std::fabs(10 * t - 4 * t * t * t) * std::exp(-t * t / 2); };
  double best = 0;
  for (double t = 0; t <= 10; t += 1e-6) best = std::max(best, f(t));
  EXPECT_NEAR(schwartz_seminorm(hermite_function(2), 2, 1), best, 1e-9);
}

TEST(Certificate, VerifiedForCatalogAndNotForSlowDecay) {
  for (const auto& n : test_function_names()) EXPECT_TRUE(test_function(n).certificate().verified) << n;
  EXPECT_FALSE(test_function("1/(1 + t^2)").certificate().verified);
  EXPECT_THROW(test_function("t*x1"), Error);
  EXPECT_THROW(hermite_function(0).derivative(7, 0.0), Error);
}

TEST(TruncatedOp, NumericTransformGaussianHalf) {
  auto sp = normal_spec(catalog_entry("identity"));
  auto xs = grid(0.5, 2.5, 0.5);
  auto r = apply_truncated_op(sp, gauss_half_line(), xs);
  for (std::size_t i = 0; i < xs.size(); ++i) EXPECT_NEAR(std::abs(r.value[i] - std::exp(-xs[i] * xs[i] / 2)), 0.0, 1e-5);
}

TEST(HalfLine, EndpointExpansionMatchesQuadrature) {
  // t e^{-t}: quadrature at moderate xi, closed form everywhere
  auto u = texp_half_line();
  auto F = half_line_ft(u, {50.0, 400.0, 3000.0, -3000.0});
  for (std::size_t i = 0; i < F.xi.size(); ++i) {
    const cplx want = u.transform(F.xi[i]);
    EXPECT_LE(std::abs(F.value[i] - want), 1e-13) << F.xi[i];
    EXPECT_LE(F.error[i], 1e-10);
  }
}
