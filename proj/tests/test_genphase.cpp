#include <gtest/gtest.h>

#include <cmath>

#include "collar/catalog.hpp"
#include "collar/genphase.hpp"

using namespace collar;

namespace {
const VarLayout L2(2);

GeneratingPhase phase(const std::string& name) { return build_phase(catalog_entry(name)); }
GeneratingPhase phase_src(const char* src, double collar = 1.0) {
  return GeneratingPhase::make(L2, parse(src, L2), collar);
}

const std::vector<std::string> kPositive{"identity", "dilation", "quadratic-collar", "boundary-shear"};

// exp(sin(-1)/2), mpmath
constexpr double kMinFactor = 0.65656374454091837606;
}  // namespace

TEST(BoundaryPhase, IdentityAndDilationGiveTangentialPairing) {
  for (const char* name : {"identity", "dilation"}) {
    auto r = boundary_phase(phase(name));
    EXPECT_TRUE(r.pass);
    EXPECT_EQ(r.xi_n_residual, 0.0);
    Tape t({r.psi_boundary});
    for (double x : {-0.7, 0.2, 1.0})
      for (double k : {-2.0, 0.5}) {
        std::vector<double> p(L2.size(), 0.0);
        p[L2.x(0)] = x;
        p[L2.k(0)] = k;
        p[L2.xn()] = 0.4;  // psi_d must not see x_n
        p[L2.kn()] = 3.0;
        EXPECT_EQ(t.eval1(p), x * k) << name;
      }
  }
}

TEST(BoundaryPhase, AbsoluteValueTermVanishesOnBoundary) {
  EXPECT_TRUE(boundary_phase(phase("bad-transmission")).pass);
}

TEST(BoundaryPhase, ShiftedPhaseIsNotFlat) {
  try {
    boundary_phase(phase_src("x1*k1 + (xn - 0.1)*kn"));
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::NotBoundaryFlat);
  }
}

TEST(BoundaryPhase, ShearIsLinearInTangentialCovariable) {
  auto r = boundary_phase(phase("boundary-shear"));
  EXPECT_TRUE(r.pass);
  EXPECT_LE(r.linearity_residual, 1e-12);
}

TEST(Generating, IdentityPairing) {
  auto r = check_generating(phase("identity"), build_map(catalog_entry("identity"), *catalog_entry("identity").map),
                            collar_samples(L2, 1.0, 50, 30));
  EXPECT_EQ(r.residual, 0.0);
}

TEST(Generating, PositiveCatalogMatchesMaps) {
  for (const auto& name : kPositive) {
    const Scenario& s = catalog_entry(name);
    auto r = check_generating(build_phase(s), build_map(s, *s.map), collar_samples(L2, 0.9 * s.collar, 200, 31));
    EXPECT_LE(r.residual, 1e-9) << name;
    EXPECT_TRUE(r.pass) << name;
  }
}

TEST(Generating, MismatchIsDetected) {
  const Scenario& id = catalog_entry("identity");
  auto samples = collar_samples(L2, 1.0, 200, 32);
  auto r = check_generating(phase("dilation"), build_map(id, *id.map), samples);
  EXPECT_GE(r.residual, 0.1);
  EXPECT_FALSE(r.pass);
  try {
    check_generating(phase("dilation"), build_map(id, *id.map), samples, 1e-8, true);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::GraphMismatch);
  }
}

TEST(Nondegeneracy, Identity) {
  auto r = check_nondegeneracy(phase("identity"));
  EXPECT_EQ(r.min_abs, 1.0);
  EXPECT_EQ(r.sign, 1);
}

TEST(Nondegeneracy, DilationMinimumIsAttainedAtLeftEdge) {
  // d2 psi / dx_n dxi_n = exp(sin(x1)/2); its minimum over [-1, 1] sits at x1 = -1.
  auto r = check_nondegeneracy(phase("dilation"));
  EXPECT_NEAR(r.min_abs, kMinFactor, 1e-6);
  EXPECT_NEAR(r.max_abs, std::exp(std::sin(1.0) / 2), 1e-12);
  EXPECT_TRUE(r.pass);
}

TEST(Nondegeneracy, QuadraticCollarIntervalBound) {
  auto r = check_nondegeneracy(phase("quadratic-collar"));
  // 1 + 2 x_n c(x1) >= 1 - 2 * 0.5 * 0.2, attained at x1 = 0, x_n = -1/2
  EXPECT_GE(r.min_abs, 0.8 - 1e-12);
  EXPECT_LE(r.min_abs, 0.8 + 1e-12);
}

TEST(Nondegeneracy, SignChangeIsAnError) {
  try {
    check_nondegeneracy(phase_src("x1*k1 + xn*kn + 2*xn^2*kn"));
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::SignChange);
  }
}

TEST(NormalCoeffs, Identity) {
  auto c = normal_coeffs(phase("identity"));
  Tape t({c.q_plus, c.q_minus});
  auto v = t.eval(std::vector<double>(L2.size(), 0.0));
  EXPECT_EQ(v[0], 1.0);
  EXPECT_EQ(v[1], -1.0);
  EXPECT_EQ(c.kappa, 0.25);
  EXPECT_TRUE(c.pass);
}

TEST(NormalCoeffs, DilationFollowsExpG) {
  auto c = normal_coeffs(phase("dilation"));
  Tape t({c.q_plus, c.q_minus});
  for (double x : linspace(-1, 1, 7)) {
    std::vector<double> p(L2.size(), 0.0);
    p[L2.x(0)] = x;
    auto v = t.eval(p);
    EXPECT_NEAR(v[0], std::exp(std::sin(x) / 2), 1e-15);
    EXPECT_NEAR(v[1], -std::exp(std::sin(x) / 2), 1e-15);
  }
  EXPECT_NEAR(c.kappa, kMinFactor / 4, 1e-12);
  EXPECT_LE(c.sum_residual, 1e-10);
  EXPECT_LE(c.euler_residual, 1e-12);
  EXPECT_FALSE(c.degenerate);
}

TEST(NormalCoeffs, PositiveCatalogTransmissionConsequence) {
  for (const auto& name : kPositive) {
    auto c = normal_coeffs(phase(name));
    EXPECT_LE(c.sum_residual, 1e-10) << name;
    EXPECT_GT(c.kappa, 0.0) << name;
  }
}

TEST(NormalCoeffs, AbsoluteValueTermBreaksAntisymmetry) {
  auto c = normal_coeffs(phase("bad-transmission"));
  EXPECT_NEAR(c.sum_residual, 0.2, 1e-12);
  EXPECT_FALSE(c.pass);
}

TEST(NormalCoeffs, KappaOnlyDecreasesUnderRefinement) {
  for (const auto& name : kPositive) {
    double k0 = normal_coeffs(phase(name)).kappa;
    double k1 = normal_coeffs(phase(name), linspace(-1, 1, 41)).kappa;
    EXPECT_LE(k1, k0) << name;
  }
}

TEST(NormalCoeffs, SingularAxis) {
  try {
    normal_coeffs(phase_src("x1*k1 + xn*kn + xn*norm(k1)"));
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::SingularAtAxis);
  }
}

TEST(Admissibility, PositiveCatalog) {
  for (const auto& name : kPositive) {
    auto r = check_admissibility(phase(name));
    EXPECT_TRUE(r.pass) << name;
    EXPECT_LE(r.residual, 1e-12) << name;
    EXPECT_EQ(r.components.size(), 4u);
  }
  EXPECT_EQ(check_admissibility(phase("identity")).residual, 0.0);
}

TEST(Admissibility, AbsoluteValueTermFails) {
  auto r = check_admissibility(phase("bad-transmission"));
  EXPECT_FALSE(r.pass);
  EXPECT_GE(r.residual, 0.1);
  for (const auto& c : r.components)
    if (c.name == "d/dxn") {
      EXPECT_FALSE(c.transmission.pass);
      EXPECT_NEAR(c.transmission.residual, 0.2, 1e-12);
    }
}

TEST(PhaseInvariants, EulerAndNormalVanishing) {
  for (const auto& name : kPositive) {
    const Scenario& s = catalog_entry(name);
    auto r = phase_invariants(build_phase(s), collar_samples(L2, s.collar, 100, 33));
    EXPECT_LE(r.euler_residual, 1e-10) << name;
    EXPECT_LE(r.normal_vanishing, 1e-10) << name;
  }
}
