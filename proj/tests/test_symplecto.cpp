#include <gtest/gtest.h>

#include <cmath>

#include "collar/catalog.hpp"
#include "collar/fit.hpp"
#include "collar/symplecto.hpp"

using namespace collar;

namespace {
const VarLayout L2(2);

SymplectoMap cat_map(const std::string& name) {
  const Scenario& s = catalog_entry(name);
  return build_map(s, *s.map);
}

SymplectoMap cat_inverse(const std::string& name) {
  const Scenario& s = catalog_entry(name);
  return build_map(s, *s.inverse);
}

std::vector<std::string> mapped_names() {
  std::vector<std::string> v;
  for (const auto& s : catalog())
    if (s.map) v.push_back(s.name);
  return v;
}

std::vector<std::string> positive_names() {
  std::vector<std::string> v;
  for (const auto& s : catalog())
    if (s.map && is_positive(s)) v.push_back(s.name);
  return v;
}

double g(double y) { return std::sin(y) / 2; }
}  // namespace

TEST(Jacobian, IdentityMapGivesIdentityMatrix) {
  auto chi = cat_map("identity");
  for (const auto& p : collar_samples(L2, 1.0, 20, 3)) {
    auto J = jacobian(chi, p);
    EXPECT_EQ((J - Eigen::MatrixXd::Identity(4, 4)).cwiseAbs().maxCoeff(), 0.0);
  }
}

TEST(Jacobian, DilationNormalEntriesAtBoundary) {
  auto chi = cat_map("dilation");
  for (const auto& p : collar_samples(L2, 1.0, 50, 4, true)) {
    auto J = jacobian(chi, p);
    const double y1 = p[L2.x(0)];
    EXPECT_NEAR(J(2, 2), std::exp(-g(y1)), 1e-15);
    EXPECT_NEAR(J(3, 3), std::exp(g(y1)), 1e-15);
    EXPECT_NEAR(J(2, 2) * J(3, 3), 1.0, 1e-15);
  }
}

TEST(Jacobian, EntriesAgreeWithCentralDifferences) {
  const double h = 1e-5;
  for (const auto& name : mapped_names()) {
    const Scenario& s = catalog_entry(name);
    auto chi = cat_map(name);
    auto cols = chi.col_vars();
    for (const auto& p : collar_samples(L2, 0.8 * s.collar, 20, 5)) {
      auto J = jacobian(chi, p);
      for (int c = 0; c < 4; ++c) {
        auto pp = p, pm = p;
        pp[cols[c]] += h;
        pm[cols[c]] -= h;
        auto fp = chi.apply(pp), fm = chi.apply(pm);
        // rows in (x', xi', x_n, xi_n) order
        const int slots[] = {L2.x(0), L2.k(0), L2.xn(), L2.kn()};
        for (int r = 0; r < 4; ++r) {
          double fd = (fp[slots[r]] - fm[slots[r]]) / (2 * h);
          EXPECT_NEAR(J(r, c), fd, 1e-6) << name << " r" << r << " c" << c;
        }
      }
    }
  }
}

TEST(Symplectic, IdentityResidualIsZero) {
  auto r = check_symplectic(cat_map("identity"), collar_samples(L2, 1.0, 50, 6));
  EXPECT_EQ(r.residual, 0.0);
  EXPECT_TRUE(r.pass);
}

TEST(Symplectic, PositiveCatalogOver200Samples) {
  for (const auto& name : positive_names()) {
    const Scenario& s = catalog_entry(name);
    auto r = check_symplectic(cat_map(name), collar_samples(L2, s.collar, 200, 7));
    EXPECT_TRUE(r.pass) << name;
    EXPECT_LE(r.residual, 1e-10) << name;
  }
}

TEST(Symplectic, InconsistentFiberFactorFails) {
  auto r = check_symplectic(cat_map("bad-symplectic"), collar_samples(L2, 1.0, 200, 7));
  EXPECT_FALSE(r.pass);
  EXPECT_GE(r.residual, 0.1);
  EXPECT_EQ(r.worst_point.size(), L2.size());
}

TEST(Symplectic, ImpliesUnimodular) {
  for (const auto& name : mapped_names()) {
    const Scenario& s = catalog_entry(name);
    auto r = check_symplectic(cat_map(name), collar_samples(L2, s.collar, 100, 8));
    if (r.pass) {
      EXPECT_LE(r.det_defect, 1e-8) << name;
    }
  }
}

TEST(BoundaryPreserving, CatalogValues) {
  auto bs = collar_samples(L2, 1.0, 100, 9, true);
  EXPECT_EQ(check_boundary_preserving(cat_map("identity"), bs).sup, 0.0);
  EXPECT_EQ(check_boundary_preserving(cat_map("dilation"), bs).sup, 0.0);
  auto r = check_boundary_preserving(cat_map("bad-boundary-shift"), bs);
  EXPECT_FALSE(r.pass);
  EXPECT_NEAR(r.sup, 0.1, 1e-15);
}

TEST(BoundaryMap, IdentityAndDilationAreTrivial) {
  auto bs = collar_samples(L2, 1.0, 50, 10, true);
  for (const char* name : {"identity", "dilation"}) {
    auto bm = induced_boundary_map(cat_map(name), bs);
    ASSERT_EQ(bm.b.size(), 1u);
    Tape t({bm.b[0], bm.coeff[0][0]});
    for (double y : linspace(-1, 1, 11)) {
      std::vector<double> p(L2.size(), 0.0);
      p[L2.x(0)] = y;
      auto v = t.eval(p);
      EXPECT_EQ(v[0], y) << name;
      EXPECT_EQ(v[1], 1.0) << name;
    }
    EXPECT_LE(bm.det_defect, 1e-10);
  }
}

TEST(BoundaryMap, ShearCotangentPartIsInverseDerivative) {
  auto bm = induced_boundary_map(cat_map("boundary-shear"), collar_samples(L2, 1.0, 50, 11, true));
  Tape t({bm.b[0], bm.coeff[0][0]});
  for (double y : linspace(-1, 1, 21)) {
    std::vector<double> p(L2.size(), 0.0);
    p[L2.x(0)] = y;
    auto v = t.eval(p);
    const double th = std::tanh(y);
    EXPECT_NEAR(v[0], y + 0.3 * th, 1e-14);
    EXPECT_NEAR(v[1], 1.0 / (1.0 + 0.3 * (1 - th * th)), 1e-14);
  }
  EXPECT_LE(bm.det_defect, 1e-10);
  EXPECT_LE(bm.linearity_residual, 1e-12);
}

TEST(BoundaryMap, Errors) {
  auto bs = collar_samples(L2, 1.0, 20, 12, true);
  try {
    induced_boundary_map(cat_map("bad-boundary-shift"), bs);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::NotBoundaryPreserving);
  }
  // base point moved along the fiber: not a cotangent lift
  SymplectoMap twisted(L2, {parse("y1 + 0.1*etan/norm(eta1, etan)", L2), parse("yn", L2)},
                       {parse("eta1", L2), parse("etan", L2)});
  try {
    induced_boundary_map(twisted, bs);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::NotFiberLinear);
  }
}

TEST(BoundaryMap, ComposesToIdentityThroughInverses) {
  auto bs = collar_samples(L2, 1.0, 30, 13, true);
  for (const char* name : {"identity", "dilation", "quadratic-collar", "boundary-shear"}) {
    auto f = induced_boundary_map(cat_map(name), bs);
    auto g = induced_boundary_map(cat_inverse(name), bs);
    Tape tf({f.b[0], f.coeff[0][0]}), tg({g.b[0], g.coeff[0][0]});
    for (double y : linspace(-0.9, 0.9, 13)) {
      std::vector<double> p(L2.size(), 0.0);
      p[L2.x(0)] = y;
      auto a = tf.eval(p);
      p[L2.x(0)] = a[0];
      auto b = tg.eval(p);
      EXPECT_NEAR(b[0], y, 1e-8) << name;
      EXPECT_NEAR(a[1] * b[1], 1.0, 1e-8) << name;
    }
  }
}

TEST(Inverses, FullMapsCompose) {
  for (const char* name : {"identity", "dilation", "quadratic-collar", "boundary-shear"}) {
    const Scenario& s = catalog_entry(name);
    auto f = cat_map(name), g = cat_inverse(name);
    for (const auto& p : collar_samples(L2, 0.8 * s.collar, 50, 14)) {
      auto q = g.apply(f.apply(p));
      for (std::size_t i = 0; i < q.size(); ++i) EXPECT_NEAR(q[i], p[i], 1e-8) << name;
    }
  }
}

TEST(JacobianStructure, IdentityExact) {
  auto r = check_jacobian_structure(cat_map("identity"), collar_samples(L2, 1.0, 30, 15, true));
  EXPECT_EQ(r.zero_block_max, 0.0);
  EXPECT_EQ(r.det_boundary_defect, 0.0);
  EXPECT_EQ(r.product_defect, 0.0);
  EXPECT_TRUE(r.pass);
}

TEST(JacobianStructure, QuadraticCollar) {
  const Scenario& s = catalog_entry("quadratic-collar");
  auto chi = cat_map("quadratic-collar");
  auto r = check_jacobian_structure(chi, collar_samples(L2, s.collar, 200, 16, true),
                                    collar_samples(L2, s.collar, 200, 17));
  EXPECT_LE(r.zero_block_max, 1e-12);
  EXPECT_LE(r.product_defect, 1e-10);
  EXPECT_LE(r.det_boundary_defect, 1e-10);
  // d x_n / d y_n = 1/sqrt(1 + 4 c y_n) >= 1/sqrt(1.4) on the collar
  EXPECT_GE(r.min_normal_derivative, 1 / std::sqrt(1.4) - 1e-12);
  EXPECT_TRUE(r.pass);
}

TEST(JacobianStructure, PositiveCatalog) {
  for (const auto& name : positive_names()) {
    const Scenario& s = catalog_entry(name);
    auto r = check_jacobian_structure(cat_map(name), collar_samples(L2, s.collar, 100, 18, true),
                                      collar_samples(L2, s.collar, 100, 19));
    EXPECT_TRUE(r.pass) << name;
    EXPECT_LE(r.zero_block_max, 1e-10) << name;
    EXPECT_LE(r.product_defect, 1e-8) << name;
  }
}

TEST(Homogeneity, CatalogMaps) {
  for (const auto& name : mapped_names()) {
    const Scenario& s = catalog_entry(name);
    EXPECT_LE(map_homogeneity_defect(cat_map(name), collar_samples(L2, s.collar, 30, 20)), 1e-10) << name;
  }
}

TEST(Negatives, FailOnlyTheirIntendedCheck) {
  auto bs = collar_samples(L2, 1.0, 100, 21, true);
  auto cs = collar_samples(L2, 1.0, 100, 22);
  auto shift = cat_map("bad-boundary-shift");
  EXPECT_TRUE(check_symplectic(shift, cs).pass);
  EXPECT_FALSE(check_boundary_preserving(shift, bs).pass);
  auto bad = cat_map("bad-symplectic");
  EXPECT_FALSE(check_symplectic(bad, cs).pass);
  EXPECT_TRUE(check_boundary_preserving(bad, bs).pass);
  EXPECT_NO_THROW(induced_boundary_map(bad, bs));
}
