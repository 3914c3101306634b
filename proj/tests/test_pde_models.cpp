#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>

#include "evofam/admissibility.hpp"
#include "evofam/modulus.hpp"
#include "evofam/pde_models.hpp"
#include "support.hpp"

using namespace evofam;
using namespace testing_support;

namespace {

GridDomain dirichlet_interval(int m) { return GridDomain::interval(m, {Side::left, Side::right}, {}); }
GridDomain mixed_interval(int m) { return GridDomain::interval(m, {Side::left}, {Side::right}); }

std::vector<double> sorted_eigenvalues(const Matrix& m) {
  const Eigen::SelfAdjointEigenSolver<Matrix> es(symmetric_part(m), Eigen::EigenvaluesOnly);
  return std::vector<double>(es.eigenvalues().data(), es.eigenvalues().data() + m.rows());
}

// Eigenvalues of −Δ_h on m Dirichlet nodes, h = 1/(m+1).
std::vector<double> dirichlet_spectrum(int m) {
  const double h = 1.0 / (m + 1);
  std::vector<double> out;
  for (int k = 1; k <= m; ++k) out.push_back(4.0 / (h * h) * std::pow(std::sin(k * M_PI * h / 2.0), 2));
  return out;
}

}  // namespace

TEST(Laplacian, DirichletTridiagonal) {
  const int m = 7;
  const GridDomain d = dirichlet_interval(m);
  const Matrix l = laplacian(d);
  const double h2 = d.hx() * d.hx();
  for (int i = 0; i < m; ++i) {
    for (int j = 0; j < m; ++j) {
      const double expect = i == j ? 2.0 / h2 : (std::abs(i - j) == 1 ? -1.0 / h2 : 0.0);
      EXPECT_DOUBLE_EQ(l(i, j), expect);
    }
  }
}

TEST(Laplacian, DirichletSpectrum) {
  for (int m : {5, 32, 63}) {
    const std::vector<double> ev = sorted_eigenvalues(laplacian(dirichlet_interval(m)));
    const std::vector<double> ref = dirichlet_spectrum(m);
    for (int k = 0; k < m; ++k) EXPECT_NEAR(ev[k], ref[k], 1e-8 * ref.back());
  }
}

TEST(Laplacian, RectangleSpectrumIsSumOfIntervals) {
  const GridDomain d(2, 5, 4, {Side::left, Side::right, Side::bottom, Side::top}, {});
  const std::vector<double> ev = sorted_eigenvalues(laplacian(d));
  std::vector<double> ref;
  for (double a : dirichlet_spectrum(5))
    for (double b : dirichlet_spectrum(4)) ref.push_back(a + b);
  std::sort(ref.begin(), ref.end());
  for (std::size_t k = 0; k < ref.size(); ++k) EXPECT_NEAR(ev[k], ref[k], 1e-9 * ref.back());
}

TEST(Laplacian, PureNeumannAnnihilatesConstants) {
  const GridDomain d1 = GridDomain::interval(20, {}, {Side::left, Side::right});
  const GridDomain d2(2, 6, 5, {}, {Side::left, Side::right, Side::bottom, Side::top});
  for (const GridDomain& d : {d1, d2}) {
    const Matrix l = laplacian(d);
    const Vector ones = Vector::Ones(d.size());
    EXPECT_LE((l * ones).cwiseAbs().maxCoeff(), 1e-10 * l.cwiseAbs().maxCoeff());
  }
}

TEST(Laplacian, MixedBoundaryIsPositiveDefinite) {
  // Reflection puts the Neumann end half a cell inside: 4/h² sin²((k − ½)π / (2m + 1)).
  const int m = 16;
  const std::vector<double> ev = sorted_eigenvalues(laplacian(mixed_interval(m)));
  const double h = 1.0 / (m + 1);
  EXPECT_GT(ev.front(), 1.0);
  for (int k = 1; k <= m; ++k) {
    const double ref = 4.0 / (h * h) * std::pow(std::sin((k - 0.5) * M_PI / (2 * m + 1)), 2);
    EXPECT_NEAR(ev[k - 1], ref, 1e-9 * ev.back());
  }
}

TEST(GridDomain, LabelValidation) {
  EXPECT_THROW(GridDomain::interval(4, {Side::left}, {}), Error);
  EXPECT_THROW(GridDomain::interval(4, {Side::left, Side::right}, {Side::right}), Error);
  EXPECT_THROW(GridDomain::interval(4, {Side::left, Side::top}, {Side::right}), Error);
  EXPECT_THROW(GridDomain(3, 4, 4, {}, {}), Error);
  EXPECT_THROW(GridDomain::interval(0, {Side::left}, {Side::right}), Error);
  const GridDomain d = mixed_interval(9);
  EXPECT_EQ(d.size(), 9);
  EXPECT_DOUBLE_EQ(d.hx(), 0.1);
  EXPECT_DOUBLE_EQ(d.cell_volume(), 0.1);
}

TEST(GridDomain, FromKeys) {
  const GridDomain d = domain_from_keys({{"dim", "2"}, {"mx", "4"}, {"my", "3"}, {"gamma0_sides", "left,right,bottom"},
                                         {"gamma1_sides", "top"}});
  EXPECT_EQ(d.size(), 12);
  EXPECT_EQ(d.label(Side::top), Boundary::neumann);
  EXPECT_THROW(domain_from_keys({{"dim", "1"}, {"m", "x"}}), Error);
}

TEST(EllipticFamily, ConstantCoefficientsMatchLaplacian) {
  const GridDomain d = dirichlet_interval(12);
  const OperatorFamily f = elliptic_family(d, EllipticCoefficients{});
  EXPECT_LT((f.at(0.3) - laplacian(d)).cwiseAbs().maxCoeff(), 1e-12);
}

TEST(EllipticFamily, TimeIndependentModulusVanishes) {
  EllipticCoefficients c;
  c.a11 = [](double, double x, double) { return 1.0 + x; };
  const OperatorFamily f = elliptic_family(mixed_interval(10), c);
  const DiniReport r = relative_modulus(f, log_spaced(1e-4, 1.0, 20));
  for (double w : r.omega) EXPECT_EQ(w, 0.0);
}

TEST(EllipticFamily, HoelderCoefficientExponent) {
  EllipticCoefficients c;
  c.a11 = [](double t, double, double) { return 1.0 + 0.5 * std::sqrt(t); };
  const auto spec = [](double h) { return 0.5 * std::sqrt(h); };
  const OperatorFamily f = elliptic_family(mixed_interval(10), c, 1.0, spec);
  const DiniReport r = relative_modulus(f, log_spaced(1e-6, 1.0, 40));
  EXPECT_NEAR(r.fitted_exponent, 0.5, 0.05);
}

TEST(EllipticFamily, MixedDerivativeStencil) {
  // For u = xy away from the boundary: −2 a12 ∂xy u = −2 a12, other terms vanish.
  const GridDomain d(2, 7, 7, {Side::left, Side::right, Side::bottom, Side::top}, {});
  EllipticCoefficients c;
  c.a12 = [](double, double, double) { return 0.3; };
  const Matrix a = elliptic_family(d, c).at(0.0);
  Vector u(d.size());
  for (int j = 0; j < 7; ++j)
    for (int i = 0; i < 7; ++i) u(d.index(i, j)) = d.x(i) * d.y(j);
  const Vector au = a * u;
  for (int j = 1; j < 6; ++j)
    for (int i = 1; i < 6; ++i) EXPECT_NEAR(au(d.index(i, j)), -0.6, 1e-10);
}

TEST(EllipticFamily, Errors) {
  EllipticCoefficients bad;
  bad.a11 = [](double t, double, double) { return 0.5 - t; };
  try {
    elliptic_family(mixed_interval(8), bad);
    FAIL() << "expected an ellipticity error";
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::hypothesis);
  }
  EllipticCoefficients nan;
  nan.a11 = [](double, double, double) { return std::numeric_limits<double>::quiet_NaN(); };
  EXPECT_THROW(elliptic_family(mixed_interval(8), nan), Error);
  EllipticCoefficients fast;
  fast.a11 = [](double t, double, double) { return 1.0 + t; };
  EXPECT_THROW(elliptic_family(mixed_interval(8), fast, 1.0, [](double h) { return 0.1 * h; }), Error);
}

TEST(FractionalFamily, ZeroCoefficientIsAutonomous) {
  const GridDomain d = mixed_interval(8);
  const OperatorFamily f = fractional_family(d, 0.3, [](double) { return 0.0; });
  for (double t : {0.0, 0.4, 1.0}) EXPECT_EQ((f.at(t) - laplacian(d)).cwiseAbs().maxCoeff(), 0.0);
}

TEST(FractionalFamily, SpectralMapping) {
  const GridDomain d = mixed_interval(3);
  const double alpha = 0.3;
  const OperatorFamily f = fractional_family(d, alpha, [](double t) { return t; });
  const std::vector<double> mu = sorted_eigenvalues(laplacian(d));
  for (double t : {0.0, 0.25, 1.0}) {
    const std::vector<double> ev = sorted_eigenvalues(f.at(t));
    for (int k = 0; k < 3; ++k) EXPECT_NEAR(ev[k], mu[k] + t * std::pow(mu[k], alpha), 1e-9 * mu.back());
  }
}

TEST(FractionalFamily, CommutesWithLaplacianEigenbasis) {
  const GridDomain d(2, 5, 4, {Side::left, Side::bottom}, {Side::right, Side::top});
  const OperatorFamily f = fractional_family(d, 0.4, [](double t) { return 0.5 + 0.5 * t; });
  const Matrix q = spd_eig(laplacian(d)).eigenvectors;
  for (double t : {0.1, 0.9}) {
    Matrix m = q.transpose() * f.at(t) * q;
    m.diagonal().setZero();
    EXPECT_LE(m.cwiseAbs().maxCoeff(), 1e-9 * f.sup_norm());
  }
}

TEST(FractionalFamily, HPrimeAttached) {
  const OperatorFamily f = fractional_family(mixed_interval(16), 0.3, [](double t) { return 0.5 + 0.5 * t; });
  ASSERT_TRUE(f.hprime.has_value());
  EXPECT_TRUE(std::isfinite(f.hprime->c_fit));
  EXPECT_GT(f.hprime->c_fit, 0.0);
  EXPECT_TRUE(f.hprime->stable);
}

TEST(FractionalFamily, Errors) {
  const GridDomain d = mixed_interval(6);
  const auto b = [](double) { return 1.0; };
  try {
    fractional_family(d, 0.6, b);
    FAIL() << "expected a hypothesis error";
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::hypothesis);
  }
  FractionalOptions force;
  force.force = true;
  EXPECT_NO_THROW(fractional_family(d, 0.6, b, 1.0, force));
  EXPECT_THROW(fractional_family(d, 1.0, b, 1.0, force), Error);
  EXPECT_THROW(fractional_family(d, 0.3, [](double t) { return t - 0.5; }), Error);
  EXPECT_THROW(fractional_family(GridDomain::interval(6, {}, {Side::left, Side::right}), 0.3, b), Error);
}

TEST(BoundaryTrace, ConstantFunctionOnInterval) {
  const GridDomain d = mixed_interval(9);
  const ObservationOp c = boundary_trace(d, DNorm(laplacian(d)));
  // u ≡ 1 has L²-weighted coordinates √h.
  const Vector x = Vector::Constant(d.size(), std::sqrt(d.cell_volume()));
  ASSERT_EQ(c.y_dim, 1);
  EXPECT_NEAR((c.C * x)(0), 1.0, 1e-14);
}

TEST(BoundaryTrace, VanishesAwayFromObservedSide) {
  const GridDomain d = mixed_interval(9);
  const ObservationOp c = boundary_trace(d, DNorm(laplacian(d)));
  Vector x = Vector::Random(d.size());
  x(d.size() - 1) = 0.0;
  EXPECT_EQ((c.C * x).norm(), 0.0);
}

TEST(BoundaryTrace, RectangleEdgeMeasure) {
  for (int k : {3, 8}) {
    const GridDomain d(2, k, 5, {Side::left, Side::right, Side::bottom}, {Side::top});
    const ObservationOp c = boundary_trace(d, DNorm(laplacian(d)));
    const Vector x = Vector::Constant(d.size(), std::sqrt(d.cell_volume()));
    EXPECT_EQ(c.y_dim, k);
    EXPECT_NEAR((c.C * x).squaredNorm(), 1.0, 1e-13);
  }
  const GridDomain two(2, 4, 6, {Side::left, Side::bottom}, {Side::right, Side::top});
  const Vector x = Vector::Constant(two.size(), std::sqrt(two.cell_volume()));
  EXPECT_NEAR((boundary_trace(two, DNorm(laplacian(two))).C * x).squaredNorm(), 2.0, 1e-13);
}

TEST(BoundaryTrace, Errors) {
  const GridDomain d = dirichlet_interval(5);
  EXPECT_THROW(boundary_trace(d, DNorm(laplacian(d))), Error);
  const GridDomain m = mixed_interval(5);
  EXPECT_THROW(boundary_trace(m, DNorm(Matrix::Identity(4, 4))), Error);
}

TEST(BoundaryTrace, AdmissibilityConstantStableUnderRefinement) {
  double prev = 0.0;
  for (int m : {16, 32, 64}) {
    const GridDomain d = mixed_interval(m);
    const Matrix l = laplacian(d);
    const DNorm dn(l);
    const double g = gamma_frozen(l, boundary_trace(d, dn), 2.0, TimeGrid::graded(0, 1, 512, 3.0)).gamma;
    EXPECT_GT(g, 0.0);
    if (prev > 0.0) {
      EXPECT_LE(std::abs(g - prev), 0.1 * prev) << "m = " << m;
    }
    prev = g;
  }
}

TEST(BoundaryTrace, RectangleAdmissibilityStableUnderRefinement) {
  double prev = 0.0;
  for (int m : {6, 12}) {
    const GridDomain d(2, m, m, {Side::left, Side::right, Side::bottom}, {Side::top});
    const Matrix l = laplacian(d);
    const DNorm dn(l);
    const double g = gamma_frozen(l, boundary_trace(d, dn), 2.0, TimeGrid::graded(0, 1, 256, 3.0)).gamma;
    if (prev > 0.0) {
      EXPECT_LE(std::abs(g - prev), 0.1 * prev);
    }
    prev = g;
  }
}
