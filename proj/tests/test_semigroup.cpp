#include <gtest/gtest.h>

#include <cmath>

#include "evofam/semigroup.hpp"
#include "support.hpp"

using namespace evofam;
using namespace testing_support;

namespace {

Matrix diag(std::initializer_list<double> v) {
  Vector d(static_cast<Index>(v.size()));
  Index i = 0;
  for (double x : v) d(i++) = x;
  return d.asDiagonal();
}

/// (1+|λ|)/min_k |λ + μ_k| over the same samples, from eigenvalues alone.
double spectral_m0(const OperatorFamily& f, const std::vector<double>& ts, const std::vector<Complex>& lams) {
  double m0 = 0.0;
  for (double t : ts) {
    const Vector mu = spd_eig(f.at(t)).eigenvalues;
    for (const Complex& l : lams) {
      double dist = INFINITY;
      for (Index k = 0; k < mu.size(); ++k) dist = std::min(dist, std::abs(l + mu(k)));
      m0 = std::max(m0, (1.0 + std::abs(l)) / dist);
    }
  }
  return m0;
}

}  // namespace

TEST(FrozenSemigroup, Examples) {
  const OperatorFamily f = constant_family(1.0, diag({1, 2}));
  EXPECT_EQ(frozen_semigroup(f, 0.3, 0.0), Matrix::Identity(2, 2));
  const Matrix e = frozen_semigroup(f, 0.5, 1.0);
  EXPECT_NEAR(e(0, 0), std::exp(-1.0), 1e-15);
  EXPECT_NEAR(e(1, 1), std::exp(-2.0), 1e-15);
  const OperatorFamily g = build_scalar_family("constant(a=2.5)");
  for (double t : {0.0, 0.4, 1.0}) EXPECT_NEAR(frozen_semigroup(g, t, 0.7)(0, 0), std::exp(-0.7 * 2.5), 1e-15);
  EXPECT_THROW(frozen_semigroup(f, 1.5, 0.1), Error);
  EXPECT_THROW(frozen_semigroup(f, 0.5, -0.1), Error);
}

TEST(Resolvent, DiagonalRealLambdaClosedForm) {
  const OperatorFamily f = constant_family(1.0, diag({0.5, 3, 7}));
  std::vector<Complex> lams;
  for (double l : {0.0, 0.1, 1.0, 10.0, 1e3}) lams.emplace_back(l, 0.0);
  const ResolventScanReport r = resolvent_scan(f, {0.0, 1.0}, lams);
  for (const auto& c : r.cells) {
    EXPECT_NEAR(c.bound_value, (1.0 + c.lambda.real()) / (c.lambda.real() + 0.5), 1e-12 * c.bound_value);
  }
  EXPECT_FALSE(r.violation);
}

TEST(Resolvent, ZeroOperatorAtLambdaOne) {
  const OperatorFamily f = constant_family(1.0, Matrix::Zero(3, 3));
  const ResolventScanReport r = resolvent_scan(f, {0.0}, {Complex(1.0, 0.0)});
  EXPECT_NEAR(r.M0, 2.0, 1e-14);
}

TEST(Resolvent, ImaginaryAxisPerEigenvalueModulus) {
  std::mt19937_64 gen(30);
  const Matrix a = random_spd(6, gen, 0.5, 5.0);
  const double mu_min = spd_eig(a).eigenvalues(0);
  const OperatorFamily f = constant_family(1.0, a);
  std::vector<Complex> lams;
  for (double w : {0.0, 0.3, 2.0, 50.0}) lams.emplace_back(0.0, w);
  const ResolventScanReport r = resolvent_scan(f, {0.0}, lams);
  for (const auto& c : r.cells) {
    EXPECT_NEAR(c.resolvent_norm, 1.0 / std::hypot(mu_min, c.lambda.imag()), 1e-10);
    EXPECT_LE(c.resolvent_norm, 1.0 / mu_min * (1 + 1e-12));
  }
  EXPECT_TRUE(std::isfinite(r.M0));
}

TEST(Resolvent, SpectralOracleForSymmetricFamilies) {
  std::mt19937_64 gen(31);
  for (int trial = 0; trial < 5; ++trial) {
    const OperatorFamily f = affine_family(1.0, random_spd(8, gen, 0.2, 9.0), random_spd(8, gen, 0.0, 2.0));
    const std::vector<double> ts = linspace(0.0, 1.0, 9);
    const std::vector<Complex> lams = half_plane_lambda_grid(0.0, 1e4, 9, 17);
    const ResolventScanReport r = resolvent_scan(f, ts, lams);
    EXPECT_NEAR(r.M0, spectral_m0(f, ts, lams), 1e-8 * r.M0);
    EXPECT_FALSE(r.violation);
    double mx = 0;
    for (const auto& c : r.cells) mx = std::max(mx, c.bound_value);
    EXPECT_EQ(mx, r.M0);
  }
}

TEST(Resolvent, LambdaGridStaysInHalfPlane) {
  for (double r0 : {0.0, 0.5, 3.0}) {
    const auto lams = half_plane_lambda_grid(r0, 100.0, 6, 9);
    bool has_real_axis = false;
    for (const auto& l : lams) {
      EXPECT_GE(l.real(), r0);
      EXPECT_LE(std::abs(l.imag()), 100.0 * (1 + 1e-12));
      has_real_axis = has_real_axis || l.imag() == 0.0;
    }
    EXPECT_TRUE(has_real_axis);
  }
}

TEST(Resolvent, SingularPointIsReported) {
  const OperatorFamily f = constant_family(1.0, diag({0.0, 1.0}));
  const ResolventScanReport r = resolvent_scan(f, {0.0, 0.5}, {Complex(0.0, 0.0), Complex(1.0, 0.0)});
  EXPECT_TRUE(r.violation);
  EXPECT_EQ(r.violation_t, 0.0);
  EXPECT_EQ(r.violation_lambda, Complex(0.0, 0.0));
  EXPECT_THROW(resolvent_scan(f, {0.0}, {Complex(-1.0, 0.0)}), Error);
}

TEST(Resolvent, NoViolationForPositiveSemidefiniteSymmetricParts) {
  std::mt19937_64 gen(32);
  for (int trial = 0; trial < 5; ++trial) {
    const Matrix skew = [&] {
      const Matrix g = gaussian(5, 5, gen);
      return Matrix(g - g.transpose());
    }();
    const OperatorFamily f = affine_family(1.0, random_spd(5, gen, 0.1, 3.0) + skew, random_spd(5, gen, 0.0, 1.0));
    const ResolventScanReport r = resolvent_scan(f, linspace(0, 1, 5), half_plane_lambda_grid(0.0, 1e3, 5, 9));
    EXPECT_FALSE(r.violation);
  }
}

TEST(Shift, NormalizationMovesIndefiniteFamilyIntoHalfPlane) {
  const OperatorFamily f = constant_family(1.0, diag({-2.0, 1.0}));
  EXPECT_NEAR(required_shift(f, {0.0}), 2.0, 1e-14);
  const OperatorFamily g = normalize_to_half_plane(f);
  EXPECT_NEAR(g.shift(), 3.0, 1e-14);
  const ResolventScanReport r = resolvent_scan(g, {0.0, 1.0}, half_plane_lambda_grid(0.0, 10.0, 4, 5));
  EXPECT_FALSE(r.violation);
  const OperatorFamily h = constant_family(1.0, diag({1.0, 2.0}));
  EXPECT_EQ(normalize_to_half_plane(h).shift(), 0.0);
}

TEST(AnalyticBounds, Examples) {
  const AnalyticBoundReport z = analytic_bounds(constant_family(1.0, Matrix::Zero(2, 2)));
  EXPECT_NEAR(z.c_semigroup, 1.0, 1e-15);
  EXPECT_EQ(z.c_derivative, 0.0);
  const AnalyticBoundReport one = analytic_bounds(build_scalar_family("constant(a=1)"));
  EXPECT_NEAR(one.c_semigroup, 1.0, 1e-6);
}

TEST(AnalyticBounds, DerivativeBoundReachesInverseE) {
  // s = 1/μ lies on the grid for μ = 10 and s-grid containing 0.1.
  const OperatorFamily f = constant_family(1.0, diag({10.0, 2.0}));
  const AnalyticBoundReport r = analytic_bounds(f, {0.0}, {1e-3, 0.01, 0.1, 0.5, 1.0});
  EXPECT_NEAR(r.c_derivative, std::exp(-1.0), 1e-14);
  const AnalyticBoundReport dense = analytic_bounds(f);
  EXPECT_LE(dense.c_derivative, std::exp(-1.0) * (1 + 1e-12));
  EXPECT_GE(dense.c_derivative, 0.99 * std::exp(-1.0));
}

TEST(AnalyticBounds, SymmetricPositiveFamiliesAreContractions) {
  std::mt19937_64 gen(33);
  for (int trial = 0; trial < 5; ++trial) {
    const OperatorFamily f = affine_family(1.0, random_spd(6, gen), random_spd(6, gen, 0.0, 1.0));
    const AnalyticBoundReport r = analytic_bounds(f, 9, 41);
    EXPECT_NEAR(r.c_semigroup, 1.0, 1e-9);
    EXPECT_TRUE(std::isfinite(r.c_derivative));
    EXPECT_TRUE(std::isfinite(r.c_graph));
  }
}

TEST(ResolventConstruction, ResidualVanishes) {
  std::mt19937_64 gen(34);
  for (int trial = 0; trial < 5; ++trial) {
    const Matrix a = gaussian(4, 4, gen);
    EXPECT_LE(resolvent_construction_oracle(a, Complex(0.2 * trial, 1.0), random_vector(4, gen)), 1e-12);
  }
  EXPECT_EQ(resolvent_construction_oracle(Matrix::Zero(3, 3), Complex(0, 0), Vector::Ones(3)), 0.0);
  EXPECT_LE(resolvent_construction_oracle(diag({1, 2}), Complex(1, 1), random_vector(2, gen)), 1e-12);
}
