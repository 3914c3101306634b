#pragma once

// Seeded generators shared by the test binaries.

#include <cmath>
#include <random>
#include <vector>

#include "evofam/linalg.hpp"
#include "evofam/time_grid.hpp"

namespace testing_support {

using evofam::Index;
using evofam::Matrix;
using evofam::TimeGrid;
using evofam::Vector;

inline Matrix gaussian(Index rows, Index cols, std::mt19937_64& gen) {
  std::normal_distribution<double> nd;
  Matrix m(rows, cols);
  for (Index j = 0; j < cols; ++j)
    for (Index i = 0; i < rows; ++i) m(i, j) = nd(gen);
  return m;
}

inline Matrix random_symmetric(Index n, std::mt19937_64& gen) {
  const Matrix g = gaussian(n, n, gen);
  return 0.5 * (g + g.transpose());
}

inline Matrix random_orthogonal(Index n, std::mt19937_64& gen) {
  Eigen::HouseholderQR<Matrix> qr(gaussian(n, n, gen));
  return qr.householderQ();
}

/// Q diag(lam) Qᵀ with lam uniform in [lo, hi].
inline Matrix random_spd(Index n, std::mt19937_64& gen, double lo = 0.5, double hi = 10.0) {
  std::uniform_real_distribution<double> ud(lo, hi);
  Vector d(n);
  for (Index i = 0; i < n; ++i) d(i) = ud(gen);
  const Matrix q = random_orthogonal(n, gen);
  return q * d.asDiagonal() * q.transpose();
}

inline Vector random_vector(Index n, std::mt19937_64& gen) { return gaussian(n, 1, gen).col(0); }

/// Three-harmonic forcing with Gaussian coefficients, sampled on the nodes.
inline std::vector<Vector> smooth_random_forcing(const TimeGrid& g, Index n, std::mt19937_64& gen) {
  const Matrix c = gaussian(n, 6, gen);
  std::vector<Vector> f;
  for (int j = 0; j <= g.steps(); ++j) {
    const double t = g.node(j);
    Vector v = Vector::Zero(n);
    for (int l = 0; l < 3; ++l) v += std::cos((l + 1) * 2.0 * t) * c.col(2 * l) + std::sin((l + 1) * 3.0 * t) * c.col(2 * l + 1);
    f.push_back(v);
  }
  return f;
}

/// Truncated exponential series with scaling and squaring; independent of the
/// Padé route used by the library.
inline Matrix taylor_expm(const Matrix& m) {
  int squarings = 0;
  double nrm = m.lpNorm<Eigen::Infinity>();
  while (nrm > 0.125) {
    nrm *= 0.5;
    ++squarings;
  }
  const Matrix a = m / std::ldexp(1.0, squarings);
  Matrix term = Matrix::Identity(m.rows(), m.cols()), sum = term;
  for (int k = 1; k <= 30; ++k) {
    term = term * a / k;
    sum += term;
  }
  for (int s = 0; s < squarings; ++s) sum = sum * sum;
  return sum;
}

}  // namespace testing_support
