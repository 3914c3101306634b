#pragma once

// Dense real kernels shared by every module: exponentials, symmetric
// eigendecompositions, fractional powers, 2-norms and guarded solves.

#include <algorithm>
#include <cmath>
#include <complex>
#include <string>

#include <Eigen/Dense>
#include <unsupported/Eigen/MatrixFunctions>

#include "evofam/error.hpp"

namespace evofam {

using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;
using Index = Eigen::Index;

struct SpectralDecomposition {
  Vector eigenvalues;   // ascending
  Matrix eigenvectors;  // orthonormal columns

  Index dim() const { return eigenvalues.size(); }

  Matrix reconstruct() const {
    return eigenvectors * eigenvalues.asDiagonal() * eigenvectors.transpose();
  }

  /// Q f(Λ) Qᵀ for a scalar function f.
  template <typename F>
  Matrix apply(F&& f) const {
    Vector mapped = eigenvalues.unaryExpr(std::forward<F>(f));
    return eigenvectors * mapped.asDiagonal() * eigenvectors.transpose();
  }
};

template <typename Derived>
bool all_finite(const Eigen::MatrixBase<Derived>& m) {
  return m.allFinite();
}

inline void require_square_finite(const Matrix& m, const char* what) {
  if (m.rows() < 1 || m.rows() != m.cols()) {
    throw invalid_argument(std::string(what) + ": expected a non-empty square matrix, got " +
                           std::to_string(m.rows()) + "x" + std::to_string(m.cols()));
  }
  if (!m.allFinite()) {
    throw invalid_argument(std::string(what) + ": matrix has non-finite entries");
  }
}

inline double max_abs(const Matrix& m) { return m.size() == 0 ? 0.0 : m.cwiseAbs().maxCoeff(); }

/// max|M_ij − M_ji| ≤ 1e−12 · max|M_ij|.
inline bool is_symmetric(const Matrix& m) {
  if (m.rows() != m.cols()) return false;
  const double scale = max_abs(m);
  if (scale == 0.0) return true;
  return (m - m.transpose()).cwiseAbs().maxCoeff() <= 1e-12 * scale;
}

inline Matrix symmetric_part(const Matrix& m) { return 0.5 * (m + m.transpose()); }

inline SpectralDecomposition spd_eig(const Matrix& m) {
  require_square_finite(m, "spd_eig");
  if (!is_symmetric(m)) throw invalid_argument("spd_eig: matrix is not symmetric");
  Eigen::SelfAdjointEigenSolver<Matrix> solver(symmetric_part(m));
  if (solver.info() != Eigen::Success) throw numerical_error("spd_eig: eigensolver failed");
  return {solver.eigenvalues(), solver.eigenvectors()};
}

/// Projection of the symmetric part onto the positive semidefinite cone.
inline Matrix psd_part(const Matrix& m) {
  const SpectralDecomposition eig = spd_eig(symmetric_part(m));
  return eig.apply([](double mu) { return std::max(mu, 0.0); });
}

/// e^{tM}. Symmetric inputs go through the spectral route; everything else
/// uses Padé(13) scaling and squaring.
inline Matrix expm(const Matrix& m, double t = 1.0) {
  require_square_finite(m, "expm");
  if (!std::isfinite(t)) throw invalid_argument("expm: non-finite time");
  if (t == 0.0) return Matrix::Identity(m.rows(), m.cols());
  Matrix out;
  if (is_symmetric(m)) {
    out = spd_eig(symmetric_part(m)).apply([t](double mu) { return std::exp(t * mu); });
  } else {
    const Matrix scaled = t * m;
    out = scaled.exp();
  }
  if (!out.allFinite()) throw numerical_error("expm: result overflowed");
  return out;
}

/// Q Λ^α Qᵀ for symmetric positive definite M and α in (0,1).
inline Matrix frac_power(const Matrix& m, double alpha) {
  if (!(alpha > 0.0 && alpha < 1.0)) throw invalid_argument("frac_power: alpha must lie in (0,1)");
  const SpectralDecomposition eig = spd_eig(m);
  if (eig.eigenvalues(0) <= 0.0) {
    throw invalid_argument("frac_power: matrix is not positive definite (smallest eigenvalue " +
                           std::to_string(eig.eigenvalues(0)) + ")");
  }
  return eig.apply([alpha](double mu) { return std::pow(mu, alpha); });
}

inline Vector singular_values(const Matrix& m) {
  if (m.size() == 0) return Vector();
  if (!m.allFinite()) throw invalid_argument("singular_values: non-finite entries");
  Eigen::BDCSVD<Matrix> svd(m);
  return svd.singularValues();  // descending
}

inline double op_norm2(const Matrix& m) {
  if (m.size() == 0) return 0.0;
  return singular_values(m)(0);
}

inline double smallest_singular(const Matrix& m) {
  if (m.size() == 0) return 0.0;
  const Vector s = singular_values(m);
  return s(s.size() - 1);
}

inline Vector solve(const Matrix& m, const Vector& b) {
  require_square_finite(m, "solve");
  if (b.size() != m.rows()) throw invalid_argument("solve: dimension mismatch");
  const Vector s = singular_values(m);
  if (!(s(s.size() - 1) > 1e-13 * s(0))) {
    throw numerical_error("solve: singular system (sigma_min/sigma_max = " +
                          std::to_string(s(s.size() - 1) / s(0)) + ")");
  }
  return m.partialPivLu().solve(b);
}

/// Real 2n×2n embedding of λ + A for complex λ = r + iω:
/// [[rI + A, −ωI], [ωI, rI + A]]. Its singular values are those of λ + A
/// (each repeated), so σ_min of the block equals 1/‖(λ+A)^{−1}‖.
inline Matrix complex_shift_embedding(const Matrix& a, std::complex<double> lambda) {
  require_square_finite(a, "complex_shift_embedding");
  const Index n = a.rows();
  Matrix block(2 * n, 2 * n);
  const Matrix diag = a + lambda.real() * Matrix::Identity(n, n);
  const Matrix rot = lambda.imag() * Matrix::Identity(n, n);
  block.topLeftCorner(n, n) = diag;
  block.topRightCorner(n, n) = -rot;
  block.bottomLeftCorner(n, n) = rot;
  block.bottomRightCorner(n, n) = diag;
  return block;
}

}  // namespace evofam
