#pragma once

#include <memory>

#include "evofam/linalg.hpp"

namespace evofam {

/// ‖x‖_D := ‖(I + A_ref)x‖₂ for a symmetric positive semidefinite A_ref.
/// Because A_ref ⪰ 0 the embedding D ↪ X has constant one.
class DNorm {
 public:
  explicit DNorm(const Matrix& ref_op) {
    require_square_finite(ref_op, "DNorm");
    if (!is_symmetric(ref_op)) throw invalid_argument("DNorm: reference operator is not symmetric");
    SpectralDecomposition eig = spd_eig(ref_op);
    const double scale = std::max(1.0, eig.eigenvalues.cwiseAbs().maxCoeff());
    if (eig.eigenvalues(0) < -1e-10 * scale) {
      throw invalid_argument("DNorm: reference operator is not positive semidefinite (eigenvalue " +
                             std::to_string(eig.eigenvalues(0)) + ")");
    }
    // Round-off negatives are clipped so the weights below are exactly ≥ 1.
    eig.eigenvalues = eig.eigenvalues.cwiseMax(0.0);
    spectrum_ = std::move(eig);
    ref_ = spectrum_.reconstruct();
    const Index n = ref_.rows();
    graph_ = Matrix::Identity(n, n) + ref_;
    graph_inv_ = spectrum_.apply([](double mu) { return 1.0 / (1.0 + mu); });
    weights_ = spectrum_.eigenvalues.array() + 1.0;
  }

  Index dim() const { return ref_.rows(); }
  const Matrix& ref_op() const { return ref_; }
  /// I + A_ref
  const Matrix& graph() const { return graph_; }
  const Matrix& graph_inverse() const { return graph_inv_; }
  const SpectralDecomposition& spectrum() const { return spectrum_; }
  /// β_i = 1 + μ_i, ascending.
  const Vector& weights() const { return weights_; }

  double norm(const Vector& x) const { return (graph_ * x).norm(); }

  /// ‖M‖_{𝓛(D,X)} = ‖M (I + A_ref)^{−1}‖₂.
  double operator_norm_from_D(const Matrix& m) const { return op_norm2(m * graph_inv_); }

 private:
  SpectralDecomposition spectrum_;
  Matrix ref_;
  Matrix graph_;
  Matrix graph_inv_;
  Vector weights_;
};

using DNormPtr = std::shared_ptr<const DNorm>;

}  // namespace evofam
