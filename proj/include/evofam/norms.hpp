#pragma once

// Discrete L^p(a,b;X), L^p(a,b;D), W^{1,p}(a,b;X) and MR_p norms of sampled
// trajectories, and the trace-space norm through the quadratic K-functional.

#include <cmath>
#include <optional>

#include "evofam/dnorm.hpp"
#include "evofam/time_grid.hpp"

namespace evofam {

enum class Space { X, D };

inline void require_p(double p, const char* what) {
  if (!(p > 1.0) || !std::isfinite(p)) throw invalid_argument(std::string(what) + ": p must lie in (1, inf)");
}

inline void require_on_grid(const Trajectory& u, const TimeGrid& grid, const char* what) {
  if (u.size() != grid.size()) throw invalid_argument(std::string(what) + ": trajectory is not sampled on the grid");
}

/// (Σ_j w_j ‖u(t_j)‖^p)^{1/p}, Euclidean (X) or D-norm.
inline double lp_time_norm(const Trajectory& u, const TimeGrid& grid, double p, Space space = Space::X,
                           const DNorm* dnorm = nullptr) {
  require_p(p, "lp_time_norm");
  require_on_grid(u, grid, "lp_time_norm");
  if (space == Space::D && !dnorm) throw invalid_argument("lp_time_norm: D-norm requested without a reference operator");
  double acc = 0.0;
  for (int j = 0; j <= grid.steps(); ++j) {
    const Vector x = u.at(j);
    const double v = space == Space::X ? x.norm() : dnorm->norm(x);
    acc += grid.weight(j) * std::pow(v, p);
  }
  return std::pow(acc, 1.0 / p);
}

/// Second-order finite differences: three-point centred in the interior
/// (valid on nonuniform grids), three-point one-sided at the ends.
inline Trajectory time_derivative(const Trajectory& u, const TimeGrid& grid) {
  require_on_grid(u, grid, "time_derivative");
  const int n = grid.steps();
  Trajectory du(u.dim(), u.size());
  if (n == 1) {
    const Vector d = (u.at(1) - u.at(0)) / grid.step(0);
    du.at(0) = d;
    du.at(1) = d;
    return du;
  }
  for (int j = 1; j < n; ++j) {
    const double h0 = grid.step(j - 1), h1 = grid.step(j);
    du.at(j) = (-h1 / (h0 * (h0 + h1))) * u.at(j - 1) + ((h1 - h0) / (h0 * h1)) * u.at(j) +
               (h0 / (h1 * (h0 + h1))) * u.at(j + 1);
  }
  {
    const double h0 = grid.step(0), h1 = grid.step(1);
    du.at(0) = (-(2 * h0 + h1) / (h0 * (h0 + h1))) * u.at(0) + ((h0 + h1) / (h0 * h1)) * u.at(1) -
               (h0 / (h1 * (h0 + h1))) * u.at(2);
  }
  {
    const double h0 = grid.step(n - 2), h1 = grid.step(n - 1);
    du.at(n) = (h1 / (h0 * (h0 + h1))) * u.at(n - 2) - ((h0 + h1) / (h0 * h1)) * u.at(n - 1) +
               ((2 * h1 + h0) / (h1 * (h0 + h1))) * u.at(n);
  }
  return du;
}

inline double w1p_norm(const Trajectory& u, const TimeGrid& grid, double p) {
  return lp_time_norm(u, grid, p) + lp_time_norm(time_derivative(u, grid), grid, p);
}

enum class MRForm { sum, power };

struct TrajectoryNorms {
  double lp_x = 0.0;
  double lp_d = 0.0;
  double lp_du = 0.0;
  double w1p = 0.0;
  double mr = 0.0;
};

/// mr = ‖u‖_{W^{1,p}} + ‖u‖_{L^p(D)} (sum form), or
/// (‖u‖^p + ‖u̇‖^p + ‖u‖_D^p)^{1/p} (power form).
inline TrajectoryNorms trajectory_norms(const Trajectory& u, const TimeGrid& grid, double p, const DNorm& dnorm,
                                        MRForm form = MRForm::sum) {
  TrajectoryNorms n;
  n.lp_x = lp_time_norm(u, grid, p);
  n.lp_d = lp_time_norm(u, grid, p, Space::D, &dnorm);
  n.lp_du = lp_time_norm(time_derivative(u, grid), grid, p);
  n.w1p = n.lp_x + n.lp_du;
  n.mr = form == MRForm::sum
             ? n.w1p + n.lp_d
             : std::pow(std::pow(n.lp_x, p) + std::pow(n.lp_du, p) + std::pow(n.lp_d, p), 1.0 / p);
  return n;
}

inline double mr_norm(const Trajectory& u, const TimeGrid& grid, double p, const DNorm& dnorm,
                      MRForm form = MRForm::sum) {
  return trajectory_norms(u, grid, p, dnorm, form).mr;
}

// ---------------------------------------------------------------------------
// Trace space (X, D)_{1−1/p, p}

/// K₂(t,x) = (Σ_i x̂_i² t²β_i² / (1 + t²β_i²))^{1/2}, x̂ = Qᵀx, β_i = 1 + μ_i.
inline double k2_functional(const Vector& x, double t, const DNorm& dnorm) {
  if (x.size() != dnorm.dim()) throw invalid_argument("k2_functional: dimension mismatch");
  if (!(t >= 0.0)) throw invalid_argument("k2_functional: t must be nonnegative");
  const Vector xh = dnorm.spectrum().eigenvectors.transpose() * x;
  const Vector& beta = dnorm.weights();
  double acc = 0.0;
  for (Index i = 0; i < xh.size(); ++i) {
    const double tb = t * beta(i);
    acc += xh(i) * xh(i) * (tb * tb / (1.0 + tb * tb));
  }
  return std::sqrt(acc);
}

struct TraceNorm {
  double theta = 0.0;
  double p = 0.0;
  double t_min = 1e-8;
  double t_max = 1e8;
  int points = 400;
  double value = 0.0;
  std::optional<double> closed_form;  // when the spectral formula applies
};

/// (∫₀^∞ (t^{−θ} K₂(t,x))^p dt/t)^{1/p}: trapezoid in ln t on [t_min, t_max]
/// plus the two power-law tails (exponent (1−θ)p at 0, −θp at ∞).
inline double trace_norm_quadrature(const Vector& x, double p, const DNorm& dnorm, double t_min = 1e-8,
                                    double t_max = 1e8, int points = 400) {
  require_p(p, "trace_norm");
  const double theta = 1.0 - 1.0 / p;
  const double a = std::log(t_min), b = std::log(t_max);
  const double du = (b - a) / (points - 1);
  auto g = [&](double u) {
    const double t = std::exp(u);
    return std::pow(std::pow(t, -theta) * k2_functional(x, t, dnorm), p);
  };
  double acc = 0.0;
  for (int i = 0; i < points; ++i) {
    const double w = (i == 0 || i == points - 1) ? 0.5 * du : du;
    acc += w * g(a + i * du);
  }
  acc += g(a) / ((1.0 - theta) * p);
  acc += g(b) / (theta * p);
  return std::pow(acc, 1.0 / p);
}

/// Spectral value: for p = 2 (coordinates separate) Σ x̂_i² β_i π/2; for a
/// single eigencoordinate |x̂|^p β^{p−1} · B(1/2, (p−1)/2)/2. Empty otherwise.
inline std::optional<double> trace_norm_closed_form(const Vector& x, double p, const DNorm& dnorm) {
  require_p(p, "trace_norm");
  const Vector xh = dnorm.spectrum().eigenvectors.transpose() * x;
  const Vector& beta = dnorm.weights();
  if (std::abs(p - 2.0) < 1e-15) {
    double acc = 0.0;
    for (Index i = 0; i < xh.size(); ++i) acc += xh(i) * xh(i) * beta(i);
    return std::sqrt(acc * M_PI / 2.0);
  }
  const double scale = xh.cwiseAbs().maxCoeff();
  Index nonzero = 0, at = 0;
  for (Index i = 0; i < xh.size(); ++i) {
    if (std::abs(xh(i)) > 1e-14 * scale) {
      ++nonzero;
      at = i;
    }
  }
  if (scale == 0.0) return 0.0;
  if (nonzero != 1) return std::nullopt;
  const double c = 0.5 * std::beta(0.5, 0.5 * (p - 1.0));
  return std::pow(std::pow(std::abs(xh(at)), p) * std::pow(beta(at), p - 1.0) * c, 1.0 / p);
}

inline TraceNorm trace_norm(const Vector& x, double p, const DNorm& dnorm) {
  require_p(p, "trace_norm");
  TraceNorm out;
  out.p = p;
  out.theta = 1.0 - 1.0 / p;
  out.value = trace_norm_quadrature(x, p, dnorm, out.t_min, out.t_max, out.points);
  out.closed_form = trace_norm_closed_form(x, p, dnorm);
  return out;
}

}  // namespace evofam
