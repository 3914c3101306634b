#pragma once

// Relative modulus of continuity ω(h) of A(·) in 𝓛(D,X), the Dini integral
// ∫(ω(t)/t)^p dt with power-law tail, and the kernel bound (H′).

#include <cmath>
#include <limits>
#include <vector>

#include "evofam/operator_family.hpp"
#include "evofam/parallel.hpp"

namespace evofam {

struct DiniIntegral {
  double value = 0.0;          // +inf when diverging
  bool diverging = false;
  double fitted_exponent = 0;  // β in ω(t) ≈ C t^β near 0 (+inf for ω ≡ 0)
  double body = 0.0;           // ∫ over [h_min, τ]
  double tail = 0.0;           // extrapolated ∫ over (0, h_min)
};

struct DiniReport {
  std::vector<double> lags;
  std::vector<double> omega_raw;  // max over sampled pairs at each lag
  std::vector<double> omega;      // nondecreasing envelope
  double eta = 0.0;
  double p = std::numeric_limits<double>::quiet_NaN();
  double tau = 0.0;
  double fitted_exponent = 0.0;
  bool relatively_continuous = true;
  DiniIntegral integral;

  bool finite() const { return !integral.diverging; }

  /// Envelope value at the smallest sampled lag ≥ h, which bounds ω(h) from
  /// above because ω is nondecreasing. Lags beyond the grid use the last value.
  double omega_at(double h) const {
    for (std::size_t i = 0; i < lags.size(); ++i) {
      if (lags[i] >= h * (1.0 - 1e-12)) return omega[i];
    }
    return omega.empty() ? 0.0 : omega.back();
  }
};

inline std::vector<double> default_lag_grid(double tau, double h_min_rel = 1e-6, int count = 49) {
  return log_spaced(h_min_rel * tau, tau, count);
}

/// Least-squares slope of log ω against log h over the smallest lags with ω > 0.
inline double fit_power_exponent(const std::vector<double>& lags, const std::vector<double>& omega,
                                 std::size_t use = 0) {
  if (use == 0) use = std::max<std::size_t>(3, lags.size() / 4);
  double scale = 0.0;
  for (double w : omega) scale = std::max(scale, w);
  std::vector<double> xs, ys;
  for (std::size_t i = 0; i < lags.size() && xs.size() < use; ++i) {
    if (omega[i] > 1e-14 * std::max(scale, 1e-300) && omega[i] > 0.0) {
      xs.push_back(std::log(lags[i]));
      ys.push_back(std::log(omega[i]));
    }
  }
  if (scale == 0.0 || xs.empty()) return std::numeric_limits<double>::infinity();
  if (xs.size() == 1) return 0.0;
  double mx = 0, my = 0;
  for (std::size_t i = 0; i < xs.size(); ++i) {
    mx += xs[i];
    my += ys[i];
  }
  mx /= xs.size();
  my /= xs.size();
  double sxy = 0, sxx = 0;
  for (std::size_t i = 0; i < xs.size(); ++i) {
    sxy += (xs[i] - mx) * (ys[i] - my);
    sxx += (xs[i] - mx) * (xs[i] - mx);
  }
  return sxx > 0 ? sxy / sxx : 0.0;
}

/// ω(h) = max over pairs (s, s+h), s = i(τ−h)/(starts−1), of
/// ‖(A(s+h) − A(s))(I + A_ref)^{−1}‖₂, followed by a running-max envelope.
inline DiniReport relative_modulus(const OperatorFamily& f, const std::vector<double>& lags, int starts = 17) {
  if (lags.empty()) throw invalid_argument("relative_modulus: empty lag grid");
  if (starts < 2) throw invalid_argument("relative_modulus: need at least two start points");
  for (std::size_t i = 0; i < lags.size(); ++i) {
    if (!(lags[i] > 0.0 && lags[i] <= f.tau() * (1 + 1e-12))) throw invalid_argument("relative_modulus: lags must lie in (0, tau]");
    if (i > 0 && !(lags[i] > lags[i - 1])) throw invalid_argument("relative_modulus: lags must be ascending");
  }
  const double tau = f.tau();
  const std::size_t cells = lags.size() * static_cast<std::size_t>(starts);
  const Matrix& ginv = f.dnorm().graph_inverse();
  const std::vector<double> vals = parallel_map<double>(cells, [&](std::size_t idx) {
    const double h = std::min(lags[idx / starts], tau);
    const double s = (tau - h) * static_cast<double>(idx % starts) / (starts - 1);
    const double t = std::min(tau, s + h);
    return op_norm2((f.at(t) - f.at(s)) * ginv);
  });

  DiniReport rep;
  rep.lags = lags;
  rep.tau = tau;
  rep.eta = 0.0;
  rep.omega_raw.assign(lags.size(), 0.0);
  for (std::size_t idx = 0; idx < cells; ++idx) {
    double& w = rep.omega_raw[idx / starts];
    w = std::max(w, vals[idx]);
  }
  rep.omega = rep.omega_raw;
  for (std::size_t i = 1; i < rep.omega.size(); ++i) rep.omega[i] = std::max(rep.omega[i], rep.omega[i - 1]);
  rep.fitted_exponent = fit_power_exponent(rep.lags, rep.omega);
  const double top = rep.omega.back();
  rep.relatively_continuous = top == 0.0 || rep.omega.front() <= 1e-12 * top || rep.fitted_exponent >= 0.05;
  return rep;
}

/// ∫₀^τ (ω(t)/t)^p dt from samples on an ascending lag grid.
///  body: exact integral of the piecewise power-law interpolant through the samples;
///  above the grid: ω held at its last value;
///  below the grid: ω ≈ ω(h_min)(t/h_min)^β with β fitted on the smallest lags,
///  diverging when (β − 1)p + 1 ≤ 1e−6.
inline DiniIntegral dini_integral(const std::vector<double>& lags, const std::vector<double>& omega, double p,
                                  double tau) {
  if (!(p > 1.0)) throw invalid_argument("dini_integral: p must exceed 1");
  if (lags.empty() || lags.size() != omega.size()) throw invalid_argument("dini_integral: bad samples");
  for (double w : omega) {
    if (!(w >= 0.0)) throw invalid_argument("dini_integral: negative or NaN modulus sample");
  }
  DiniIntegral out;
  auto g = [&](std::size_t i) { return std::pow(omega[i] / lags[i], p); };
  for (std::size_t i = 0; i + 1 < lags.size(); ++i) {
    const double g0 = g(i), g1 = g(i + 1), t0 = lags[i], t1 = lags[i + 1];
    if (g0 > 0.0 && g1 > 0.0) {
      const double k = std::log(g1 / g0) / std::log(t1 / t0);
      if (std::abs(k + 1.0) < 1e-10) {
        out.body += g0 * t0 * std::log(t1 / t0);
      } else {
        out.body += g0 * t0 * (std::pow(t1 / t0, k + 1.0) - 1.0) / (k + 1.0);
      }
    } else {
      out.body += 0.5 * (g0 + g1) * (t1 - t0);
    }
  }
  const double h_max = lags.back();
  if (tau > h_max && omega.back() > 0.0) {
    out.body += std::pow(omega.back(), p) * (std::pow(h_max, 1.0 - p) - std::pow(tau, 1.0 - p)) / (p - 1.0);
  }
  out.fitted_exponent = fit_power_exponent(lags, omega);
  const double w0 = omega.front(), h0 = lags.front();
  if (w0 > 0.0) {
    const double beta = out.fitted_exponent;
    const double e = (beta - 1.0) * p + 1.0;
    if (e <= 1e-6) {
      out.diverging = true;
      out.tail = std::numeric_limits<double>::infinity();
    } else {
      out.tail = std::pow(w0, p) * std::pow(h0, 1.0 - p) / e;
    }
  }
  out.value = out.diverging ? std::numeric_limits<double>::infinity() : out.body + out.tail;
  return out;
}

inline DiniReport dini_report(const OperatorFamily& f, const std::vector<double>& lags, double p, int starts = 17) {
  DiniReport rep = relative_modulus(f, lags, starts);
  rep.p = p;
  rep.integral = dini_integral(rep.lags, rep.omega, p, f.tau());
  return rep;
}

/// Truncated integrals ∫_{h_k}^τ (ω/t)^p over successively extended lag grids,
/// h_{k+1} = h_k / factor. Growth ratios between consecutive values expose
/// divergence of the integral at zero.
struct DiniRefinement {
  std::vector<double> h_min;
  std::vector<double> truncated;
  std::vector<double> growth;  // truncated[k+1] / truncated[k]
  double min_growth() const {
    double g = std::numeric_limits<double>::infinity();
    for (double x : growth) g = std::min(g, x);
    return g;
  }
};

inline DiniRefinement dini_refinement(const OperatorFamily& f, double p, double h_start, int refinements,
                                      double factor = 1000.0, int per_decade = 8) {
  DiniRefinement out;
  for (int k = 0; k <= refinements; ++k) {
    const double h = h_start / std::pow(factor, k);
    const int count = std::max(4, static_cast<int>(std::ceil(per_decade * std::log10(f.tau() / h))) + 1);
    const DiniReport rep = relative_modulus(f, log_spaced(h, f.tau(), count));
    const DiniIntegral di = dini_integral(rep.lags, rep.omega, p, f.tau());
    out.h_min.push_back(h);
    out.truncated.push_back(di.body);
  }
  for (std::size_t k = 0; k + 1 < out.truncated.size(); ++k) {
    out.growth.push_back(out.truncated[k] > 0 ? out.truncated[k + 1] / out.truncated[k]
                                              : std::numeric_limits<double>::quiet_NaN());
  }
  return out;
}

/// c_fit = max over sampled pairs t > s of |t−s|^α ‖(A(t) − A(s)) e^{−(t−s)A(s)}‖₂.
/// Pairs are (s, s+h) for h on `lags` and s = i(τ−h)/(starts−1).
inline HPrimeReport hprime_check(const OperatorFamily& f, double alpha, const std::vector<double>& lags,
                                 int starts = 9) {
  if (!(alpha > 0.0 && alpha < 1.0)) throw invalid_argument("hprime_check: alpha must lie in (0,1)");
  if (lags.empty()) throw invalid_argument("hprime_check: empty lag grid");
  const double tau = f.tau();
  const std::size_t cells = lags.size() * static_cast<std::size_t>(starts);
  struct Cell {
    double value;
    double min_eig;
  };
  const std::vector<Cell> vals = parallel_map<Cell>(cells, [&](std::size_t idx) {
    const double h = std::min(lags[idx / starts], tau);
    const double s = (tau - h) * static_cast<double>(idx % starts) / (starts - 1);
    const double t = std::min(tau, s + h);
    const Matrix as = f.at(s);
    const double lam = Eigen::SelfAdjointEigenSolver<Matrix>(symmetric_part(as), Eigen::EigenvaluesOnly).eigenvalues()(0);
    const double v = std::pow(t - s, alpha) * op_norm2((f.at(t) - as) * expm(as, -(t - s)));
    return Cell{v, lam};
  });
  HPrimeReport rep;
  rep.alpha = alpha;
  rep.lags = lags;
  rep.worst_ratio.assign(lags.size(), 0.0);
  rep.min_sym_eigenvalue = std::numeric_limits<double>::infinity();
  for (std::size_t idx = 0; idx < cells; ++idx) {
    double& w = rep.worst_ratio[idx / starts];
    w = std::max(w, vals[idx].value);
    rep.min_sym_eigenvalue = std::min(rep.min_sym_eigenvalue, vals[idx].min_eig);
  }
  for (double w : rep.worst_ratio) rep.c_fit = std::max(rep.c_fit, w);
  rep.stable = rep.min_sym_eigenvalue > 0.0;
  return rep;
}

}  // namespace evofam
