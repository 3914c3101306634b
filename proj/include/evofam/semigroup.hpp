#pragma once

// Frozen semigroups e^{−sA(t)}, analytic-semigroup constants and resolvent
// scans over a right half-plane.

#include <complex>
#include <limits>
#include <vector>

#include "evofam/csv.hpp"
#include "evofam/operator_family.hpp"
#include "evofam/parallel.hpp"

namespace evofam {

inline Matrix frozen_semigroup(const OperatorFamily& f, double t, double s) {
  if (!(t >= 0.0 && t <= f.tau())) throw invalid_argument("frozen_semigroup: t outside [0, tau]");
  if (!(s >= 0.0)) throw invalid_argument("frozen_semigroup: s must be nonnegative");
  return expm(f.at(t), -s);
}

using Complex = std::complex<double>;

/// Rectangle Re λ ∈ [r0, R], Im λ ∈ [−R, R], n_re × n_im samples. Re λ is
/// log-spaced above r0 so the neighbourhood of the boundary line is resolved.
inline std::vector<Complex> half_plane_lambda_grid(double r0, double R, int n_re, int n_im) {
  if (!(r0 >= 0.0) || !(R > r0) || n_re < 2 || n_im < 2) throw invalid_argument("half_plane_lambda_grid: bad parameters");
  std::vector<double> re{r0};
  if (n_re > 1) {
    const double lo = std::max(1e-3, r0 + 1e-3);
    for (double v : log_spaced(lo, R, n_re - 1)) re.push_back(std::max(v, r0));
  }
  std::vector<double> im = linspace(-R, R, n_im % 2 == 1 ? n_im : n_im + 1);  // always include Im λ = 0
  std::vector<Complex> out;
  for (double a : re)
    for (double b : im) out.emplace_back(a, b);
  return out;
}

struct ResolventCell {
  double t;
  Complex lambda;
  double resolvent_norm;  // ‖(λ + A(t))^{−1}‖
  double bound_value;     // (1 + |λ|) ‖(λ + A(t))^{−1}‖
};

struct ResolventScanReport {
  double r0 = 0.0;
  std::vector<double> t_grid;
  std::vector<Complex> lambda_samples;
  std::vector<ResolventCell> cells;  // t-major order
  std::vector<double> per_t;         // max bound per t
  double M0 = 0.0;
  bool violation = false;
  double violation_t = 0.0;
  Complex violation_lambda{0.0, 0.0};

  csv::Table table() const {
    csv::Table tab({"t", "re_lambda", "im_lambda", "bound_value"});
    for (const auto& c : cells) tab.add({c.t, c.lambda.real(), c.lambda.imag(), c.bound_value});
    return tab;
  }
};

inline ResolventScanReport resolvent_scan(const OperatorFamily& f, const std::vector<double>& t_grid,
                                          const std::vector<Complex>& lambdas) {
  if (t_grid.empty() || lambdas.empty()) throw invalid_argument("resolvent_scan: empty grid");
  ResolventScanReport rep;
  rep.t_grid = t_grid;
  rep.lambda_samples = lambdas;
  rep.r0 = std::numeric_limits<double>::infinity();
  for (const auto& l : lambdas) rep.r0 = std::min(rep.r0, l.real());
  if (rep.r0 < 0.0) throw invalid_argument("resolvent_scan: lambda samples must satisfy Re lambda >= 0");
  std::vector<Matrix> frozen;
  for (double t : t_grid) frozen.push_back(f.at(t));
  const std::size_t nl = lambdas.size();
  rep.cells = parallel_map<ResolventCell>(t_grid.size() * nl, [&](std::size_t idx) {
    const std::size_t it = idx / nl;
    const Complex lam = lambdas[idx % nl];
    const Vector sv = singular_values(complex_shift_embedding(frozen[it], lam));
    const double smin = sv(sv.size() - 1), smax = sv(0);
    ResolventCell c{t_grid[it], lam, 0.0, 0.0};
    if (!(smin > 1e-13 * std::max(1.0, smax))) {
      c.resolvent_norm = std::numeric_limits<double>::infinity();
    } else {
      c.resolvent_norm = 1.0 / smin;
    }
    c.bound_value = (1.0 + std::abs(lam)) * c.resolvent_norm;
    return c;
  });
  rep.per_t.assign(t_grid.size(), 0.0);
  for (std::size_t idx = 0; idx < rep.cells.size(); ++idx) {
    const auto& c = rep.cells[idx];
    if (!std::isfinite(c.bound_value) && !rep.violation) {
      rep.violation = true;
      rep.violation_t = c.t;
      rep.violation_lambda = c.lambda;
    }
    rep.per_t[idx / nl] = std::max(rep.per_t[idx / nl], c.bound_value);
    rep.M0 = std::max(rep.M0, c.bound_value);
  }
  return rep;
}

/// Smallest r0 ≥ 0 with sym(A(t) + r0 I) ⪰ 0 on the sampled t grid, plus `margin`
/// when a shift is needed.
inline double required_shift(const OperatorFamily& f, const std::vector<double>& t_grid, double margin = 0.0) {
  double lo = std::numeric_limits<double>::infinity();
  for (double t : t_grid) {
    const Matrix s = symmetric_part(f.at(t));
    lo = std::min(lo, Eigen::SelfAdjointEigenSolver<Matrix>(s, Eigen::EigenvaluesOnly).eigenvalues()(0));
  }
  return lo >= 0.0 ? 0.0 : -lo + margin;
}

/// Applies the half-plane normalisation A ↦ A + r0 I when the sampled
/// symmetric parts are not positive semidefinite; the shift is recorded on
/// the returned family.
inline OperatorFamily normalize_to_half_plane(const OperatorFamily& f, double margin = 1.0) {
  const double r0 = required_shift(f, linspace(0.0, f.tau(), 65), margin);
  return r0 > 0.0 ? f.shifted(r0) : f;
}

struct AnalyticBoundReport {
  double c_semigroup = 0.0;   // sup ‖e^{−sA(t)}‖
  double c_derivative = 0.0;  // sup s ‖A(t) e^{−sA(t)}‖
  double c_graph = 0.0;       // sup s ‖(I + A_ref) e^{−sA(t)}‖
  std::vector<double> t_grid;
  std::vector<double> s_grid;
  std::vector<double> per_t_semigroup;
  std::vector<double> per_t_derivative;
  std::vector<double> per_t_graph;
};

inline AnalyticBoundReport analytic_bounds(const OperatorFamily& f, const std::vector<double>& t_grid,
                                           const std::vector<double>& s_grid) {
  if (t_grid.empty() || s_grid.empty()) throw invalid_argument("analytic_bounds: empty grid");
  for (double s : s_grid) {
    if (!(s > 0.0 && s <= f.tau() * (1 + 1e-12))) throw invalid_argument("analytic_bounds: s grid must lie in (0, tau]");
  }
  AnalyticBoundReport rep;
  rep.t_grid = t_grid;
  rep.s_grid = s_grid;
  struct Row {
    double semi = 0, deriv = 0, graph = 0;
  };
  const Matrix& graph = f.dnorm().graph();
  const std::vector<Row> rows = parallel_map<Row>(t_grid.size(), [&](std::size_t i) {
    const Matrix a = f.at(t_grid[i]);
    Row r;
    r.semi = 1.0;  // limit s → 0+
    for (double s : s_grid) {
      const Matrix e = expm(a, -s);
      r.semi = std::max(r.semi, op_norm2(e));
      r.deriv = std::max(r.deriv, s * op_norm2(a * e));
      r.graph = std::max(r.graph, s * op_norm2(graph * e));
    }
    return r;
  });
  for (const Row& r : rows) {
    rep.per_t_semigroup.push_back(r.semi);
    rep.per_t_derivative.push_back(r.deriv);
    rep.per_t_graph.push_back(r.graph);
    rep.c_semigroup = std::max(rep.c_semigroup, r.semi);
    rep.c_derivative = std::max(rep.c_derivative, r.deriv);
    rep.c_graph = std::max(rep.c_graph, r.graph);
  }
  return rep;
}

inline AnalyticBoundReport analytic_bounds(const OperatorFamily& f, int n_t = 17, int n_s = 121) {
  return analytic_bounds(f, linspace(0.0, f.tau(), n_t), log_spaced(1e-6 * f.tau(), f.tau(), n_s));
}

/// With u(t) = e^{λt}x and f(t) = (λ + A)x e^{λt}, returns
/// max over a time grid on [0, horizon] of ‖u̇ + Au − f‖ (complex, analytic u̇).
inline double resolvent_construction_oracle(const Matrix& a, Complex lambda, const Vector& x, double horizon = 1.0,
                                            int samples = 257) {
  require_square_finite(a, "resolvent_construction_oracle");
  if (x.size() != a.rows()) throw invalid_argument("resolvent_construction_oracle: dimension mismatch");
  using CVec = Eigen::VectorXcd;
  const Eigen::MatrixXcd ac = a.cast<Complex>();
  const CVec xc = x.cast<Complex>();
  const CVec fx = lambda * xc + ac * xc;  // (λ + A)x
  double worst = 0.0;
  for (double t : linspace(0.0, horizon, samples)) {
    const Complex e = std::exp(lambda * t);
    const CVec u = e * xc;
    const CVec du = lambda * e * xc;
    const CVec ft = e * fx;
    worst = std::max(worst, (du + ac * u - ft).norm());
  }
  return worst;
}

}  // namespace evofam
