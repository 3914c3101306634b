#pragma once

// u̇ + A(t)u = f on a grid, the empirical maximal-regularity constant
// c_emp = max over probes ‖u‖_{MR_p}/‖f‖_{L^p}, and the initial-value estimate.

#include <cmath>
#include <random>
#include <string>
#include <vector>

#include "evofam/csv.hpp"
#include "evofam/evolution.hpp"
#include "evofam/norms.hpp"
#include "evofam/operator_family.hpp"
#include "evofam/parallel.hpp"

namespace evofam {

/// Affine one-cell maps u_{j+1} = Φ_j u_j + P_j f_j + Q_j f_{j+1} of the RK4
/// stepper with f linear between nodes. Built once per (family, grid) and
/// reused for every forcing.
class MRSolver {
 public:
  MRSolver(const OperatorFamily& f, const TimeGrid& grid, int substeps = 0, double max_step_norm = 0.5)
      : family_(f), grid_(grid) {
    if (grid.start() < 0.0 || grid.end() > f.tau() * (1 + 1e-12)) throw invalid_argument("MRSolver: grid outside [0, tau]");
    const double limit = max_step_norm * (1.0 - 1e-12);
    if (substeps <= 0) {
      substeps = std::max(1, static_cast<int>(std::ceil(grid.max_step() * f.sup_norm() / limit)));
    } else if (grid.max_step() / substeps * f.sup_norm() > max_step_norm) {
      throw numerical_error("MRSolver: step-size violation, h*sup|A| = " +
                            std::to_string(grid.max_step() / substeps * f.sup_norm()));
    }
    substeps_ = substeps;
    cells_ = parallel_map<Cell>(grid.steps(), [&](std::size_t k) { return build_cell(static_cast<int>(k)); });
  }

  const TimeGrid& grid() const { return grid_; }
  const OperatorFamily& family() const { return family_; }
  int substeps() const { return substeps_; }

  /// Nodal samples f(t_j), j = first..N, and u(t_first) = x.
  Trajectory solve(const std::vector<Vector>& f, const Vector& x, int first = 0) const {
    const int n = grid_.steps();
    if (first < 0 || first >= n) throw invalid_argument("MRSolver::solve: bad start index");
    if (static_cast<int>(f.size()) != n - first + 1) throw invalid_argument("MRSolver::solve: forcing has wrong length");
    if (x.size() != family_.dim()) throw invalid_argument("MRSolver::solve: dimension mismatch");
    Trajectory u(family_.dim(), f.size());
    u.at(0) = x;
    for (int k = first; k < n; ++k) {
      const Cell& c = cells_[k];
      const int q = k - first;
      u.at(q + 1) = c.phi * u.at(q) + c.p * f[q] + c.q * f[q + 1];
    }
    return u;
  }

 private:
  struct Cell {
    Matrix phi, p, q;
  };
  struct Aff {
    Matrix u, a, b;  // state = u·x + a·f_j + b·f_{j+1}
  };

  Cell build_cell(int k) const {
    const Index n = family_.dim();
    const Matrix id = Matrix::Identity(n, n);
    const double t0 = grid_.node(k), t1 = grid_.node(k + 1), H = t1 - t0;
    const double h = H / substeps_;
    Aff s{id, Matrix::Zero(n, n), Matrix::Zero(n, n)};
    auto rhs = [&](double t, const Matrix& a, const Aff& y) {
      const double lam = (t - t0) / H;
      Aff k{-a * y.u, -a * y.a, -a * y.b};
      k.a.diagonal().array() += 1.0 - lam;
      k.b.diagonal().array() += lam;
      return k;
    };
    auto axpy = [](const Aff& y, double c, const Aff& k) { return Aff{y.u + c * k.u, y.a + c * k.a, y.b + c * k.b}; };
    Matrix a_lo = family_.at(t0);
    for (int m = 0; m < substeps_; ++m) {
      const double t = t0 + m * h;
      const double t_hi = m + 1 == substeps_ ? t1 : t + h;
      const Matrix a_mid = family_.at(t + 0.5 * h);
      const Matrix a_hi = family_.at(t_hi);
      const Aff k1 = rhs(t, a_lo, s);
      const Aff k2 = rhs(t + 0.5 * h, a_mid, axpy(s, 0.5 * h, k1));
      const Aff k3 = rhs(t + 0.5 * h, a_mid, axpy(s, 0.5 * h, k2));
      const Aff k4 = rhs(t_hi, a_hi, axpy(s, h, k3));
      s.u += (h / 6.0) * (k1.u + 2.0 * k2.u + 2.0 * k3.u + k4.u);
      s.a += (h / 6.0) * (k1.a + 2.0 * k2.a + 2.0 * k3.a + k4.a);
      s.b += (h / 6.0) * (k1.b + 2.0 * k2.b + 2.0 * k3.b + k4.b);
      a_lo = a_hi;
    }
    return Cell{s.u, s.a, s.b};
  }

  OperatorFamily family_;
  TimeGrid grid_;
  int substeps_ = 1;
  std::vector<Cell> cells_;
};

struct MRSolution {
  Trajectory u;
  TrajectoryNorms norms;
  TimeGrid grid;
};

inline std::vector<Vector> sample_forcing(const TimeGrid& grid, int first, const std::function<Vector(double)>& f) {
  std::vector<Vector> out;
  for (int j = first; j <= grid.steps(); ++j) out.push_back(f(grid.node(j)));
  return out;
}

inline MRSolution solve_with_initial(const MRSolver& solver, const std::vector<Vector>& f, const Vector& x,
                                     double p, int first = 0) {
  const TimeGrid sub = solver.grid().sub_grid(first, solver.grid().steps());
  Trajectory u = solver.solve(f, x, first);
  TrajectoryNorms n = trajectory_norms(u, sub, p, solver.family().dnorm());
  return MRSolution{std::move(u), n, sub};
}

inline MRSolution solve_zero_initial(const MRSolver& solver, const std::vector<Vector>& f, double p, int first = 0) {
  return solve_with_initial(solver, f, Vector::Zero(solver.family().dim()), p, first);
}

// ---------------------------------------------------------------------------
// Probe forcings. Probe k depends only on (k, seed, grid, eigenbasis), so a
// longer probe list extends a shorter one and c_emp is monotone in the count.

enum class ProbeKind { impulse, sinusoid, random_band };

inline const char* to_string(ProbeKind k) {
  switch (k) {
    case ProbeKind::impulse: return "impulse";
    case ProbeKind::sinusoid: return "sinusoid";
    case ProbeKind::random_band: return "random-band";
  }
  return "?";
}

inline ProbeKind probe_kind(int k) { return static_cast<ProbeKind>(k % 3); }

/// Nodal samples of probe k on the nodes of `sub`.
///  impulse:   hat of one unit at a seeded node along e_d (support two cells),
///  sinusoid:  cos(π ν (t−a)/(b−a)) along the ν-th eigenvector q_d of A_ref, ν ∈ {0,1,2,3},
///  random:    seeded Gaussian vector coefficients on cos/sin modes 0..4.
inline std::vector<Vector> probe_forcing(int k, std::uint64_t seed, const TimeGrid& sub, const DNorm& dnorm) {
  const Index n = dnorm.dim();
  const int m = sub.steps();
  const double a = sub.start(), b = sub.end();
  std::mt19937_64 gen(mix_seed(seed, static_cast<std::uint64_t>(k)));
  std::vector<Vector> f(sub.size(), Vector::Zero(n));
  const int r = k / 3;
  switch (probe_kind(k)) {
    case ProbeKind::impulse: {
      const Index d = r % n;
      const int node = std::uniform_int_distribution<int>(0, m)(gen);
      f[node](d) = 1.0;
      break;
    }
    case ProbeKind::sinusoid: {
      const Index d = r % n;
      const int nu = static_cast<int>((r / n) % 4);
      const Vector q = dnorm.spectrum().eigenvectors.col(d);
      for (int j = 0; j <= m; ++j) f[j] = std::cos(M_PI * nu * (sub.node(j) - a) / (b - a)) * q;
      break;
    }
    case ProbeKind::random_band: {
      std::normal_distribution<double> normal(0.0, 1.0);
      std::vector<Vector> cs, ss;
      for (int l = 0; l <= 4; ++l) {
        Vector c(n), s(n);
        for (Index i = 0; i < n; ++i) c(i) = normal(gen);
        for (Index i = 0; i < n; ++i) s(i) = normal(gen);
        cs.push_back(c);
        ss.push_back(s);
      }
      for (int j = 0; j <= m; ++j) {
        const double x = M_PI * (sub.node(j) - a) / (b - a);
        for (int l = 0; l <= 4; ++l) f[j] += std::cos(l * x) * cs[l] + std::sin(l * x) * ss[l];
      }
      break;
    }
  }
  return f;
}

struct MRReport {
  double c_emp = 0.0;
  int probes = 0;
  double p = 0.0;
  double a = 0.0, b = 0.0;
  int worst_probe = -1;
  std::vector<double> ratios;

  csv::Table table() const {
    csv::Table tab({"p", "a", "b", "c_emp", "n_probes", "worst_probe"});
    tab.add({p, a, b, c_emp, static_cast<long long>(probes), static_cast<long long>(worst_probe)});
    return tab;
  }
};

/// c_emp over probe forcings on [t_first, τ] with zero initial value.
inline MRReport mr_constant(const MRSolver& solver, double p, int n_probes, std::uint64_t seed, int first = 0) {
  if (n_probes < 8) throw invalid_argument("mr_constant: need at least 8 probes");
  require_p(p, "mr_constant");
  const TimeGrid sub = solver.grid().sub_grid(first, solver.grid().steps());
  const DNorm& dn = solver.family().dnorm();
  MRReport rep;
  rep.p = p;
  rep.a = sub.start();
  rep.b = sub.end();
  rep.probes = n_probes;
  rep.ratios = parallel_map<double>(n_probes, [&](std::size_t k) {
    const std::vector<Vector> f = probe_forcing(static_cast<int>(k), seed, sub, dn);
    Trajectory ft(dn.dim(), f.size());
    for (std::size_t j = 0; j < f.size(); ++j) ft.at(static_cast<int>(j)) = f[j];
    const double fn = lp_time_norm(ft, sub, p);
    if (fn == 0.0) return 0.0;
    return solve_zero_initial(solver, f, p, first).norms.mr / fn;
  });
  for (int k = 0; k < n_probes; ++k) {
    if (rep.worst_probe < 0 || rep.ratios[k] > rep.c_emp) {
      rep.c_emp = rep.ratios[k];
      rep.worst_probe = k;
    }
  }
  return rep;
}

inline MRReport mr_constant(const OperatorFamily& f, const TimeGrid& grid, double p, int n_probes, std::uint64_t seed) {
  return mr_constant(MRSolver(f, grid), p, n_probes, seed);
}

enum class Verdict { pass, pass_degenerate, fail };

inline const char* to_string(Verdict v) {
  switch (v) {
    case Verdict::pass: return "pass";
    case Verdict::pass_degenerate: return "pass-degenerate";
    case Verdict::fail: return "fail";
  }
  return "?";
}

struct InitialValueCheck {
  Verdict verdict = Verdict::pass;
  double lhs = 0.0;  // ‖u‖_{MR_p}
  double rhs = 0.0;  // 2(c+1)(‖x‖_{Tr_p} + ‖f‖_{L^p})
  double slack = 0.0;
  double trace = 0.0;
  double f_norm = 0.0;
};

/// Solves u̇ + Au = f, u(a) = x and tests ‖u‖_{MR_p} ≤ 2(c+1)(‖x‖_{Tr_p} + ‖f‖_{L^p}).
inline InitialValueCheck check_initial_value_estimate(const MRSolver& solver, double p, const Vector& x,
                                                      const std::vector<Vector>& f, double c) {
  if (!(c >= 0.0)) throw invalid_argument("check_initial_value_estimate: c must be nonnegative");
  const MRSolution sol = solve_with_initial(solver, f, x, p);
  Trajectory ft(x.size(), f.size());
  for (std::size_t j = 0; j < f.size(); ++j) ft.at(static_cast<int>(j)) = f[j];
  InitialValueCheck out;
  out.lhs = sol.norms.mr;
  out.trace = trace_norm(x, p, solver.family().dnorm()).value;
  out.f_norm = lp_time_norm(ft, sol.grid, p);
  out.rhs = 2.0 * (c + 1.0) * (out.trace + out.f_norm);
  if (out.rhs == 0.0) {
    out.verdict = out.lhs == 0.0 ? Verdict::pass_degenerate : Verdict::fail;
    out.slack = out.lhs == 0.0 ? 0.0 : std::numeric_limits<double>::infinity();
  } else {
    out.slack = out.lhs / out.rhs;
    out.verdict = out.lhs <= out.rhs ? Verdict::pass : Verdict::fail;
  }
  return out;
}

}  // namespace evofam
