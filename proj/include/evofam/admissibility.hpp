#pragma once

// θ-admissibility constants γ of an observation operator C for frozen
// semigroups and for the evolution family, the two-sided equivalence check,
// and the Hölder-chain estimate.

#include <cmath>
#include <limits>
#include <optional>
#include <random>
#include <string>
#include <vector>

#include "evofam/csv.hpp"
#include "evofam/evolution.hpp"
#include "evofam/maximal_regularity.hpp"
#include "evofam/modulus.hpp"
#include "evofam/parallel.hpp"

namespace evofam {

struct ObservationOp {
  Matrix C;
  Index y_dim = 0;
  double norm_C_DY = 0.0;  // ‖C (I + A_ref)^{−1}‖₂
};

inline ObservationOp make_observation(const Matrix& c, const DNorm& dnorm) {
  if (c.cols() != dnorm.dim() || c.rows() < 1) throw invalid_argument("make_observation: C has wrong shape");
  if (!c.allFinite()) throw invalid_argument("make_observation: C has non-finite entries");
  return ObservationOp{c, c.rows(), dnorm.operator_norm_from_D(c)};
}

struct AdmissibilityReport {
  double theta = 2.0;
  double s = 0.0;
  double horizon = 0.0;
  double gamma = 0.0;        // exact (Gramian) or certified lower bound (ascent)
  double gamma_upper = 0.0;  // analytic envelope; equals gamma on the Gramian path
  std::string method;        // "gramian" | "ascent"
  Vector witness_x;
  int samples = 0;  // quadrature nodes
  int restarts = 0;

  /// J(x)^{1/θ} at the witness, recomputed from the maps (consistency probe).
  double attained = 0.0;
};

/// Maximisation of J(x) = Σ_j w_j ‖O_j x‖^θ on the unit sphere.
struct AscentOptions {
  int restarts = 16;
  int max_iter = 2000;
  double rel_tol = 1e-13;
  std::uint64_t seed = 42;
  bool force_ascent = false;
};

namespace detail {

inline double observation_functional(const std::vector<Matrix>& maps, const std::vector<double>& w, const Vector& x,
                                     double theta) {
  double acc = 0.0;
  for (std::size_t j = 0; j < maps.size(); ++j) {
    if (w[j] == 0.0) continue;
    acc += w[j] * std::pow((maps[j] * x).norm(), theta);
  }
  return acc;
}

/// Gradient power iteration x ← ∇J/‖∇J‖. J is convex and θ-homogeneous, so
/// J(x_{k+1}) ≥ J(x_k) along the iteration.
inline std::pair<double, Vector> sphere_ascent(const std::vector<Matrix>& maps, const std::vector<double>& w,
                                               double theta, const Vector& start, int max_iter, double rel_tol) {
  Vector x = start / start.norm();
  double j_old = observation_functional(maps, w, x, theta);
  for (int it = 0; it < max_iter; ++it) {
    Vector grad = Vector::Zero(x.size());
    for (std::size_t j = 0; j < maps.size(); ++j) {
      if (w[j] == 0.0) continue;
      const Vector y = maps[j] * x;
      const double ny = y.norm();
      if (ny == 0.0) continue;
      grad += (w[j] * theta * std::pow(ny, theta - 2.0)) * (maps[j].transpose() * y);
    }
    const double ng = grad.norm();
    if (ng == 0.0) break;
    const Vector y = grad / ng;
    const double j_new = observation_functional(maps, w, y, theta);
    if (j_new < j_old) break;  // round-off level; keep the better point
    x = y;
    const bool done = j_new - j_old <= rel_tol * std::max(j_new, 1e-300);
    j_old = j_new;
    if (done) break;
  }
  return {j_old, x};
}

/// Shared core for frozen and non-autonomous γ. `maps[j]` = C·Φ_j and
/// `graph_maps[j]` = (I + A_ref)Φ_j feed the upper envelope.
inline AdmissibilityReport gamma_core(const std::vector<Matrix>& maps, const std::vector<Matrix>& graph_maps,
                                      const std::vector<double>& w, double theta, double norm_c_dy,
                                      const AscentOptions& opt) {
  if (!(theta > 1.0) || !std::isfinite(theta)) throw invalid_argument("admissibility: theta must lie in (1, inf)");
  const Index n = maps.front().cols();
  AdmissibilityReport rep;
  rep.theta = theta;
  rep.samples = static_cast<int>(maps.size());
  double env_direct = 0.0, env_graph = 0.0;
  for (std::size_t j = 0; j < maps.size(); ++j) {
    env_direct += w[j] * std::pow(op_norm2(maps[j]), theta);
    if (!graph_maps.empty()) env_graph += w[j] * std::pow(op_norm2(graph_maps[j]), theta);
  }
  const double upper_direct = std::pow(env_direct, 1.0 / theta);
  const double upper_graph =
      graph_maps.empty() ? std::numeric_limits<double>::infinity() : norm_c_dy * std::pow(env_graph, 1.0 / theta);
  const double upper = std::min(upper_direct, upper_graph);

  if (theta == 2.0 && !opt.force_ascent) {
    Matrix g = Matrix::Zero(n, n);
    for (std::size_t j = 0; j < maps.size(); ++j) g += w[j] * (maps[j].transpose() * maps[j]);
    Eigen::SelfAdjointEigenSolver<Matrix> eig(symmetric_part(g));
    const double lmax = std::max(0.0, eig.eigenvalues()(n - 1));
    rep.gamma = std::sqrt(lmax);
    rep.gamma_upper = rep.gamma;
    rep.method = "gramian";
    rep.witness_x = eig.eigenvectors().col(n - 1);
  } else {
    struct Best {
      double j;
      Vector x;
    };
    const std::vector<Best> runs = parallel_map<Best>(opt.restarts, [&](std::size_t r) {
      std::mt19937_64 gen(mix_seed(opt.seed, r));
      std::normal_distribution<double> normal(0.0, 1.0);
      Vector x0(n);
      for (Index i = 0; i < n; ++i) x0(i) = normal(gen);
      if (x0.norm() == 0.0) x0 = Vector::Unit(n, 0);
      auto [j, x] = sphere_ascent(maps, w, theta, x0, opt.max_iter, opt.rel_tol);
      return Best{j, x};
    });
    std::size_t best = 0;
    for (std::size_t r = 1; r < runs.size(); ++r)
      if (runs[r].j > runs[best].j) best = r;
    rep.gamma = std::pow(std::max(0.0, runs[best].j), 1.0 / theta);
    rep.gamma_upper = std::max(upper, rep.gamma);
    rep.method = "ascent";
    rep.witness_x = runs[best].x;
    rep.restarts = opt.restarts;
  }
  rep.attained = std::pow(observation_functional(maps, w, rep.witness_x, theta), 1.0 / theta);
  return rep;
}

}  // namespace detail

/// γ = sup_{‖x‖=1} (Σ_j w_j ‖C e^{−t_j A} x‖^θ)^{1/θ} with the weights of
/// `grid` on [0, horizon].
inline AdmissibilityReport gamma_frozen(const Matrix& a, const ObservationOp& c, double theta, const TimeGrid& grid,
                                        const DNorm* dnorm = nullptr, const AscentOptions& opt = {}) {
  require_square_finite(a, "gamma_frozen");
  if (grid.start() != 0.0) throw invalid_argument("gamma_frozen: grid must start at 0");
  if (c.C.cols() != a.rows()) throw invalid_argument("gamma_frozen: C has wrong shape");
  const std::vector<Matrix> e = detail::frozen_column(a, grid, 0);
  std::vector<Matrix> maps, graph_maps;
  for (const Matrix& m : e) {
    maps.push_back(c.C * m);
    if (dnorm) graph_maps.push_back(dnorm->graph() * m);
  }
  AdmissibilityReport rep = detail::gamma_core(maps, graph_maps, grid.weights(), theta, c.norm_C_DY, opt);
  rep.horizon = grid.end();
  return rep;
}

inline AdmissibilityReport gamma_frozen(const Matrix& a, const ObservationOp& c, double horizon, double theta,
                                        int steps, const DNorm* dnorm = nullptr, const AscentOptions& opt = {}) {
  if (!(horizon > 0.0)) throw invalid_argument("gamma_frozen: horizon must be positive");
  return gamma_frozen(a, c, theta, TimeGrid::uniform(0.0, horizon, steps), dnorm, opt);
}

/// γ(s) = sup_{‖x‖=1} (Σ_j w_j ‖C U(t_j,s) x‖^θ)^{1/θ} over the table's nodes from anchor i.
inline AdmissibilityReport gamma_nonautonomous(const OperatorFamily& f, const ObservationOp& c, int i, double theta,
                                               const EvolutionTable& table, const AscentOptions& opt = {}) {
  const TimeGrid& grid = table.grid();
  if (i < 0 || i >= grid.steps()) throw invalid_argument("gamma_nonautonomous: anchor out of range");
  if (!table.has_anchor(i) && !table.has_steps()) throw invalid_argument("gamma_nonautonomous: table not anchored at s");
  const TimeGrid sub = grid.sub_grid(i, grid.steps());
  std::vector<Matrix> maps, graph_maps;
  for (int j = i; j <= grid.steps(); ++j) {
    const Matrix u = table.at(j, i);
    maps.push_back(c.C * u);
    graph_maps.push_back(f.dnorm().graph() * u);
  }
  AdmissibilityReport rep = detail::gamma_core(maps, graph_maps, sub.weights(), theta, c.norm_C_DY, opt);
  rep.s = grid.node(i);
  rep.horizon = grid.end() - grid.node(i);
  return rep;
}

/// `s, theta, gamma, method, horizon`
inline csv::Table gamma_table(const std::vector<AdmissibilityReport>& reps) {
  csv::Table tab({"s", "theta", "gamma", "method", "horizon"});
  for (const auto& r : reps) tab.add({r.s, r.theta, r.gamma, r.method, r.horizon});
  return tab;
}

// ---------------------------------------------------------------------------
// Equivalence of frozen and non-autonomous admissibility

struct EquivalenceRow {
  double s;
  int x_id;
  double lhs;
  double rhs;
  double slack_ratio;
  bool pass;
};

struct EquivalenceAnchor {
  double s = 0.0;
  int index = 0;
  AdmissibilityReport frozen;
  AdmissibilityReport nonautonomous;
  double dev_op = 0.0;  // bound on sup_x ‖U(·,s)x − e^{−(·−s)A(s)}x‖_{L^θ(s,τ;D)}
  double forward_op_lhs = 0.0, forward_op_rhs = 0.0;
  double reverse_op_lhs = 0.0, reverse_op_rhs = 0.0;
  bool forward_op_pass = false, reverse_op_pass = false;
};

struct EquivalenceReport {
  double theta = 2.0;
  double norm_C_DY = 0.0;
  std::vector<EquivalenceAnchor> anchors;
  std::vector<EquivalenceRow> forward;
  std::vector<EquivalenceRow> reverse;
  double sup_gamma_frozen = 0.0;
  double sup_gamma_nonautonomous = 0.0;
  std::optional<bool> dini_finite;  // hypothesis diagnostic when supplied
  bool outside_hypothesis = false;

  bool pass() const {
    for (const auto& r : forward)
      if (!r.pass) return false;
    for (const auto& r : reverse)
      if (!r.pass) return false;
    for (const auto& a : anchors)
      if (!a.forward_op_pass || !a.reverse_op_pass) return false;
    return true;
  }
  double worst_slack() const {
    double w = 0.0;
    for (const auto& r : forward) w = std::max(w, r.slack_ratio);
    for (const auto& r : reverse) w = std::max(w, r.slack_ratio);
    return w;
  }

  static csv::Table rows_table(const std::vector<EquivalenceRow>& rows) {
    csv::Table tab({"s", "x_id", "lhs", "rhs", "slack_ratio", "verdict"});
    for (const auto& r : rows)
      tab.add({r.s, static_cast<long long>(r.x_id), r.lhs, r.rhs, r.slack_ratio, std::string(r.pass ? "pass" : "fail")});
    return tab;
  }
};

struct EquivalenceOptions {
  int n_x = 64;
  std::uint64_t seed = 42;
  AscentOptions ascent{};
  std::optional<bool> dini_finite;
};

/// For every anchor and seeded unit x, both proof-chain bounds
///   Σ w‖CU x‖^θ ≤ 2^θ(‖C‖^θ_{𝓛(D,Y)} dev_x^θ + γ_frozen(s)^θ),
///   Σ w‖C e^{−(·−s)A(s)} x‖^θ ≤ 2^θ(‖C‖^θ_{𝓛(D,Y)} dev_x^θ + γ_nonaut(s)^θ),
/// with dev_x = (Σ w ‖(U(t_j,s) − e^{−(t_j−s)A(s)})x‖_D^θ)^{1/θ}, and the
/// operator-level versions with dev_x replaced by its supremum bound.
inline EquivalenceReport equivalence_experiment(const OperatorFamily& f, const ObservationOp& c, double theta,
                                                const EvolutionTable& table, const std::vector<int>& anchor_indices,
                                                const EquivalenceOptions& opt = {}) {
  if (!(theta > 1.0)) throw invalid_argument("equivalence_experiment: theta must lie in (1, inf)");
  const TimeGrid& grid = table.grid();
  EquivalenceReport rep;
  rep.theta = theta;
  rep.norm_C_DY = c.norm_C_DY;
  rep.dini_finite = opt.dini_finite;
  rep.outside_hypothesis = opt.dini_finite.has_value() && !*opt.dini_finite;
  const double two_t = std::pow(2.0, theta);
  const double c_t = std::pow(c.norm_C_DY, theta);
  const Matrix& graph = f.dnorm().graph();
  const std::vector<Vector> xs = sample_unit_vectors(f.dim(), opt.n_x, opt.seed, false);

  for (int i : anchor_indices) {
    if (i < 0 || i >= grid.steps()) throw invalid_argument("equivalence_experiment: anchor out of range");
    EquivalenceAnchor an;
    an.index = i;
    an.s = grid.node(i);
    const TimeGrid sub = grid.sub_grid(i, grid.steps());
    std::vector<double> shifted_nodes;
    for (double t : sub.nodes()) shifted_nodes.push_back(t - an.s);
    shifted_nodes.front() = 0.0;
    const TimeGrid local(shifted_nodes);
    const Matrix as = f.at(an.s);
    an.frozen = gamma_frozen(as, c, theta, local, &f.dnorm(), opt.ascent);
    an.frozen.s = an.s;
    an.nonautonomous = gamma_nonautonomous(f, c, i, theta, table, opt.ascent);
    const std::vector<Matrix> e0 = detail::frozen_column(as, grid, i);
    std::vector<Matrix> u(e0.size()), dev(e0.size());
    for (std::size_t k = 0; k < e0.size(); ++k) {
      u[k] = table.at(i + static_cast<int>(k), i);
      dev[k] = graph * (u[k] - e0[k]);
    }
    const std::vector<double>& w = sub.weights();
    // Operator-level deviation bound: exact for θ = 2, envelope otherwise.
    if (theta == 2.0) {
      Matrix gm = Matrix::Zero(f.dim(), f.dim());
      for (std::size_t k = 0; k < dev.size(); ++k) gm += w[k] * (dev[k].transpose() * dev[k]);
      an.dev_op = std::sqrt(std::max(0.0, Eigen::SelfAdjointEigenSolver<Matrix>(symmetric_part(gm), Eigen::EigenvaluesOnly)
                                              .eigenvalues()(f.dim() - 1)));
    } else {
      double acc = 0.0;
      for (std::size_t k = 0; k < dev.size(); ++k) acc += w[k] * std::pow(op_norm2(dev[k]), theta);
      an.dev_op = std::pow(acc, 1.0 / theta);
    }
    // RHS constants must be upper bounds: exact for the Gramian path, envelope for ascent.
    const double g_fr_up = an.frozen.gamma_upper, g_na_up = an.nonautonomous.gamma_upper;
    an.forward_op_lhs = std::pow(an.nonautonomous.gamma, theta);
    an.forward_op_rhs = two_t * (c_t * std::pow(an.dev_op, theta) + std::pow(g_fr_up, theta));
    an.forward_op_pass = an.forward_op_lhs <= an.forward_op_rhs;
    an.reverse_op_lhs = std::pow(an.frozen.gamma, theta);
    an.reverse_op_rhs = two_t * (c_t * std::pow(an.dev_op, theta) + std::pow(g_na_up, theta));
    an.reverse_op_pass = an.reverse_op_lhs <= an.reverse_op_rhs;

    struct Pair {
      EquivalenceRow fwd, rev;
    };
    const std::vector<Pair> pairs = parallel_map<Pair>(xs.size(), [&](std::size_t q) {
      const Vector& x = xs[q];
      double lhs_f = 0, lhs_r = 0, dev_x = 0;
      for (std::size_t k = 0; k < u.size(); ++k) {
        lhs_f += w[k] * std::pow((c.C * (u[k] * x)).norm(), theta);
        lhs_r += w[k] * std::pow((c.C * (e0[k] * x)).norm(), theta);
        dev_x += w[k] * std::pow((dev[k] * x).norm(), theta);
      }
      const double rhs_f = two_t * (c_t * dev_x + std::pow(g_fr_up, theta));
      const double rhs_r = two_t * (c_t * dev_x + std::pow(g_na_up, theta));
      auto row = [&](double l, double r) {
        const double ratio = r > 0 ? l / r : (l > 0 ? std::numeric_limits<double>::infinity() : 0.0);
        return EquivalenceRow{an.s, static_cast<int>(q), l, r, ratio, l <= r};
      };
      return Pair{row(lhs_f, rhs_f), row(lhs_r, rhs_r)};
    });
    for (const Pair& pr : pairs) {
      rep.forward.push_back(pr.fwd);
      rep.reverse.push_back(pr.rev);
    }
    rep.sup_gamma_frozen = std::max(rep.sup_gamma_frozen, an.frozen.gamma);
    rep.sup_gamma_nonautonomous = std::max(rep.sup_gamma_nonautonomous, an.nonautonomous.gamma);
    rep.anchors.push_back(std::move(an));
  }
  return rep;
}

// ---------------------------------------------------------------------------
// Hölder chain

struct HoelderChainRow {
  int x_id;
  double lhs;        // Σ w ‖C U(t,s)x‖^p
  double split;      // 2^p γ^p + 2^p Σ w ‖C ∫ e^{−(t−r)A(s)} g_x(r) dr‖^p
  double convolved;  // 2^p γ^p + 2^p k^p Σ w ‖g_x‖^p
  double bound;      // 2^p γ^p + 2^p k^p (L c_U)^p ∫ (r−s)^{−(1−α)p} dr
  bool pass;
};

struct HoelderChainReport {
  double alpha = 0.0;
  double p = 0.0;
  double s = 0.0;
  double gamma = 0.0;  // frozen admissibility constant at s over the horizon τ − s
  double k = 0.0;      // L^p norm of g ↦ C ∫ e^{−(t−r)A(s)} g(r) dr (probed, ×1.1)
  double L = 0.0;      // sup ‖(A(s) − A(r))(I + A_ref)^{−1}‖ / (r − s)^α
  double c_U = 0.0;    // sup (t − s)‖(I + A_ref) U(t,s)‖
  double singular_integral = 0.0;  // exact, +inf when p ≥ 1/(1−α)
  bool hypothesis_ok = true;       // p < 1/(1−α) (α = 1: always)
  std::vector<HoelderChainRow> rows;
  std::vector<double> divergence_sums;    // Σ_{j≥1} w_j (t_j − s)^{−(1−α)p} per halving of h
  std::vector<double> divergence_growth;  // consecutive ratios

  bool pass() const {
    if (!hypothesis_ok) return false;
    for (const auto& r : rows)
      if (!r.pass) return false;
    return true;
  }
};

struct HoelderOptions {
  int n_x = 64;
  std::uint64_t seed = 42;
  int n_probes = 24;
  double k_inflation = 1.1;
  int divergence_halvings = 4;
  int divergence_base_steps = 256;
};

/// ∫_s^τ (r − s)^{−e} dr, +inf for e ≥ 1.
inline double singular_integral_exact(double horizon, double e) {
  if (e >= 1.0) return std::numeric_limits<double>::infinity();
  return std::pow(horizon, 1.0 - e) / (1.0 - e);
}

/// Trapezoid sums Σ_{j≥1} w_j (t_j − s)^{−e} on uniform grids with N, 2N, 4N, … steps.
inline std::vector<double> singular_sum_refinement(double horizon, double e, int base_steps, int halvings) {
  std::vector<double> out;
  for (int k = 0; k <= halvings; ++k) {
    const int n = base_steps << k;
    const double h = horizon / n;
    double acc = 0.0;
    for (int j = 1; j <= n; ++j) acc += (j == n ? 0.5 : 1.0) * h * std::pow(j * h, -e);
    out.push_back(acc);
  }
  return out;
}

namespace detail {

/// z_j = ∫_s^{t_j} e^{−(t_j − r)A(s)} g(r) dr by the trapezoid recursion on `sub`.
inline std::vector<Vector> semigroup_convolution(const std::vector<Matrix>& cells, const TimeGrid& sub,
                                                 const std::vector<Vector>& g) {
  std::vector<Vector> z(g.size(), Vector::Zero(g.front().size()));
  for (int k = 0; k < sub.steps(); ++k) {
    const double h = sub.step(k);
    z[k + 1] = cells[k] * (z[k] + (0.5 * h) * g[k]) + (0.5 * h) * g[k + 1];
  }
  return z;
}

inline double lp_nodes(const std::vector<Vector>& v, const std::vector<double>& w, double p, const Matrix* c = nullptr) {
  double acc = 0.0;
  for (std::size_t j = 0; j < v.size(); ++j) acc += w[j] * std::pow(c ? (*c * v[j]).norm() : v[j].norm(), p);
  return acc;  // p-th power
}

}  // namespace detail

/// Evaluates the three-step chain for α-Hölder A(·) (α = 1: Lipschitz) at anchor i.
inline HoelderChainReport hoelder_chain_check(const OperatorFamily& f, const ObservationOp& c, double alpha, double p,
                                              const EvolutionTable& table, int i, const HoelderOptions& opt = {}) {
  if (!(alpha > 0.0 && alpha <= 1.0)) throw invalid_argument("hoelder_chain_check: alpha must lie in (0,1]");
  require_p(p, "hoelder_chain_check");
  const TimeGrid& grid = table.grid();
  if (i < 0 || i >= grid.steps()) throw invalid_argument("hoelder_chain_check: anchor out of range");
  HoelderChainReport rep;
  rep.alpha = alpha;
  rep.p = p;
  rep.s = grid.node(i);
  const double e = (1.0 - alpha) * p;
  const double horizon = grid.end() - rep.s;
  rep.hypothesis_ok = alpha == 1.0 || p < 1.0 / (1.0 - alpha);
  rep.singular_integral = singular_integral_exact(horizon, e);
  rep.divergence_sums = singular_sum_refinement(horizon, e, opt.divergence_base_steps, opt.divergence_halvings);
  for (std::size_t k = 0; k + 1 < rep.divergence_sums.size(); ++k)
    rep.divergence_growth.push_back(rep.divergence_sums[k + 1] / rep.divergence_sums[k]);

  const TimeGrid sub = grid.sub_grid(i, grid.steps());
  const std::vector<double>& w = sub.weights();
  const int m = sub.steps();
  const Matrix as = f.at(rep.s);
  const Matrix& graph = f.dnorm().graph();
  const Matrix& ginv = f.dnorm().graph_inverse();
  std::vector<Matrix> cells(m);
  for (int k = 0; k < m; ++k) cells[k] = expm(as, -sub.step(k));
  std::vector<Matrix> u(m + 1), diff(m + 1);
  for (int k = 0; k <= m; ++k) {
    u[k] = table.at(i + k, i);
    diff[k] = as - f.at(sub.node(k));
  }
  for (int k = 1; k <= m; ++k) {
    const double r = sub.node(k) - rep.s;
    rep.L = std::max(rep.L, op_norm2(diff[k] * ginv) / std::pow(r, alpha));
    rep.c_U = std::max(rep.c_U, r * op_norm2(graph * u[k]));
  }

  // Frozen γ at s over the same nodes shifted to start at 0.
  {
    std::vector<double> local;
    for (double t : sub.nodes()) local.push_back(t - rep.s);
    local.front() = 0.0;
    AscentOptions ao;
    ao.seed = opt.seed;
    rep.gamma = gamma_frozen(as, c, p, TimeGrid(local), &f.dnorm(), ao).gamma_upper;
  }

  const std::vector<Vector> xs = sample_unit_vectors(f.dim(), opt.n_x, opt.seed, false);
  std::vector<std::vector<Vector>> gs(xs.size());
  for (std::size_t q = 0; q < xs.size(); ++q) {
    gs[q].resize(m + 1);
    for (int k = 0; k <= m; ++k) gs[q][k] = diff[k] * (u[k] * xs[q]);
  }

  // k: largest ratio ‖C z_g‖_{L^p}/‖g‖_{L^p} over the standard probes and the chain's own g_x.
  const std::size_t n_probe = static_cast<std::size_t>(opt.n_probes);
  const std::vector<double> ratios = parallel_map<double>(n_probe + xs.size(), [&](std::size_t q) {
    const std::vector<Vector> g = q < n_probe ? probe_forcing(static_cast<int>(q), opt.seed, sub, f.dnorm())
                                              : gs[q - n_probe];
    const double gn = detail::lp_nodes(g, w, p);
    if (gn == 0.0) return 0.0;
    const std::vector<Vector> z = detail::semigroup_convolution(cells, sub, g);
    return std::pow(detail::lp_nodes(z, w, p, &c.C) / gn, 1.0 / p);
  });
  for (double r : ratios) rep.k = std::max(rep.k, r);
  rep.k *= opt.k_inflation;

  const double two_p = std::pow(2.0, p);
  const double gam = two_p * std::pow(rep.gamma, p);
  const double kp = std::pow(rep.k, p);
  const double bound = gam + two_p * kp * std::pow(rep.L * rep.c_U, p) * rep.singular_integral;
  rep.rows = parallel_map<HoelderChainRow>(xs.size(), [&](std::size_t q) {
    std::vector<Vector> ux(m + 1);
    for (int k = 0; k <= m; ++k) ux[k] = u[k] * xs[q];
    const double lhs = detail::lp_nodes(ux, w, p, &c.C);
    const std::vector<Vector> z = detail::semigroup_convolution(cells, sub, gs[q]);
    const double split = gam + two_p * detail::lp_nodes(z, w, p, &c.C);
    const double conv = gam + two_p * kp * detail::lp_nodes(gs[q], w, p);
    const bool ok = lhs <= split && split <= conv && conv <= bound;
    return HoelderChainRow{static_cast<int>(q), lhs, split, conv, bound, ok};
  });
  return rep;
}

}  // namespace evofam
