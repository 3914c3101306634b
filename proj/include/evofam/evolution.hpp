#pragma once

// Evolution family U(t_j, t_i) on a time grid by three independent routes:
//   reference       RK4 on U̇ = −A(t)U with Richardson at the observed order,
//   frozen-product  ∏ e^{−h_k A(t_k)},
//   duhamel-picard  fixed point of U = e^{−(·−s)A(s)} + ∫ e^{−(·−r)A(s)}(A(s)−A(r))U dr.

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <random>
#include <set>
#include <vector>

#include "evofam/csv.hpp"
#include "evofam/norms.hpp"
#include "evofam/operator_family.hpp"
#include "evofam/parallel.hpp"

namespace evofam {

enum class Method { reference, frozen_product, duhamel_picard };

inline const char* to_string(Method m) {
  switch (m) {
    case Method::reference: return "ode-reference";
    case Method::frozen_product: return "frozen-product";
    case Method::duhamel_picard: return "duhamel-picard";
  }
  return "?";
}

inline Method parse_method(const std::string& s) {
  if (s == "reference" || s == "ode-reference") return Method::reference;
  if (s == "frozen-product" || s == "frozen_product" || s == "product") return Method::frozen_product;
  if (s == "duhamel-picard" || s == "duhamel_picard" || s == "picard") return Method::duhamel_picard;
  throw invalid_argument("unknown method '" + s + "'");
}

struct EvolutionOptions {
  /// RK4 substeps per grid cell for the coarsest reference pass (the table uses
  /// four times as many). 0 picks the smallest count with h_sub·sup‖A‖ ≤ max_step_norm.
  int substeps = 0;
  double max_step_norm = 0.5;
  /// Anchor node indices whose columns U(·, t_i) are precomputed. Picard
  /// tables exist only for these anchors. Index 0 is always included.
  std::vector<int> anchors;
  int max_iter = 400;
  double tol = 1e-12;
  /// Product methods: estimate the discretisation error (costs one extra pass).
  bool estimate_tolerance = true;
};

class EvolutionTable {
 public:
  EvolutionTable(TimeGrid grid, Method method) : grid_(std::move(grid)), method_(method) {}

  const TimeGrid& grid() const { return grid_; }
  Method method() const { return method_; }
  Index dim() const { return dim_; }
  double tolerance() const { return tolerance_; }
  double bound() const { return bound_; }
  int iterations() const { return iterations_; }
  double final_defect() const { return final_defect_; }
  std::vector<int> anchors() const {
    std::vector<int> out;
    for (const auto& kv : columns_) out.push_back(kv.first);
    return out;
  }
  bool has_anchor(int i) const { return columns_.count(i) > 0; }
  bool has_steps() const { return !steps_.empty(); }

  /// U(t_j, t_i) for j ≥ i.
  Matrix at(int j, int i) const {
    if (i < 0 || j > grid_.steps() || j < i) throw invalid_argument("EvolutionTable::at: need 0 <= i <= j <= N");
    if (i == j) return Matrix::Identity(dim_, dim_);
    auto it = columns_.find(i);
    if (it != columns_.end()) return it->second[j - i];
    if (steps_.empty()) {
      throw invalid_argument("EvolutionTable::at: anchor " + std::to_string(i) + " not available for " +
                             to_string(method_));
    }
    Matrix u = steps_[i];
    for (int k = i + 1; k < j; ++k) u = steps_[k] * u;
    return u;
  }

  /// One-cell propagator U(t_{k+1}, t_k).
  const Matrix& step(int k) const {
    if (steps_.empty()) throw invalid_argument("EvolutionTable::step: table has no step propagators");
    return steps_.at(k);
  }

  const std::vector<Matrix>& column(int i) const {
    auto it = columns_.find(i);
    if (it == columns_.end()) throw invalid_argument("EvolutionTable::column: anchor " + std::to_string(i) + " missing");
    return it->second;
  }

  /// `t, norm_U_t_s` for anchor i.
  csv::Table norm_table(int i) const {
    csv::Table tab({"t", "norm_U_t_s"});
    const auto& col = column(i);
    for (std::size_t k = 0; k < col.size(); ++k) tab.add({grid_.node(i + static_cast<int>(k)), op_norm2(col[k])});
    return tab;
  }

  // Construction interface used by the builders below.
  void set_steps(std::vector<Matrix> steps) { steps_ = std::move(steps); }
  void set_column(int i, std::vector<Matrix> col) {
    dim_ = col.front().rows();
    for (const Matrix& m : col) bound_ = std::max(bound_, op_norm2(m));
    columns_[i] = std::move(col);
  }
  void set_tolerance(double t) { tolerance_ = t; }
  void set_iterations(int it, double defect) {
    iterations_ = std::max(iterations_, it);
    final_defect_ = std::max(final_defect_, defect);
  }

 private:
  TimeGrid grid_;
  Method method_;
  Index dim_ = 0;
  std::vector<Matrix> steps_;
  std::map<int, std::vector<Matrix>> columns_;  // columns_[i][j-i] = U(t_j, t_i)
  double tolerance_ = 0.0;
  double bound_ = 1.0;
  int iterations_ = 0;
  double final_defect_ = 0.0;
};

namespace detail {

inline std::vector<int> anchor_set(const TimeGrid& grid, const std::vector<int>& requested) {
  std::set<int> s{0};
  for (int i : requested) {
    if (i < 0 || i >= grid.steps()) throw invalid_argument("evolution: anchor index " + std::to_string(i) + " out of range");
    s.insert(i);
  }
  return {s.begin(), s.end()};
}

/// Columns U(t_j, t_i), j ≥ i, from one-cell propagators.
inline std::vector<Matrix> column_from_steps(const std::vector<Matrix>& steps, int i) {
  const Index n = steps.front().rows();
  std::vector<Matrix> col;
  col.reserve(steps.size() - i + 1);
  col.push_back(Matrix::Identity(n, n));
  for (std::size_t k = i; k < steps.size(); ++k) col.push_back(steps[k] * col.back());
  return col;
}

/// Composite classical RK4 map of U̇ = −A(t)U across [t0, t1] with `sub` substeps.
inline Matrix rk4_cell(const OperatorFamily& f, double t0, double t1, int sub) {
  const Index n = f.dim();
  const Matrix id = Matrix::Identity(n, n);
  const double h = (t1 - t0) / sub;
  Matrix phi = id;
  Matrix a_lo = f.at(t0);
  for (int k = 0; k < sub; ++k) {
    const double t = t0 + k * h;
    const double t_hi = k + 1 == sub ? t1 : t + h;
    const Matrix a_mid = f.at(t + 0.5 * h);
    const Matrix a_hi = f.at(t_hi);
    const Matrix k1 = -a_lo;
    const Matrix k2 = -a_mid * (id + 0.5 * h * k1);
    const Matrix k3 = -a_mid * (id + 0.5 * h * k2);
    const Matrix k4 = -a_hi * (id + h * k3);
    phi = (id + (h / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4)) * phi;
    a_lo = a_hi;
  }
  return phi;
}

inline double table_gap(const std::vector<Matrix>& a, const std::vector<Matrix>& b) {
  double gap = 0.0;
  for (std::size_t k = 0; k < std::min(a.size(), b.size()); ++k) gap = std::max(gap, op_norm2(a[k] - b[k]));
  return gap;
}

/// Floating-point floor for a table built from N products.
inline double roundoff_floor(int steps, double bound) {
  return steps * 8.0 * std::numeric_limits<double>::epsilon() * std::max(1.0, bound) * std::max(1.0, bound);
}

/// e^{−(t_j − t_i)A} for j ≥ i, composed from one-cell exponentials (reused when the grid is uniform).
inline std::vector<Matrix> frozen_column(const Matrix& a, const TimeGrid& grid, int i) {
  const Index n = a.rows();
  std::vector<Matrix> col;
  col.reserve(grid.steps() - i + 1);
  col.push_back(Matrix::Identity(n, n));
  Matrix cell;
  double cell_h = -1.0;
  for (int k = i; k < grid.steps(); ++k) {
    const double h = grid.step(k);
    if (h != cell_h) {
      cell = expm(a, -h);
      cell_h = h;
    }
    col.push_back(cell * col.back());
  }
  return col;
}

}  // namespace detail

inline int reference_substeps(const OperatorFamily& f, const TimeGrid& grid, const EvolutionOptions& opt) {
  const double limit = opt.max_step_norm * (1.0 - 1e-12);
  if (opt.substeps > 0) {
    const double h_sub = grid.max_step() / (2.0 * opt.substeps);
    if (h_sub * f.sup_norm() > opt.max_step_norm) {
      throw numerical_error("propagate_reference: step-size violation, h*sup|A| = " +
                            std::to_string(h_sub * f.sup_norm()) + " exceeds " + std::to_string(opt.max_step_norm) +
                            "; refine the grid or raise substeps");
    }
    return opt.substeps;
  }
  return std::max(1, static_cast<int>(std::ceil(grid.max_step() * f.sup_norm() / limit)));
}

inline EvolutionTable propagate_reference(const OperatorFamily& f, const TimeGrid& grid,
                                          const EvolutionOptions& opt = {}) {
  if (grid.start() < 0.0 || grid.end() > f.tau() * (1 + 1e-12)) throw invalid_argument("propagate_reference: grid outside [0, tau]");
  const int sub = reference_substeps(f, grid, opt);
  const int n_cells = grid.steps();
  auto pass = [&](int substeps) {
    return parallel_map<Matrix>(n_cells, [&](std::size_t k) {
      return detail::rk4_cell(f, grid.node(static_cast<int>(k)), grid.node(static_cast<int>(k) + 1), substeps);
    });
  };
  const int table_sub = opt.estimate_tolerance ? 4 * sub : 2 * sub;
  std::vector<Matrix> fine = pass(table_sub);
  EvolutionTable table(grid, Method::reference);
  for (int i : detail::anchor_set(grid, opt.anchors)) table.set_column(i, detail::column_from_steps(fine, i));
  const double floor = detail::roundoff_floor(n_cells, table.bound());
  double tol = 0.0;
  if (opt.estimate_tolerance) {
    // Richardson with the observed order q from substep counts sub, 2 sub, 4 sub.
    // Kinks of A(·) pull q below the nominal 4, so q is measured, clamped to [1, 4].
    const std::vector<Matrix> c0 = detail::column_from_steps(fine, 0);
    const std::vector<Matrix> c1 = detail::column_from_steps(pass(2 * sub), 0);
    const std::vector<Matrix> c2 = detail::column_from_steps(pass(sub), 0);
    const double g_fine = detail::table_gap(c0, c1), g_coarse = detail::table_gap(c1, c2);
    double q = 1.0;
    if (g_fine > floor && g_coarse > g_fine) q = std::clamp(std::log2(g_coarse / g_fine), 1.0, 4.0);
    tol = 2.0 * g_fine / (std::pow(2.0, q) - 1.0);  // doubled as a safety margin
  }
  table.set_tolerance(std::max(tol, floor));
  table.set_steps(std::move(fine));
  return table;
}

inline std::vector<Matrix> frozen_product_steps(const OperatorFamily& f, const TimeGrid& grid) {
  return parallel_map<Matrix>(grid.steps(), [&](std::size_t k) {
    return expm(f.at(grid.node(static_cast<int>(k))), -grid.step(static_cast<int>(k)));
  });
}

inline EvolutionTable propagate_frozen_product(const OperatorFamily& f, const TimeGrid& grid,
                                               const EvolutionOptions& opt = {}) {
  if (grid.start() < 0.0 || grid.end() > f.tau() * (1 + 1e-12)) throw invalid_argument("propagate_frozen_product: grid outside [0, tau]");
  std::vector<Matrix> steps = frozen_product_steps(f, grid);
  EvolutionTable table(grid, Method::frozen_product);
  for (int i : detail::anchor_set(grid, opt.anchors)) table.set_column(i, detail::column_from_steps(steps, i));
  double tol = 0.0;
  if (opt.estimate_tolerance) {
    // First order: error(h) ≈ 2 (U_h − U_{h/2}); doubled again as a safety margin.
    const std::vector<Matrix> half = frozen_product_steps(f, grid.refined());
    std::vector<Matrix> paired;
    paired.reserve(steps.size());
    for (std::size_t k = 0; k < steps.size(); ++k) paired.push_back(half[2 * k + 1] * half[2 * k]);
    tol = 4.0 * detail::table_gap(detail::column_from_steps(steps, 0), detail::column_from_steps(paired, 0));
  }
  table.set_tolerance(std::max(tol, detail::roundoff_floor(grid.steps(), table.bound())));
  table.set_steps(std::move(steps));
  return table;
}

struct PicardColumn {
  std::vector<Matrix> values;  // V(t_j), j = i..N
  int iterations = 0;
  double defect = 0.0;
};

/// Picard iteration for the anchor t_i on the grid nodes from i onward.
inline PicardColumn picard_column(const OperatorFamily& f, const TimeGrid& grid, int i, int max_iter, double tol) {
  if (!(tol > 0.0)) throw invalid_argument("duhamel_picard: tol must be positive");
  if (max_iter < 1) throw invalid_argument("duhamel_picard: max_iter must be positive");
  const int m = grid.steps() - i;
  const Matrix as = f.at(grid.node(i));
  const std::vector<Matrix> e0 = detail::frozen_column(as, grid, i);  // e^{−(t_j − s)A(s)}
  std::vector<Matrix> cell(m);                                         // e^{−h_k A(s)}
  {
    double cell_h = -1.0;
    Matrix c;
    for (int k = 0; k < m; ++k) {
      const double h = grid.step(i + k);
      if (h != cell_h) {
        c = expm(as, -h);
        cell_h = h;
      }
      cell[k] = c;
    }
  }
  std::vector<Matrix> diff(m + 1);  // A(s) − A(t_j)
  for (int k = 0; k <= m; ++k) diff[k] = as - f.at(grid.node(i + k));
  // First cell: A(s) − A(r) may behave like (r − s)^α, which the trapezoid rule
  // resolves poorly. Product Gauss rule on geometrically graded pieces of [s, s + h],
  // V linear across the cell: ∫ e^{−(h−r)A(s)}(A(s)−A(s+r))V dr = P0 V(s) + P1 V(s+h).
  Matrix p0 = Matrix::Zero(as.rows(), as.cols()), p1 = p0;
  {
    static constexpr double gx[4] = {-0.8611363115940526, -0.3399810435848563, 0.3399810435848563, 0.8611363115940526};
    static constexpr double gw[4] = {0.3478548451374538, 0.6521451548625461, 0.6521451548625461, 0.3478548451374538};
    const double h = grid.step(i), s = grid.node(i);
    constexpr int pieces = 12;
    for (int q = 0; q < pieces; ++q) {
      const double lo = q == 0 ? 0.0 : h * std::ldexp(1.0, q - pieces), hi = h * std::ldexp(1.0, q + 1 - pieces);
      for (int g = 0; g < 4; ++g) {
        const double r = 0.5 * (lo + hi) + 0.5 * (hi - lo) * gx[g], w = 0.5 * (hi - lo) * gw[g], xi = r / h;
        const Matrix ed = expm(as, -(h - r)) * (as - f.at(s + r));
        p0 += (w * (1.0 - xi)) * ed;
        p1 += (w * xi) * ed;
      }
    }
  }

  PicardColumn out;
  out.values = e0;
  std::vector<Matrix> next(m + 1);
  for (int it = 1; it <= max_iter; ++it) {
    Matrix acc = Matrix::Zero(as.rows(), as.cols());  // I_0 = 0
    next[0] = e0[0];
    Matrix g_prev = diff[0] * out.values[0];
    double defect = (next[0] - out.values[0]).cwiseAbs().maxCoeff();
    for (int k = 0; k < m; ++k) {
      const double h = grid.step(i + k);
      const Matrix g_next = diff[k + 1] * out.values[k + 1];
      if (k == 0) {
        acc = p0 * out.values[0] + p1 * out.values[1];
      } else {
        acc = cell[k] * (acc + (0.5 * h) * g_prev) + (0.5 * h) * g_next;
      }
      next[k + 1] = e0[k + 1] + acc;
      defect = std::max(defect, op_norm2(next[k + 1] - out.values[k + 1]));
      g_prev = g_next;
    }
    std::swap(out.values, next);
    out.iterations = it;
    out.defect = defect;
    if (!std::isfinite(defect)) break;
    if (defect <= tol) return out;
  }
  throw NonConvergence("duhamel_picard: no convergence after " + std::to_string(out.iterations) +
                           " iterations at anchor t = " + std::to_string(grid.node(i)) + " (last defect " +
                           std::to_string(out.defect) +
                           "); subdivide [s, tau] and compose the pieces with the cocycle law",
                       out.iterations, out.defect);
}

inline EvolutionTable duhamel_picard(const OperatorFamily& f, const TimeGrid& grid, const EvolutionOptions& opt = {}) {
  if (grid.start() < 0.0 || grid.end() > f.tau() * (1 + 1e-12)) throw invalid_argument("duhamel_picard: grid outside [0, tau]");
  const std::vector<int> anchors = detail::anchor_set(grid, opt.anchors);
  struct Result {
    PicardColumn col;
    double gap = 0.0;
  };
  std::vector<Result> results = parallel_map<Result>(anchors.size(), [&](std::size_t a) {
    const int i = anchors[a];
    Result r;
    r.col = picard_column(f, grid, i, opt.max_iter, opt.tol);
    if (opt.estimate_tolerance && grid.steps() - i >= 2) {
      // Same iteration on every other node (last node kept); compare at shared nodes.
      std::vector<double> nodes;
      std::vector<int> fine_index;
      for (int j = i; j <= grid.steps(); j += 2) {
        nodes.push_back(grid.node(j));
        fine_index.push_back(j - i);
      }
      if (fine_index.back() != grid.steps() - i) {
        nodes.push_back(grid.end());
        fine_index.push_back(grid.steps() - i);
      }
      const TimeGrid coarse(nodes);
      const PicardColumn c = picard_column(f, coarse, 0, opt.max_iter, opt.tol);
      for (std::size_t q = 0; q < fine_index.size(); ++q) {
        r.gap = std::max(r.gap, op_norm2(r.col.values[fine_index[q]] - c.values[q]));
      }
    }
    return r;
  });
  EvolutionTable table(grid, Method::duhamel_picard);
  double tol = 0.0;
  for (std::size_t a = 0; a < anchors.size(); ++a) {
    table.set_iterations(results[a].col.iterations, results[a].col.defect);
    tol = std::max(tol, results[a].gap + results[a].col.defect);
    table.set_column(anchors[a], std::move(results[a].col.values));
  }
  table.set_tolerance(std::max(tol, detail::roundoff_floor(grid.steps(), table.bound())));
  return table;
}

inline EvolutionTable propagate(const OperatorFamily& f, const TimeGrid& grid, Method method,
                                const EvolutionOptions& opt = {}) {
  switch (method) {
    case Method::reference: return propagate_reference(f, grid, opt);
    case Method::frozen_product: return propagate_frozen_product(f, grid, opt);
    case Method::duhamel_picard: return duhamel_picard(f, grid, opt);
  }
  throw invalid_argument("propagate: unknown method");
}

// ---------------------------------------------------------------------------
// Diagnostics on tables

struct Triple {
  int i, k, j;
};

/// Seeded triples i ≤ k ≤ j. With a non-empty anchor list, i and k are drawn
/// from it (Picard tables only know anchored columns).
inline std::vector<Triple> random_triples(const TimeGrid& grid, int count, std::uint64_t seed,
                                          const std::vector<int>& anchors = {}) {
  std::mt19937_64 gen(seed);
  std::vector<Triple> out;
  const int n = grid.steps();
  while (static_cast<int>(out.size()) < count) {
    int a, b, c;
    if (anchors.empty()) {
      std::uniform_int_distribution<int> d(0, n);
      a = d(gen);
      b = d(gen);
      c = d(gen);
      int v[3] = {a, b, c};
      std::sort(v, v + 3);
      out.push_back({v[0], v[1], v[2]});
    } else {
      std::uniform_int_distribution<int> pick(0, static_cast<int>(anchors.size()) - 1);
      a = anchors[pick(gen)];
      b = anchors[pick(gen)];
      if (a > b) std::swap(a, b);
      std::uniform_int_distribution<int> d(b, n);
      c = d(gen);
      out.push_back({a, b, c});
    }
  }
  return out;
}

/// max ‖U(t_j,t_i) − U(t_j,t_k)U(t_k,t_i)‖₂ over the triples.
inline double cocycle_defect(const EvolutionTable& table, const std::vector<Triple>& triples) {
  const std::vector<double> d = parallel_map<double>(triples.size(), [&](std::size_t q) {
    const Triple& t = triples[q];
    return op_norm2(table.at(t.j, t.i) - table.at(t.j, t.k) * table.at(t.k, t.i));
  });
  double worst = 0.0;
  for (double v : d) worst = std::max(worst, v);
  return worst;
}

/// max_j ‖U_a(t_j,t_i) − U_b(t_j,t_i)‖₂ over the anchored column i.
inline double table_difference(const EvolutionTable& a, const EvolutionTable& b, int i = 0) {
  double gap = 0.0;
  for (int j = i; j <= a.grid().steps(); ++j) gap = std::max(gap, op_norm2(a.at(j, i) - b.at(j, i)));
  return gap;
}

/// Per-node ‖U_a(t_j,t_i) − U_b(t_j,t_i)‖₂.
inline std::vector<double> table_difference_profile(const EvolutionTable& a, const EvolutionTable& b, int i = 0) {
  std::vector<double> out;
  for (int j = i; j <= a.grid().steps(); ++j) out.push_back(op_norm2(a.at(j, i) - b.at(j, i)));
  return out;
}

/// Canonical basis followed by 32 seeded random unit vectors.
inline std::vector<Vector> deviation_samples(Index dim, std::uint64_t seed = 42, int random = 32) {
  return sample_unit_vectors(dim, random, seed, true);
}

/// Deviation trajectories d_x(t_j) = U(t_j,s)x − e^{−(t_j−s)A(s)}x on the
/// nodes from anchor i, measured in MR_p(s,τ). One value per sample vector.
inline std::vector<double> deviation_mr_norms(const OperatorFamily& f, const EvolutionTable& table, int i, double p,
                                              const std::vector<Vector>& xs, MRForm form = MRForm::sum) {
  const TimeGrid& grid = table.grid();
  if (i < 0 || i >= grid.steps()) throw invalid_argument("deviation_mr_norms: anchor out of range");
  const TimeGrid sub = grid.sub_grid(i, grid.steps());
  const std::vector<Matrix> e0 = detail::frozen_column(f.at(grid.node(i)), grid, i);
  std::vector<Matrix> dev(e0.size());
  for (std::size_t k = 0; k < e0.size(); ++k) dev[k] = table.at(i + static_cast<int>(k), i) - e0[k];
  return parallel_map<double>(xs.size(), [&](std::size_t q) {
    Trajectory d(f.dim(), sub.size());
    for (std::size_t k = 0; k < dev.size(); ++k) d.at(static_cast<int>(k)) = dev[k] * xs[q];
    return mr_norm(d, sub, p, f.dnorm(), form);
  });
}

inline double deviation_mr_norm(const OperatorFamily& f, const EvolutionTable& table, int i, double p,
                                std::uint64_t seed = 42) {
  const std::vector<double> v = deviation_mr_norms(f, table, i, p, deviation_samples(f.dim(), seed));
  return v.empty() ? 0.0 : *std::max_element(v.begin(), v.end());
}

struct VocSolution {
  Trajectory u;
  double residual = 0.0;  // max_j ‖D_h u + A(t_j)u − f‖ / max(1, max_j ‖f‖ + ‖A u‖)
};

/// u(t_j) = U(t_j,0)x0 + ∫₀^{t_j} U(t_j,r) f(r) dr with the trapezoid rule,
/// accumulated as u_{j+1} = P_j u_j + (h_j/2)(P_j f_j + f_{j+1}).
template <typename Forcing>
VocSolution solve_inhomogeneous_voc(const OperatorFamily& f, const EvolutionTable& table, const Vector& x0,
                                    Forcing&& forcing) {
  const TimeGrid& grid = table.grid();
  if (x0.size() != f.dim()) throw invalid_argument("solve_inhomogeneous_voc: dimension mismatch");
  if (!table.has_steps()) throw invalid_argument("solve_inhomogeneous_voc: needs a product-method table");
  const int n = grid.steps();
  std::vector<Vector> fs(n + 1);
  for (int j = 0; j <= n; ++j) {
    fs[j] = forcing(grid.node(j));
    if (fs[j].size() != f.dim() || !fs[j].allFinite()) throw invalid_argument("solve_inhomogeneous_voc: bad forcing sample");
  }
  VocSolution out;
  out.u = Trajectory(f.dim(), grid.size());
  out.u.at(0) = x0;
  for (int j = 0; j < n; ++j) {
    const Matrix& p = table.step(j);
    const double h = grid.step(j);
    out.u.at(j + 1) = p * (out.u.at(j) + (0.5 * h) * fs[j]) + (0.5 * h) * fs[j + 1];
  }
  const Trajectory du = time_derivative(out.u, grid);
  double worst = 0.0, scale = 1.0;
  for (int j = 0; j <= n; ++j) {
    const Vector au = f.at(grid.node(j)) * out.u.at(j);
    worst = std::max(worst, (du.at(j) + au - fs[j]).norm());
    scale = std::max(scale, fs[j].norm() + au.norm());
  }
  out.residual = worst / scale;
  return out;
}

struct HomogeneousMREstimate {
  double m_emp = 0.0;
  double residual = 0.0;  // relative residual of v̇ + A v − U(·,0)x
};

/// sup over sample x of ‖t ↦ t U(t,0)x‖_{MR_q(0,τ)}.
inline HomogeneousMREstimate homogeneous_mr_estimate(const OperatorFamily& f, const EvolutionTable& table, double q,
                                                     const std::vector<Vector>& xs) {
  const TimeGrid& grid = table.grid();
  if (grid.start() != 0.0) throw invalid_argument("homogeneous_mr_estimate: grid must start at 0");
  struct R {
    double norm, res;
  };
  const std::vector<R> rs = parallel_map<R>(xs.size(), [&](std::size_t k) {
    Trajectory v(f.dim(), grid.size());
    Trajectory ux(f.dim(), grid.size());
    for (int j = 0; j <= grid.steps(); ++j) {
      ux.at(j) = table.at(j, 0) * xs[k];
      v.at(j) = grid.node(j) * ux.at(j);
    }
    const Trajectory dv = time_derivative(v, grid);
    double worst = 0.0, scale = 1e-300;
    for (int j = 0; j <= grid.steps(); ++j) {
      const Vector av = f.at(grid.node(j)) * v.at(j);
      worst = std::max(worst, (dv.at(j) + av - ux.at(j)).norm());
      scale = std::max(scale, ux.at(j).norm() + av.norm());
    }
    return R{mr_norm(v, grid, q, f.dnorm()), xs[k].norm() == 0.0 ? 0.0 : worst / scale};
  });
  HomogeneousMREstimate out;
  for (const R& r : rs) {
    out.m_emp = std::max(out.m_emp, r.norm);
    out.residual = std::max(out.residual, r.res);
  }
  return out;
}

/// `t, x_1, ..., x_n`.
inline csv::Table trajectory_table(const Trajectory& u, const TimeGrid& grid) {
  std::vector<std::string> header{"t"};
  for (Index i = 0; i < u.dim(); ++i) header.push_back("x_" + std::to_string(i + 1));
  csv::Table tab(header);
  for (int j = 0; j <= grid.steps(); ++j) {
    std::vector<csv::Cell> row{grid.node(j)};
    for (Index i = 0; i < u.dim(); ++i) row.emplace_back(u.states(i, j));
    tab.add(std::move(row));
  }
  return tab;
}

}  // namespace evofam
