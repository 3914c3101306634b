#pragma once

#include <cmath>
#include <optional>
#include <random>
#include <string>
#include <vector>

#include "evofam/linalg.hpp"

namespace evofam {

/// Partition s = t_0 < … < t_N = τ with composite trapezoid weights.
class TimeGrid {
 public:
  explicit TimeGrid(std::vector<double> nodes) : nodes_(std::move(nodes)) {
    if (nodes_.size() < 2) throw invalid_argument("TimeGrid: need at least two nodes");
    for (std::size_t j = 0; j < nodes_.size(); ++j) {
      if (!std::isfinite(nodes_[j])) throw invalid_argument("TimeGrid: non-finite node");
      if (j > 0 && !(nodes_[j] > nodes_[j - 1])) {
        throw invalid_argument("TimeGrid: nodes must be strictly increasing");
      }
    }
    weights_.assign(nodes_.size(), 0.0);
    for (std::size_t j = 0; j + 1 < nodes_.size(); ++j) {
      const double h = nodes_[j + 1] - nodes_[j];
      weights_[j] += 0.5 * h;
      weights_[j + 1] += 0.5 * h;
    }
    const double h0 = nodes_[1] - nodes_[0];
    uniform_ = true;
    for (std::size_t j = 1; j + 1 < nodes_.size(); ++j) {
      if (std::abs((nodes_[j + 1] - nodes_[j]) - h0) > 1e-12 * (end() - start())) uniform_ = false;
    }
  }

  static TimeGrid uniform(double s, double tau, int steps) {
    if (steps < 1) throw invalid_argument("TimeGrid::uniform: steps must be positive");
    if (!(tau > s)) throw invalid_argument("TimeGrid::uniform: require s < tau");
    std::vector<double> nodes(steps + 1);
    for (int j = 0; j <= steps; ++j) nodes[j] = s + (tau - s) * (static_cast<double>(j) / steps);
    nodes[steps] = tau;
    return TimeGrid(std::move(nodes));
  }

  /// Nodes clustered at s: t_j = s + (τ−s)(j/N)^grading.
  static TimeGrid graded(double s, double tau, int steps, double grading) {
    if (steps < 1 || !(grading >= 1.0)) throw invalid_argument("TimeGrid::graded: bad parameters");
    if (!(tau > s)) throw invalid_argument("TimeGrid::graded: require s < tau");
    std::vector<double> nodes(steps + 1);
    for (int j = 0; j <= steps; ++j) {
      nodes[j] = s + (tau - s) * std::pow(static_cast<double>(j) / steps, grading);
    }
    nodes[steps] = tau;
    return TimeGrid(std::move(nodes));
  }

  int steps() const { return static_cast<int>(nodes_.size()) - 1; }
  std::size_t size() const { return nodes_.size(); }
  double start() const { return nodes_.front(); }
  double end() const { return nodes_.back(); }
  double node(int j) const { return nodes_[j]; }
  double step(int j) const { return nodes_[j + 1] - nodes_[j]; }
  double weight(int j) const { return weights_[j]; }
  const std::vector<double>& nodes() const { return nodes_; }
  const std::vector<double>& weights() const { return weights_; }
  bool is_uniform() const { return uniform_; }

  double max_step() const {
    double h = 0.0;
    for (int j = 0; j < steps(); ++j) h = std::max(h, step(j));
    return h;
  }

  std::optional<int> index_of(double t) const {
    const double tol = 1e-12 * std::max(1.0, std::abs(end()) + std::abs(start()));
    for (std::size_t j = 0; j < nodes_.size(); ++j) {
      if (std::abs(nodes_[j] - t) <= tol) return static_cast<int>(j);
    }
    return std::nullopt;
  }

  int require_index(double t) const {
    if (auto j = index_of(t)) return *j;
    throw invalid_argument("TimeGrid: " + std::to_string(t) + " is not a grid node");
  }

  /// Nodes first..last inclusive.
  TimeGrid sub_grid(int first, int last) const {
    if (first < 0 || last > steps() || last <= first) throw invalid_argument("TimeGrid::sub_grid: bad range");
    return TimeGrid(std::vector<double>(nodes_.begin() + first, nodes_.begin() + last + 1));
  }

  /// Every other node; requires an even step count.
  TimeGrid coarsened() const {
    if (steps() % 2 != 0) throw invalid_argument("TimeGrid::coarsened: odd step count");
    std::vector<double> nodes;
    for (int j = 0; j <= steps(); j += 2) nodes.push_back(nodes_[j]);
    return TimeGrid(std::move(nodes));
  }

  /// Midpoints inserted.
  TimeGrid refined() const {
    std::vector<double> nodes;
    nodes.reserve(2 * nodes_.size() - 1);
    for (int j = 0; j < steps(); ++j) {
      nodes.push_back(nodes_[j]);
      nodes.push_back(0.5 * (nodes_[j] + nodes_[j + 1]));
    }
    nodes.push_back(end());
    return TimeGrid(std::move(nodes));
  }

  double weight_sum() const {
    double s = 0.0;
    for (double w : weights_) s += w;
    return s;
  }

 private:
  std::vector<double> nodes_;
  std::vector<double> weights_;
  bool uniform_ = true;
};

/// States sampled on grid nodes: column j is u(t_j).
struct Trajectory {
  Matrix states;

  Trajectory() = default;
  explicit Trajectory(Matrix s) : states(std::move(s)) {}
  Trajectory(Index dim, std::size_t nodes) : states(Matrix::Zero(dim, static_cast<Index>(nodes))) {}

  template <typename F>
  static Trajectory sample(const TimeGrid& grid, Index dim, F&& f) {
    Trajectory out(dim, grid.size());
    for (int j = 0; j <= grid.steps(); ++j) out.states.col(j) = f(grid.node(j));
    return out;
  }

  Index dim() const { return states.rows(); }
  std::size_t size() const { return static_cast<std::size_t>(states.cols()); }
  auto at(int j) { return states.col(j); }
  auto at(int j) const { return states.col(j); }
};

/// Log-spaced values lo..hi inclusive.
inline std::vector<double> log_spaced(double lo, double hi, int n) {
  if (!(lo > 0.0 && hi > lo) || n < 2) throw invalid_argument("log_spaced: need 0 < lo < hi and n >= 2");
  std::vector<double> out(n);
  const double a = std::log(lo), b = std::log(hi);
  for (int i = 0; i < n; ++i) out[i] = std::exp(a + (b - a) * i / (n - 1));
  out.front() = lo;
  out.back() = hi;
  return out;
}

inline std::vector<double> linspace(double lo, double hi, int n) {
  if (n < 2) return {lo};
  std::vector<double> out(n);
  for (int i = 0; i < n; ++i) out[i] = lo + (hi - lo) * i / (n - 1);
  out.back() = hi;
  return out;
}

/// Unit vectors used by every "sup over sampled unit x" estimate: the
/// canonical basis followed by `random` seeded Gaussian directions.
inline std::vector<Vector> sample_unit_vectors(Index dim, int random, std::uint64_t seed,
                                               bool include_basis = true) {
  std::vector<Vector> out;
  if (include_basis) {
    for (Index i = 0; i < dim; ++i) out.push_back(Vector::Unit(dim, i));
  }
  std::mt19937_64 gen(seed);
  std::normal_distribution<double> normal(0.0, 1.0);
  for (int k = 0; k < random; ++k) {
    Vector v(dim);
    for (Index i = 0; i < dim; ++i) v(i) = normal(gen);
    const double nv = v.norm();
    out.push_back(nv > 0 ? Vector(v / nv) : Vector(Vector::Unit(dim, 0)));
  }
  return out;
}

}  // namespace evofam
