#pragma once

// Finite-difference models on the unit interval / unit square with mixed
// Dirichlet (Γ0) and Neumann (Γ1) sides: a nondivergence elliptic family, the
// fractional family L + b(t)L^α and the boundary trace on Γ1.

#include <array>
#include <cmath>
#include <functional>
#include <map>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "evofam/admissibility.hpp"
#include "evofam/modulus.hpp"
#include "evofam/operator_family.hpp"
#include "evofam/semigroup.hpp"

namespace evofam {

enum class Side { left, right, bottom, top };
enum class Boundary { dirichlet, neumann };

inline Side parse_side(const std::string& s) {
  if (s == "left") return Side::left;
  if (s == "right") return Side::right;
  if (s == "bottom") return Side::bottom;
  if (s == "top") return Side::top;
  throw invalid_argument("unknown boundary side '" + s + "'");
}

inline const char* to_string(Side s) {
  switch (s) {
    case Side::left: return "left";
    case Side::right: return "right";
    case Side::bottom: return "bottom";
    case Side::top: return "top";
  }
  return "?";
}

/// Interior nodes of a uniform grid on [0,1]^dim, h = 1/(m+1) per direction.
/// Dirichlet sides contribute ghost value 0; Neumann sides reflect the
/// adjacent interior value (zero normal difference).
class GridDomain {
 public:
  GridDomain(int dim, int mx, int my, const std::vector<Side>& gamma0, const std::vector<Side>& gamma1)
      : dim_(dim), mx_(mx), my_(dim == 1 ? 1 : my) {
    if (dim != 1 && dim != 2) throw invalid_argument("GridDomain: dim must be 1 or 2");
    if (mx < 1 || (dim == 2 && my < 1)) throw invalid_argument("GridDomain: need at least one interior node per direction");
    std::vector<Side> all = dim == 1 ? std::vector<Side>{Side::left, Side::right}
                                     : std::vector<Side>{Side::left, Side::right, Side::bottom, Side::top};
    auto label = [&](const std::vector<Side>& sides, Boundary b) {
      for (Side s : sides) {
        if (std::find(all.begin(), all.end(), s) == all.end())
          throw invalid_argument(std::string("GridDomain: side '") + to_string(s) + "' does not exist in dim " + std::to_string(dim));
        if (labels_.count(s)) throw invalid_argument(std::string("GridDomain: side '") + to_string(s) + "' labelled twice");
        labels_[s] = b;
      }
    };
    label(gamma0, Boundary::dirichlet);
    label(gamma1, Boundary::neumann);
    for (Side s : all) {
      if (!labels_.count(s)) throw invalid_argument(std::string("GridDomain: side '") + to_string(s) + "' is unlabelled");
    }
    hx_ = 1.0 / (mx_ + 1);
    hy_ = dim == 2 ? 1.0 / (my_ + 1) : 1.0;
  }

  static GridDomain interval(int m, const std::vector<Side>& gamma0, const std::vector<Side>& gamma1) {
    return GridDomain(1, m, 1, gamma0, gamma1);
  }

  int dim() const { return dim_; }
  int mx() const { return mx_; }
  int my() const { return my_; }
  double hx() const { return hx_; }
  double hy() const { return hy_; }
  /// Area (2-D) or length (1-D) attributed to one interior node.
  double cell_volume() const { return hx_ * hy_; }
  Index size() const { return static_cast<Index>(mx_) * my_; }
  Index index(int i, int j = 0) const { return static_cast<Index>(j) * mx_ + i; }
  double x(int i) const { return (i + 1) * hx_; }
  double y(int j) const { return dim_ == 2 ? (j + 1) * hy_ : 0.0; }
  Boundary label(Side s) const { return labels_.at(s); }
  std::vector<Side> sides(Boundary b) const {
    std::vector<Side> out;
    for (const auto& kv : labels_)
      if (kv.second == b) out.push_back(kv.first);
    return out;
  }

  /// Ghost resolution of a neighbour index (i, j) that may lie one step
  /// outside the interior. Returns false for a Dirichlet ghost (value 0).
  bool resolve(int& i, int& j) const {
    if (i < 0) {
      if (label(Side::left) == Boundary::dirichlet) return false;
      i = 0;
    } else if (i >= mx_) {
      if (label(Side::right) == Boundary::dirichlet) return false;
      i = mx_ - 1;
    }
    if (dim_ == 2) {
      if (j < 0) {
        if (label(Side::bottom) == Boundary::dirichlet) return false;
        j = 0;
      } else if (j >= my_) {
        if (label(Side::top) == Boundary::dirichlet) return false;
        j = my_ - 1;
      }
    }
    return true;
  }

 private:
  int dim_;
  int mx_;
  int my_;
  double hx_ = 0.0, hy_ = 0.0;
  std::map<Side, Boundary> labels_;
};

/// Coefficients of −(a11 ∂xx + 2 a12 ∂xy + a22 ∂yy) − b0 as functions of (t, x, y).
struct EllipticCoefficients {
  std::function<double(double, double, double)> a11 = [](double, double, double) { return 1.0; };
  std::function<double(double, double, double)> a12 = [](double, double, double) { return 0.0; };
  std::function<double(double, double, double)> a22 = [](double, double, double) { return 1.0; };
  std::function<double(double, double, double)> b0 = [](double, double, double) { return 0.0; };
};

namespace detail {

inline void add_entry(const GridDomain& d, Matrix& m, Index row, int i, int j, double v) {
  if (d.resolve(i, j)) m(row, d.index(i, j)) += v;
}

inline Matrix assemble_elliptic(const GridDomain& d, const EllipticCoefficients& c, double t) {
  const Index n = d.size();
  Matrix m = Matrix::Zero(n, n);
  const double hx2 = d.hx() * d.hx(), hy2 = d.hy() * d.hy(), hxy = 4.0 * d.hx() * d.hy();
  for (int j = 0; j < d.my(); ++j) {
    for (int i = 0; i < d.mx(); ++i) {
      const double x = d.x(i), y = d.y(j);
      const Index row = d.index(i, j);
      const double a11 = c.a11(t, x, y);
      add_entry(d, m, row, i - 1, j, -a11 / hx2);
      add_entry(d, m, row, i, j, 2.0 * a11 / hx2);
      add_entry(d, m, row, i + 1, j, -a11 / hx2);
      if (d.dim() == 2) {
        const double a22 = c.a22(t, x, y), a12 = c.a12(t, x, y);
        add_entry(d, m, row, i, j - 1, -a22 / hy2);
        add_entry(d, m, row, i, j, 2.0 * a22 / hy2);
        add_entry(d, m, row, i, j + 1, -a22 / hy2);
        if (a12 != 0.0) {
          const double w = -2.0 * a12 / hxy;
          add_entry(d, m, row, i + 1, j + 1, w);
          add_entry(d, m, row, i - 1, j - 1, w);
          add_entry(d, m, row, i + 1, j - 1, -w);
          add_entry(d, m, row, i - 1, j + 1, -w);
        }
      }
      m(row, row) -= c.b0(t, x, y);
    }
  }
  return m;
}

}  // namespace detail

/// −Δ_h with the domain's boundary labels.
inline Matrix laplacian(const GridDomain& d) { return detail::assemble_elliptic(d, EllipticCoefficients{}, 0.0); }

/// Nondivergence elliptic family. Coefficients are sampled on 17 times × all
/// nodes for uniform ellipticity; when `omega_spec` is given the sampled
/// increments max |a_ij(t,·) − a_ij(s,·)| are checked against it. The family is
/// shifted into the closed right half-plane when its symmetric part is indefinite.
inline OperatorFamily elliptic_family(const GridDomain& domain, const EllipticCoefficients& coef, double tau = 1.0,
                                      std::function<double(double)> omega_spec = nullptr) {
  if (!(tau > 0.0)) throw invalid_argument("elliptic_family: tau must be positive");
  const std::vector<double> ts = linspace(0.0, tau, 17);
  double beta = std::numeric_limits<double>::infinity();
  std::vector<std::vector<std::array<double, 3>>> samples(ts.size());
  for (std::size_t k = 0; k < ts.size(); ++k) {
    for (int j = 0; j < domain.my(); ++j) {
      for (int i = 0; i < domain.mx(); ++i) {
        const double x = domain.x(i), y = domain.y(j);
        const double a11 = coef.a11(ts[k], x, y);
        const double a12 = domain.dim() == 2 ? coef.a12(ts[k], x, y) : 0.0;
        const double a22 = domain.dim() == 2 ? coef.a22(ts[k], x, y) : a11;
        const double b0 = coef.b0(ts[k], x, y);
        if (!std::isfinite(a11) || !std::isfinite(a12) || !std::isfinite(a22) || !std::isfinite(b0)) {
          throw invalid_argument("elliptic_family: non-finite coefficient");
        }
        const double tr = 0.5 * (a11 + a22);
        const double disc = std::sqrt(0.25 * (a11 - a22) * (a11 - a22) + a12 * a12);
        beta = std::min(beta, tr - disc);
        samples[k].push_back({a11, a12, a22});
      }
    }
  }
  if (!(beta > 0.0)) {
    throw Error(ErrorKind::hypothesis, "elliptic_family: coefficients are not uniformly elliptic (beta = " +
                                           std::to_string(beta) + ")");
  }
  if (omega_spec) {
    for (std::size_t k1 = 0; k1 < ts.size(); ++k1) {
      for (std::size_t k2 = k1 + 1; k2 < ts.size(); ++k2) {
        double worst = 0.0;
        for (std::size_t q = 0; q < samples[k1].size(); ++q)
          for (int e = 0; e < 3; ++e) worst = std::max(worst, std::abs(samples[k2][q][e] - samples[k1][q][e]));
        if (worst > omega_spec(ts[k2] - ts[k1]) * (1 + 1e-12) + 1e-14) {
          throw Error(ErrorKind::hypothesis, "elliptic_family: coefficient increment exceeds omega_spec at lag " +
                                                 std::to_string(ts[k2] - ts[k1]));
        }
      }
    }
  }
  OperatorFamily fam(
      tau, [domain, coef](double t) { return detail::assemble_elliptic(domain, coef, t); }, FamilyKind::pde_built,
      "elliptic");
  return normalize_to_half_plane(fam);
}

/// Options for fractional_family.
struct FractionalOptions {
  bool force = false;  // allow α ∈ [1/2, 1)
  bool run_hprime = true;
  std::vector<double> hprime_lags;  // default: 13 log-spaced lags in [1e−4 τ, τ]
};

/// A(t) = L + b(t) L^α with L = −Δ_h (Dirichlet on Γ0, Neumann on Γ1).
inline OperatorFamily fractional_family(const GridDomain& domain, double alpha, std::function<double(double)> b,
                                        double tau = 1.0, const FractionalOptions& opt = {}) {
  if (!(alpha > 0.0 && alpha < 1.0)) throw invalid_argument("fractional_family: alpha must lie in (0,1)");
  if (alpha >= 0.5 && !opt.force) {
    throw Error(ErrorKind::hypothesis, "fractional_family: alpha = " + std::to_string(alpha) +
                                           " is outside (0, 1/2); set the force flag to proceed");
  }
  if (!b) throw invalid_argument("fractional_family: missing b(t)");
  for (double t : linspace(0.0, tau, 65)) {
    const double v = b(t);
    if (!std::isfinite(v) || v < 0.0) throw invalid_argument("fractional_family: b(t) must be finite and nonnegative");
  }
  const Matrix l = laplacian(domain);
  if (domain.sides(Boundary::dirichlet).empty()) {
    throw invalid_argument("fractional_family: L is singular without a Dirichlet side");
  }
  const Matrix la = frac_power(l, alpha);
  OperatorFamily fam(
      tau, [l, la, b](double t) -> Matrix { return l + b(t) * la; }, FamilyKind::pde_built, "fractional");
  if (opt.run_hprime) {
    const std::vector<double> lags = opt.hprime_lags.empty() ? log_spaced(1e-4 * tau, tau, 13) : opt.hprime_lags;
    fam.hprime = hprime_check(fam, alpha, lags);
  }
  return fam;
}

/// Cu = (√σ_k u_k) over Γ1-adjacent interior nodes k, where σ_k is the length
/// of boundary attributed to the node (one per side in 1-D, the mesh width in 2-D).
/// States are L²-weighted coordinates x_k = √|cell| u_k, so C acts on x with an
/// extra 1/√|cell|; the matrices of L and A(t) are unchanged by that scaling.
inline ObservationOp boundary_trace(const GridDomain& d, const DNorm& dnorm) {
  const std::vector<Side> g1 = d.sides(Boundary::neumann);
  if (g1.empty()) throw invalid_argument("boundary_trace: Gamma_1 is empty");
  if (dnorm.dim() != d.size()) throw invalid_argument("boundary_trace: D-norm dimension mismatch");
  std::vector<std::pair<Index, double>> rows;
  for (Side s : g1) {
    if (d.dim() == 1) {
      rows.push_back({s == Side::left ? d.index(0) : d.index(d.mx() - 1), 1.0});
      continue;
    }
    const bool vertical = s == Side::left || s == Side::right;
    const int count = vertical ? d.my() : d.mx();
    const double sigma = 1.0 / count;
    for (int k = 0; k < count; ++k) {
      Index node;
      switch (s) {
        case Side::left: node = d.index(0, k); break;
        case Side::right: node = d.index(d.mx() - 1, k); break;
        case Side::bottom: node = d.index(k, 0); break;
        default: node = d.index(k, d.my() - 1); break;
      }
      rows.push_back({node, sigma});
    }
  }
  Matrix c = Matrix::Zero(static_cast<Index>(rows.size()), d.size());
  const double cell = d.cell_volume();
  for (std::size_t r = 0; r < rows.size(); ++r) c(static_cast<Index>(r), rows[r].first) = std::sqrt(rows[r].second / cell);
  return make_observation(c, dnorm);
}

// ---------------------------------------------------------------------------
// Text specs: key = value lines.

inline std::vector<Side> parse_side_list(const std::string& s) {
  std::vector<Side> out;
  std::stringstream ss(s);
  std::string item;
  while (std::getline(ss, item, ',')) {
    const auto b = item.find_first_not_of(" \t");
    if (b == std::string::npos) continue;
    const auto e = item.find_last_not_of(" \t");
    const std::string name = item.substr(b, e - b + 1);
    if (name == "none") continue;
    out.push_back(parse_side(name));
  }
  return out;
}

/// Keys: dim, m (1-D) or mx,my, gamma0_sides, gamma1_sides.
inline GridDomain domain_from_keys(const std::map<std::string, std::string>& kv) {
  auto get = [&](const std::string& k, const std::string& def) {
    auto it = kv.find(k);
    return it == kv.end() ? def : it->second;
  };
  auto to_int = [](const std::string& key, const std::string& v) {
    std::size_t used = 0;
    int out = 0;
    try {
      out = std::stoi(v, &used);
    } catch (const std::exception&) {
      used = 0;
    }
    if (used != v.size() || v.empty()) throw Error(ErrorKind::config, "domain: key '" + key + "' expects an integer");
    return out;
  };
  const int dim = to_int("dim", get("dim", "1"));
  int mx = 0, my = 1;
  if (dim == 1) {
    mx = to_int("m", get("m", get("mx", "16")));
  } else {
    const std::string m = get("m", "");
    mx = to_int("mx", get("mx", m.empty() ? "8" : m));
    my = to_int("my", get("my", m.empty() ? "8" : m));
  }
  const auto g0 = parse_side_list(get("gamma0_sides", "left"));
  const auto g1 = parse_side_list(get("gamma1_sides", dim == 1 ? "right" : "right,bottom,top"));
  return GridDomain(dim, mx, my, g0, g1);
}

}  // namespace evofam
