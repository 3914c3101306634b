#pragma once

// t ↦ A(t) on [0, τ] together with the D-norm it is measured in.

#include <cmath>
#include <filesystem>
#include <functional>
#include <map>
#include <optional>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "evofam/csv.hpp"
#include "evofam/dnorm.hpp"
#include "evofam/linalg.hpp"
#include "evofam/time_grid.hpp"

namespace evofam {

enum class FamilyKind { scalar_analytic, sampled_interpolated, pde_built, generic };

inline const char* to_string(FamilyKind k) {
  switch (k) {
    case FamilyKind::scalar_analytic: return "scalar-analytic";
    case FamilyKind::sampled_interpolated: return "sampled-interpolated";
    case FamilyKind::pde_built: return "pde-built";
    case FamilyKind::generic: return "generic";
  }
  return "?";
}

/// Output of hprime_check: |t−s|^α ‖(A(t)−A(s)) e^{−(t−s)A(s)}‖ sampled over pairs.
struct HPrimeReport {
  double alpha = 0.0;
  double c_fit = 0.0;
  std::vector<double> lags;
  std::vector<double> worst_ratio;  // per lag, max over start points
  bool stable = true;               // every sampled frozen A(s) has positive definite symmetric part
  double min_sym_eigenvalue = 0.0;
};

class OperatorFamily {
 public:
  using Eval = std::function<Matrix(double)>;

  /// `ref_op` defaults to the PSD part of sym A(0).
  OperatorFamily(double tau, Eval eval, FamilyKind kind, std::string label,
                 std::optional<Matrix> ref_op = std::nullopt)
      : tau_(tau), eval_(std::move(eval)), kind_(kind), label_(std::move(label)) {
    if (!(tau_ > 0.0) || !std::isfinite(tau_)) throw invalid_argument("OperatorFamily: tau must be positive");
    if (!eval_) throw invalid_argument("OperatorFamily: empty evaluator");
    const Matrix a0 = eval_(0.0);
    require_square_finite(a0, "OperatorFamily: A(0)");
    dim_ = a0.rows();
    ref_explicit_ = ref_op.has_value();
    dnorm_ = std::make_shared<const DNorm>(ref_op ? *ref_op : psd_part(a0));
    if (dnorm_->dim() != dim_) throw invalid_argument("OperatorFamily: reference operator has wrong dimension");
    survey();
  }

  double tau() const { return tau_; }
  Index dim() const { return dim_; }
  FamilyKind kind() const { return kind_; }
  const std::string& label() const { return label_; }
  const DNorm& dnorm() const { return *dnorm_; }
  DNormPtr dnorm_ptr() const { return dnorm_; }
  bool ref_explicit() const { return ref_explicit_; }

  /// Accumulated shift r0 from normalisation (A ↦ A + r0 I).
  double shift() const { return shift_; }
  /// Additive offset of a user-supplied modulus certificate; the estimator itself uses 0.
  double eta() const { return eta_; }
  void set_eta(double eta) {
    if (!(eta >= 0.0)) throw invalid_argument("OperatorFamily: eta must be nonnegative");
    eta_ = eta;
  }

  /// max over the survey grid of ‖A(t)‖₂.
  double sup_norm() const { return sup_norm_; }
  /// max over the survey grid of ‖A(t)‖_{𝓛(D,X)}.
  double sup_norm_D() const { return sup_norm_d_; }

  Matrix operator()(double t) const { return at(t); }

  Matrix at(double t) const {
    const double slack = 1e-12 * tau_;
    if (!(t >= -slack && t <= tau_ + slack)) {
      throw invalid_argument("OperatorFamily(" + label_ + "): t = " + std::to_string(t) + " outside [0, " +
                             std::to_string(tau_) + "]");
    }
    Matrix a = eval_(std::clamp(t, 0.0, tau_));
    if (a.rows() != dim_ || a.cols() != dim_) throw invalid_argument("OperatorFamily: evaluator changed dimension");
    if (!a.allFinite()) throw numerical_error("OperatorFamily(" + label_ + "): non-finite A(" + std::to_string(t) + ")");
    if (shift_ != 0.0) a.diagonal().array() += shift_;
    return a;
  }

  /// A + r0 I. The default reference operator is recomputed for the shifted
  /// family unless one was supplied explicitly.
  OperatorFamily shifted(double r0) const {
    if (!std::isfinite(r0)) throw invalid_argument("OperatorFamily::shifted: non-finite shift");
    OperatorFamily out = *this;
    out.shift_ = shift_ + r0;
    if (!ref_explicit_) out.dnorm_ = std::make_shared<const DNorm>(psd_part(out.at(0.0)));
    out.label_ = label_ + "+shift";
    out.survey();
    return out;
  }

  /// Same A(·) measured in another D-norm.
  OperatorFamily with_reference(const Matrix& ref_op) const {
    OperatorFamily out = *this;
    out.dnorm_ = std::make_shared<const DNorm>(ref_op);
    if (out.dnorm_->dim() != dim_) throw invalid_argument("with_reference: dimension mismatch");
    out.ref_explicit_ = true;
    out.survey();
    return out;
  }

  std::optional<HPrimeReport> hprime;

 private:
  void survey() {
    sup_norm_ = 0.0;
    sup_norm_d_ = 0.0;
    for (double t : linspace(0.0, tau_, 64)) {
      const Matrix a = at(t);
      sup_norm_ = std::max(sup_norm_, op_norm2(a));
      sup_norm_d_ = std::max(sup_norm_d_, dnorm_->operator_norm_from_D(a));
    }
    if (!std::isfinite(sup_norm_d_)) throw numerical_error("OperatorFamily: unbounded as a map into L(D,X)");
  }

  double tau_;
  Index dim_ = 0;
  Eval eval_;
  FamilyKind kind_;
  std::string label_;
  DNormPtr dnorm_;
  bool ref_explicit_ = false;
  double shift_ = 0.0;
  double eta_ = 0.0;
  double sup_norm_ = 0.0;
  double sup_norm_d_ = 0.0;
};

/// A(t) ≡ a0 + a1·t (matrix-valued).
inline OperatorFamily affine_family(double tau, const Matrix& a0, const Matrix& a1, std::string label = "affine") {
  require_square_finite(a0, "affine_family");
  if (a1.rows() != a0.rows() || a1.cols() != a0.cols()) throw invalid_argument("affine_family: shape mismatch");
  return OperatorFamily(tau, [a0, a1](double t) -> Matrix { return a0 + t * a1; }, FamilyKind::generic,
                        std::move(label));
}

inline OperatorFamily constant_family(double tau, const Matrix& a, std::string label = "constant") {
  require_square_finite(a, "constant_family");
  return OperatorFamily(tau, [a](double) { return a; }, FamilyKind::generic, std::move(label));
}

// ---------------------------------------------------------------------------
// Closed-form scalar families a(t)·I_n

struct ScalarSpec {
  std::string tag;
  std::map<std::string, double> params;
};

/// Parses "name" or "name(key=value, key=value)". "α" is accepted for "alpha".
inline ScalarSpec parse_scalar_spec(const std::string& text) {
  ScalarSpec spec;
  auto trim = [](std::string s) {
    const auto b = s.find_first_not_of(" \t");
    const auto e = s.find_last_not_of(" \t");
    return b == std::string::npos ? std::string() : s.substr(b, e - b + 1);
  };
  const auto open = text.find('(');
  spec.tag = trim(text.substr(0, open));
  if (spec.tag.empty()) throw invalid_argument("scalar family spec: missing tag in '" + text + "'");
  if (open == std::string::npos) return spec;
  const auto close = text.rfind(')');
  if (close == std::string::npos || close < open) throw invalid_argument("scalar family spec: unbalanced '(' in '" + text + "'");
  std::stringstream body(text.substr(open + 1, close - open - 1));
  std::string item;
  while (std::getline(body, item, ',')) {
    item = trim(item);
    if (item.empty()) continue;
    const auto eq = item.find('=');
    if (eq == std::string::npos) throw invalid_argument("scalar family spec: expected key=value, got '" + item + "'");
    std::string key = trim(item.substr(0, eq));
    if (key == "\xCE\xB1") key = "alpha";
    const std::string val = trim(item.substr(eq + 1));
    std::size_t used = 0;
    double v = 0;
    try {
      v = std::stod(val, &used);
    } catch (const std::exception&) {
      used = 0;
    }
    if (used != val.size() || val.empty()) throw invalid_argument("scalar family spec: bad value for '" + key + "'");
    spec.params[key] = v;
  }
  return spec;
}

/// Parameter names accepted by each scalar tag, `dim` included.
inline std::set<std::string> scalar_parameters(const std::string& tag) {
  if (tag == "zero") return {"dim"};
  if (tag == "constant") return {"dim", "a"};
  if (tag == "linear") return {"dim", "a0", "a1"};
  if (tag == "hoelder") return {"dim", "alpha", "a0", "amp"};
  if (tag == "jump") return {"dim", "a0", "a1", "at"};
  return {};
}

/// a(t) for the tags zero, constant(a), linear(a0,a1), hoelder(alpha,a0,amp),
/// jump(a0,a1,at). Unknown parameters are rejected; `extra` lists keys the
/// caller consumes itself.
inline std::function<double(double)> scalar_function(const ScalarSpec& spec, double tau,
                                                     const std::set<std::string>& extra = {}) {
  std::map<std::string, double> p = spec.params;
  for (const auto& k : extra) p.erase(k);
  auto take = [&](const std::string& key, double def) {
    auto it = p.find(key);
    if (it == p.end()) return def;
    const double v = it->second;
    p.erase(it);
    return v;
  };
  std::function<double(double)> a;
  if (spec.tag == "zero") {
    a = [](double) { return 0.0; };
  } else if (spec.tag == "constant") {
    const double c = take("a", 1.0);
    a = [c](double) { return c; };
  } else if (spec.tag == "linear") {
    const double a0 = take("a0", 1.0), a1 = take("a1", 1.0);
    a = [a0, a1](double t) { return a0 + a1 * t; };
  } else if (spec.tag == "hoelder") {
    const double alpha = take("alpha", 0.5), a0 = take("a0", 1.0), amp = take("amp", 1.0);
    if (!(alpha > 0.0 && alpha <= 1.0)) throw invalid_argument("scalar family hoelder: alpha must lie in (0,1]");
    a = [alpha, a0, amp](double t) { return a0 + amp * std::pow(t, alpha); };
  } else if (spec.tag == "jump") {
    const double a0 = take("a0", 1.0), a1 = take("a1", 2.0), at = take("at", 0.5 * tau);
    a = [a0, a1, at](double t) { return t < at ? a0 : a1; };
  } else {
    throw invalid_argument("scalar family: unknown tag '" + spec.tag + "'");
  }
  if (!p.empty()) throw invalid_argument("scalar family " + spec.tag + ": unknown parameter '" + p.begin()->first + "'");
  return a;
}

/// a(t)·I_dim for the tags of scalar_function; `dim` defaults to 1.
inline OperatorFamily build_scalar_family(const ScalarSpec& spec, double tau = 1.0) {
  const auto it = spec.params.find("dim");
  const double dim_d = it == spec.params.end() ? 1.0 : it->second;
  if (!(dim_d >= 1.0) || dim_d != std::floor(dim_d)) throw invalid_argument("scalar family: dim must be a positive integer");
  const Index n = static_cast<Index>(dim_d);
  const std::function<double(double)> a = scalar_function(spec, tau, {"dim"});
  return OperatorFamily(
      tau, [a, n](double t) -> Matrix { return a(t) * Matrix::Identity(n, n); }, FamilyKind::scalar_analytic,
      spec.tag);
}

inline OperatorFamily build_scalar_family(const std::string& text, double tau = 1.0) {
  return build_scalar_family(parse_scalar_spec(text), tau);
}

// ---------------------------------------------------------------------------
// Snapshot families, entrywise piecewise-linear in t

inline OperatorFamily build_sampled_family(std::vector<double> times, std::vector<Matrix> snaps,
                                           std::string label = "sampled") {
  if (times.size() != snaps.size()) throw invalid_argument("sampled family: times and snapshots differ in count");
  if (times.size() < 2) throw invalid_argument("sampled family: need at least two snapshots");
  if (times.front() != 0.0) throw invalid_argument("sampled family: first snapshot must be at t = 0");
  for (std::size_t i = 0; i < snaps.size(); ++i) {
    require_square_finite(snaps[i], "sampled family snapshot");
    if (snaps[i].rows() != snaps[0].rows()) throw invalid_argument("sampled family: inconsistent snapshot dimensions");
    if (i > 0 && !(times[i] > times[i - 1])) throw invalid_argument("sampled family: snapshot times must be strictly ascending");
  }
  const double tau = times.back();
  auto eval = [times = std::move(times), snaps = std::move(snaps)](double t) -> Matrix {
    auto it = std::upper_bound(times.begin(), times.end(), t);
    std::size_t k = it == times.begin() ? 0 : static_cast<std::size_t>(it - times.begin()) - 1;
    if (k + 1 >= times.size()) return snaps.back();
    const double w = (t - times[k]) / (times[k + 1] - times[k]);
    return (1.0 - w) * snaps[k] + w * snaps[k + 1];
  };
  return OperatorFamily(tau, std::move(eval), FamilyKind::sampled_interpolated, std::move(label));
}

/// Header `t, a_11, a_12, ..., a_nn`, rows ascending in t.
inline OperatorFamily load_snapshot_csv(const std::filesystem::path& path) {
  const csv::Parsed data = csv::read_numeric(path);
  const std::size_t cols = data.header.size();
  if (cols < 2 || data.header[0] != "t") throw invalid_argument(path.string() + ": header must start with 't'");
  const auto n = static_cast<Index>(std::llround(std::sqrt(static_cast<double>(cols - 1))));
  if (static_cast<std::size_t>(n * n) != cols - 1) throw invalid_argument(path.string() + ": entry count is not a square");
  for (Index i = 0; i < n; ++i) {
    for (Index j = 0; j < n; ++j) {
      const std::string want = "a_" + std::to_string(i + 1) + std::to_string(j + 1);
      const std::string want_sep = "a_" + std::to_string(i + 1) + "_" + std::to_string(j + 1);
      const std::string& got = data.header[1 + i * n + j];
      if (got != want && got != want_sep) throw invalid_argument(path.string() + ": expected column " + want + ", got " + got);
    }
  }
  std::vector<double> times;
  std::vector<Matrix> snaps;
  for (const auto& row : data.rows) {
    times.push_back(row[0]);
    Matrix m(n, n);
    for (Index i = 0; i < n; ++i)
      for (Index j = 0; j < n; ++j) m(i, j) = row[1 + i * n + j];
    snaps.push_back(std::move(m));
  }
  return build_sampled_family(std::move(times), std::move(snaps), path.filename().string());
}

inline void save_snapshot_csv(const std::filesystem::path& path, const std::vector<double>& times,
                              const std::vector<Matrix>& snaps) {
  if (times.empty() || times.size() != snaps.size()) throw invalid_argument("save_snapshot_csv: bad input");
  const Index n = snaps[0].rows();
  std::vector<std::string> header{"t"};
  for (Index i = 0; i < n; ++i)
    for (Index j = 0; j < n; ++j)
      header.push_back(n < 10 ? "a_" + std::to_string(i + 1) + std::to_string(j + 1)
                              : "a_" + std::to_string(i + 1) + "_" + std::to_string(j + 1));
  csv::Table table(header);
  for (std::size_t k = 0; k < times.size(); ++k) {
    std::vector<csv::Cell> row{times[k]};
    for (Index i = 0; i < n; ++i)
      for (Index j = 0; j < n; ++j) row.emplace_back(snaps[k](i, j));
    table.add(std::move(row));
  }
  table.write(path);
}

}  // namespace evofam
