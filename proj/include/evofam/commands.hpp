#pragma once

// Config-driven commands behind the evofam tool. Each returns an exit code
// and a one-line summary; files land in the output directory.

#include <cmath>
#include <filesystem>
#include <iostream>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include "evofam/admissibility.hpp"
#include "evofam/config.hpp"
#include "evofam/csv.hpp"
#include "evofam/evolution.hpp"
#include "evofam/maximal_regularity.hpp"
#include "evofam/modulus.hpp"
#include "evofam/pde_models.hpp"
#include "evofam/semigroup.hpp"

namespace evofam {

enum ExitCode : int { exit_pass = 0, exit_fail = 1, exit_config = 2, exit_numerical = 3, exit_hypothesis = 4 };

struct CommandResult {
  int code = exit_pass;
  std::string summary;
  std::vector<std::string> files;
};

struct CommandContext {
  Config cfg;
  std::filesystem::path out = ".";
  std::uint64_t seed = 42;
  bool dat = false;
  std::vector<std::string> written;

  void emit(const std::string& stem, const csv::Table& tab) {
    tab.write(out / (stem + ".csv"));
    written.push_back(stem + ".csv");
    if (dat) {
      csv::Table::write_text(out / (stem + ".dat"), tab.gnuplot());
      written.push_back(stem + ".dat");
    }
  }
};

inline int exit_code_for(ErrorKind k) {
  switch (k) {
    case ErrorKind::config:
    case ErrorKind::io:
    case ErrorKind::invalid_argument: return exit_config;
    case ErrorKind::numerical:
    case ErrorKind::non_convergence: return exit_numerical;
    case ErrorKind::hypothesis: return exit_hypothesis;
  }
  return exit_config;
}

namespace detail {

inline std::string fmt(double v) {
  std::ostringstream os;
  os.precision(6);
  os << v;
  return os.str();
}

inline std::string spec_from_section(const std::string& tag, const std::map<std::string, std::string>& kv) {
  std::string s = tag + "(";
  bool first = true;
  for (const auto& [k, v] : kv) {
    if (!first) s += ",";
    s += k + "=" + v;
    first = false;
  }
  return s + ")";
}

inline OperatorFamily random_spd_family(Index n, std::uint64_t seed, double lmin, double lmax, double drift, double tau) {
  if (n < 1) throw config_error("family.n must be positive");
  if (!(lmin > 0.0 && lmax >= lmin)) throw config_error("random_spd: need 0 < family.lmin <= family.lmax");
  std::mt19937_64 gen(seed);
  std::normal_distribution<double> nd;
  auto rotation = [&]() {
    Matrix g(n, n);
    for (Index j = 0; j < n; ++j)
      for (Index i = 0; i < n; ++i) g(i, j) = nd(gen);
    Eigen::HouseholderQR<Matrix> qr(g);
    return Matrix(qr.householderQ());
  };
  const std::vector<double> lam = n == 1 ? std::vector<double>{lmin} : log_spaced(lmin, lmax, static_cast<int>(n));
  Vector d(n);
  for (Index i = 0; i < n; ++i) d(i) = lam[static_cast<std::size_t>(i)];
  const Matrix q0 = rotation();
  const Matrix a0 = q0 * d.asDiagonal() * q0.transpose();
  const Matrix q1 = rotation();
  const Matrix a1 = drift * (q1 * d.asDiagonal() * q1.transpose());
  Matrix s0 = symmetric_part(a0), s1 = symmetric_part(a1);
  return affine_family(tau, s0, s1, "random_spd");
}

struct Built {
  OperatorFamily family;
  std::optional<GridDomain> domain;
};

inline GridDomain domain_from_config(const Config& cfg) {
  const auto kv = cfg.section("domain.");
  static const std::set<std::string> allowed = {"dim", "m", "mx", "my", "gamma0_sides", "gamma1_sides"};
  for (const auto& e : kv) {
    if (!allowed.count(e.first)) throw config_error("unknown config key 'domain." + e.first + "'");
  }
  if (cfg.has("domain.file")) throw config_error("unknown config key 'domain.file'");
  try {
    return domain_from_keys(kv);
  } catch (const Error& e) {
    if (e.kind() == ErrorKind::invalid_argument) throw config_error(std::string("domain: ") + e.what());
    throw;
  }
}

inline Built family_from_config(const Config& cfg, double tau, std::uint64_t seed) {
  const std::string tag = cfg.str("family.tag", "constant");
  auto rewrap = [&](auto&& build) -> Built {
    try {
      return build();
    } catch (const Error& e) {
      if (e.kind() == ErrorKind::invalid_argument) throw config_error(std::string("family: ") + e.what());
      throw;
    }
  };
  if (tag == "zero" || tag == "constant" || tag == "linear" || tag == "hoelder" || tag == "jump") {
    auto kv = cfg.section("family.");
    kv.erase("tag");
    const auto known = scalar_parameters(tag);
    for (const auto& e : kv)
      if (!known.count(e.first)) throw config_error("unknown config key 'family." + e.first + "'");
    return rewrap([&] { return Built{build_scalar_family(spec_from_section(tag, kv), tau), std::nullopt}; });
  }
  if (tag == "snapshot") {
    const std::string file = cfg.str("family.file", "");
    if (file.empty()) throw config_error("config key 'family.file' is required for snapshot families");
    OperatorFamily f = load_snapshot_csv(file);
    if (std::abs(f.tau() - tau) > 1e-12 * tau) {
      throw config_error("snapshot horizon " + fmt(f.tau()) + " differs from grid.tau " + fmt(tau));
    }
    return Built{f, std::nullopt};
  }
  if (tag == "random_spd") {
    const Index n = static_cast<Index>(cfg.integer("family.n", 8));
    const auto fs = static_cast<std::uint64_t>(cfg.integer("family.seed", static_cast<long long>(seed)));
    return Built{random_spd_family(n, fs, cfg.num("family.lmin", 0.5), cfg.num("family.lmax", 50.0),
                                   cfg.num("family.drift", 0.0), tau),
                 std::nullopt};
  }
  if (tag == "elliptic") {
    const GridDomain dom = domain_from_config(cfg);
    const std::string a_text = cfg.str("coef.a", "hoelder(alpha=0.5,a0=1,amp=0.5)");
    const double b0 = cfg.num("coef.b0", 0.0);
    const double a12s = cfg.num("coef.a12", 0.0);
    return rewrap([&] {
      const auto a = scalar_function(parse_scalar_spec(a_text), tau);
      EllipticCoefficients c;
      c.a11 = [a](double t, double x, double) { return a(t) * (1.0 + 0.25 * x); };
      c.a22 = [a](double t, double, double y) { return a(t) * (1.0 + 0.25 * y); };
      c.a12 = [a, a12s](double t, double x, double y) { return a12s * a(t) * x * y; };
      c.b0 = [b0](double, double, double) { return b0; };
      return Built{elliptic_family(dom, c, tau), dom};
    });
  }
  if (tag == "fractional") {
    const GridDomain dom = domain_from_config(cfg);
    const double alpha = cfg.num("family.alpha", 0.3);
    const std::string b_text = cfg.str("family.b", "linear(a0=0.5,a1=0.5)");
    FractionalOptions opt;
    opt.force = cfg.flag("family.force", false);
    return rewrap([&] {
      return Built{fractional_family(dom, alpha, scalar_function(parse_scalar_spec(b_text), tau), tau, opt), dom};
    });
  }
  throw config_error("config key 'family.tag': unknown family '" + tag + "'");
}

inline TimeGrid grid_from_config(const Config& cfg, int default_n = 256) {
  const double tau = cfg.num("grid.tau", 1.0);
  const long long n = cfg.integer("grid.N", default_n);
  if (!(tau > 0.0) || !std::isfinite(tau)) throw config_error("config key 'grid.tau' must be positive");
  if (n < 8) throw config_error("config key 'grid.N' must be at least 8");
  return TimeGrid::uniform(0.0, tau, static_cast<int>(n));
}

inline std::vector<int> anchors_from_config(const Config& cfg, const TimeGrid& grid, std::vector<double> def = {0.0}) {
  std::vector<int> out;
  for (double s : cfg.numbers("grid.anchors", def)) {
    const auto idx = grid.index_of(s);
    if (!idx || *idx >= grid.steps()) {
      throw config_error("config key 'grid.anchors': " + fmt(s) + " is not a grid node in [0, tau)");
    }
    if (std::find(out.begin(), out.end(), *idx) == out.end()) out.push_back(*idx);
  }
  std::sort(out.begin(), out.end());
  return out;
}

inline ObservationOp observation_from_config(const Config& cfg, const Built& b) {
  const std::string kind = cfg.str("obs", b.domain ? "trace" : "first");
  const OperatorFamily& f = b.family;
  if (kind == "trace") {
    if (!b.domain) throw config_error("config key 'obs': trace observation needs a PDE family");
    return boundary_trace(*b.domain, f.dnorm());
  }
  if (kind == "identity") return make_observation(Matrix::Identity(f.dim(), f.dim()), f.dnorm());
  if (kind == "first") {
    Matrix c = Matrix::Zero(1, f.dim());
    c(0, 0) = 1.0;
    return make_observation(c, f.dnorm());
  }
  throw config_error("config key 'obs': unknown observation '" + kind + "'");
}

inline EvolutionOptions evolution_options(const Config& cfg, const std::vector<int>& anchors) {
  EvolutionOptions opt;
  opt.anchors = anchors;
  opt.substeps = static_cast<int>(cfg.integer("evolve.substeps", 0));
  opt.max_iter = static_cast<int>(cfg.integer("evolve.max_iter", 400));
  opt.tol = cfg.num("evolve.tol", 1e-12);
  return opt;
}

inline Method method_from_config(const Config& cfg, const std::string& def) {
  const std::string m = cfg.str("method", def);
  try {
    return parse_method(m);
  } catch (const Error&) {
    throw config_error("config key 'method': unknown method '" + m + "'");
  }
}

inline void require_range(const std::string& key, double v, double lo, double hi) {
  if (!(v > lo && v < hi)) throw config_error("config key '" + key + "' must lie in (" + fmt(lo) + ", " + fmt(hi) + ")");
}

}  // namespace detail

// ---------------------------------------------------------------------------

inline CommandResult cmd_dini(CommandContext& ctx) {
  const Config& cfg = ctx.cfg;
  const TimeGrid grid = detail::grid_from_config(cfg);
  const double p = cfg.num("p", 1.5);
  detail::require_range("p", p, 1.0, INFINITY);
  const std::string expect = cfg.str("expect", "");
  const int n_lags = static_cast<int>(cfg.integer("dini.lags", 49));
  const double h_min = cfg.num("dini.h_min", 1e-6);
  auto built = detail::family_from_config(cfg, grid.end(), ctx.seed);
  cfg.reject_unused();
  if (n_lags < 8) throw config_error("config key 'dini.lags' must be at least 8");
  if (!(h_min > 0.0 && h_min < 1.0)) throw config_error("config key 'dini.h_min' must lie in (0, 1)");
  if (!expect.empty() && expect != "finite" && expect != "diverging") {
    throw config_error("config key 'expect' must be 'finite' or 'diverging'");
  }

  const DiniReport rep = dini_report(built.family, default_lag_grid(grid.end(), h_min, n_lags), p);
  csv::Table tab({"lag", "omega"});
  for (std::size_t k = 0; k < rep.lags.size(); ++k) tab.add({rep.lags[k], rep.omega[k]});
  ctx.emit("dini", tab);
  const std::string verdict = rep.finite() ? "finite" : "diverging";
  csv::Table sum({"p", "tau", "eta", "fitted_exponent", "integral", "body", "tail", "relatively_continuous", "verdict"});
  sum.add({p, rep.tau, rep.eta, rep.fitted_exponent, rep.integral.value, rep.integral.body, rep.integral.tail,
           std::string(rep.relatively_continuous ? "yes" : "no"), verdict});
  ctx.emit("dini_summary", sum);

  CommandResult res;
  const bool ok = expect.empty() || expect == verdict;
  res.code = ok ? exit_pass : exit_fail;
  res.summary = std::string(ok ? "PASS" : "FAIL") + " dini: " + built.family.label() + " p=" + detail::fmt(p) +
                " verdict=" + verdict + " integral=" + detail::fmt(rep.integral.value) +
                " exponent=" + detail::fmt(rep.fitted_exponent);
  return res;
}

inline CommandResult cmd_evolve(CommandContext& ctx) {
  const Config& cfg = ctx.cfg;
  const TimeGrid grid = detail::grid_from_config(cfg);
  auto built = detail::family_from_config(cfg, grid.end(), ctx.seed);
  const std::vector<int> anchors = detail::anchors_from_config(cfg, grid);
  const EvolutionOptions opt = detail::evolution_options(cfg, anchors);
  const std::vector<double> x0_list = cfg.numbers("evolve.x0", {});
  cfg.reject_unused();
  const OperatorFamily& f = built.family;

  const EvolutionTable ref = propagate(f, grid, Method::reference, opt);
  const EvolutionTable fro = propagate(f, grid, Method::frozen_product, opt);
  const EvolutionTable pic = propagate(f, grid, Method::duhamel_picard, opt);

  bool ok = true;
  double worst_ratio = 0.0;
  const int i0 = anchors.front();
  const auto d_rf = table_difference_profile(ref, fro, i0);
  const auto d_rp = table_difference_profile(ref, pic, i0);
  const auto d_fp = table_difference_profile(fro, pic, i0);
  csv::Table err({"t", "ref_vs_frozen", "ref_vs_picard", "frozen_vs_picard"});
  for (std::size_t k = 0; k < d_rf.size(); ++k) err.add({grid.node(i0 + static_cast<int>(k)), d_rf[k], d_rp[k], d_fp[k]});
  ctx.emit("evolve_errors", err);
  struct Pair {
    const char* name;
    const EvolutionTable *a, *b;
  };
  csv::Table sum({"pair", "sup_difference", "combined_tolerance", "verdict"});
  for (const Pair& pr : {Pair{"ref_vs_frozen", &ref, &fro}, Pair{"ref_vs_picard", &ref, &pic},
                         Pair{"frozen_vs_picard", &fro, &pic}}) {
    double sup = 0.0;
    for (int i : anchors) sup = std::max(sup, table_difference(*pr.a, *pr.b, i));
    const double tol = pr.a->tolerance() + pr.b->tolerance();
    const bool pass = sup <= tol;
    ok = ok && pass;
    worst_ratio = std::max(worst_ratio, tol > 0 ? sup / tol : (sup > 0 ? INFINITY : 0.0));
    sum.add({std::string(pr.name), sup, tol, std::string(pass ? "pass" : "fail")});
  }
  ctx.emit("evolve_summary", sum);
  ctx.emit("evolve_norms", ref.norm_table(i0));

  Vector x0 = Vector::Ones(f.dim()) / std::sqrt(static_cast<double>(f.dim()));
  if (!x0_list.empty()) {
    if (static_cast<Index>(x0_list.size()) != f.dim()) throw config_error("config key 'evolve.x0' has the wrong length");
    for (Index k = 0; k < f.dim(); ++k) x0(k) = x0_list[static_cast<std::size_t>(k)];
  }
  const TimeGrid sub = grid.sub_grid(i0, grid.steps());
  Trajectory u(f.dim(), sub.size());
  const auto& col = ref.column(i0);
  for (std::size_t k = 0; k < col.size(); ++k) u.at(static_cast<int>(k)) = col[k] * x0;
  ctx.emit("trajectory", trajectory_table(u, sub));

  CommandResult res;
  res.code = ok ? exit_pass : exit_fail;
  res.summary = std::string(ok ? "PASS" : "FAIL") + " evolve: " + f.label() + " N=" + std::to_string(grid.steps()) +
                " worst difference/tolerance=" + detail::fmt(worst_ratio) +
                " picard_iterations=" + std::to_string(pic.iterations());
  return res;
}

inline CommandResult cmd_resolvent(CommandContext& ctx) {
  const Config& cfg = ctx.cfg;
  const double tau = cfg.num("grid.tau", 1.0);
  if (!(tau > 0.0)) throw config_error("config key 'grid.tau' must be positive");
  auto built = detail::family_from_config(cfg, tau, ctx.seed);
  const double r0 = cfg.num("resolvent.r0", 0.0);
  const double R = cfg.num("resolvent.R", 1e4);
  const int n_re = static_cast<int>(cfg.integer("resolvent.n_re", 9));
  const int n_im = static_cast<int>(cfg.integer("resolvent.n_im", 17));
  const int n_t = static_cast<int>(cfg.integer("resolvent.n_t", 17));
  cfg.reject_unused();
  if (n_re < 1 || n_im < 1 || n_t < 2 || !(R > 0.0)) throw config_error("resolvent grid keys must be positive");

  const ResolventScanReport rep =
      resolvent_scan(built.family, linspace(0.0, tau, n_t), half_plane_lambda_grid(r0, R, n_re, n_im));
  ctx.emit("resolvent", rep.table());
  csv::Table per({"t", "max_bound"});
  for (std::size_t k = 0; k < rep.t_grid.size(); ++k) per.add({rep.t_grid[k], rep.per_t[k]});
  ctx.emit("resolvent_per_t", per);
  csv::Table sum({"r0", "M0", "violation", "violation_t", "violation_re", "violation_im"});
  sum.add({r0, rep.M0, std::string(rep.violation ? "yes" : "no"), rep.violation_t, rep.violation_lambda.real(),
           rep.violation_lambda.imag()});
  ctx.emit("resolvent_summary", sum);
  CommandResult res;
  res.code = rep.violation ? exit_fail : exit_pass;
  res.summary = std::string(rep.violation ? "FAIL" : "PASS") + " resolvent: " + built.family.label() +
                " M0=" + detail::fmt(rep.M0) +
                (rep.violation ? " spectrum meets half-plane at t=" + detail::fmt(rep.violation_t) : std::string());
  return res;
}

inline CommandResult cmd_mr(CommandContext& ctx) {
  const Config& cfg = ctx.cfg;
  const TimeGrid grid = detail::grid_from_config(cfg);
  auto built = detail::family_from_config(cfg, grid.end(), ctx.seed);
  const double p = cfg.num("p", 2.0);
  detail::require_range("p", p, 1.0, INFINITY);
  const int probes = static_cast<int>(cfg.integer("mr.probes", 24));
  const std::vector<int> anchors = detail::anchors_from_config(cfg, grid);
  cfg.reject_unused();
  if (probes < 8) throw config_error("config key 'mr.probes' must be at least 8");

  const MRSolver solver(built.family, grid);
  csv::Table tab({"p", "a", "b", "c_emp", "n_probes", "worst_probe"});
  double worst = 0.0;
  for (int i : anchors) {
    const MRReport rep = mr_constant(solver, p, probes, ctx.seed, i);
    tab.add({rep.p, rep.a, rep.b, rep.c_emp, static_cast<long long>(rep.probes), static_cast<long long>(rep.worst_probe)});
    worst = std::max(worst, rep.c_emp);
  }
  ctx.emit("mr", tab);
  CommandResult res;
  const bool ok = std::isfinite(worst);
  res.code = ok ? exit_pass : exit_fail;
  res.summary = std::string(ok ? "PASS" : "FAIL") + " mr: " + built.family.label() + " p=" + detail::fmt(p) +
                " c_emp=" + detail::fmt(worst) + " probes=" + std::to_string(probes);
  return res;
}

inline CommandResult cmd_admissibility(CommandContext& ctx) {
  const Config& cfg = ctx.cfg;
  const TimeGrid grid = detail::grid_from_config(cfg);
  auto built = detail::family_from_config(cfg, grid.end(), ctx.seed);
  const double theta = cfg.num("theta", 2.0);
  detail::require_range("theta", theta, 1.0, INFINITY);
  const std::vector<int> anchors = detail::anchors_from_config(cfg, grid);
  const Method method = detail::method_from_config(cfg, "frozen-product");
  const EvolutionOptions eopt = detail::evolution_options(cfg, anchors);
  const ObservationOp c = detail::observation_from_config(cfg, built);
  cfg.reject_unused();
  const OperatorFamily& f = built.family;

  const EvolutionTable table = propagate(f, grid, method, eopt);
  AscentOptions aopt;
  aopt.seed = ctx.seed;
  std::vector<AdmissibilityReport> frozen, nonaut;
  bool ok = true;
  for (int i : anchors) {
    const double s = grid.node(i);
    std::vector<double> local;
    for (int j = i; j <= grid.steps(); ++j) local.push_back(grid.node(j) - s);
    local.front() = 0.0;
    AdmissibilityReport fr = gamma_frozen(f.at(s), c, theta, TimeGrid(local), &f.dnorm(), aopt);
    fr.s = s;
    frozen.push_back(fr);
    nonaut.push_back(gamma_nonautonomous(f, c, i, theta, table, aopt));
    ok = ok && std::isfinite(fr.gamma) && std::isfinite(nonaut.back().gamma);
  }
  ctx.emit("gamma_frozen", gamma_table(frozen));
  ctx.emit("gamma_nonautonomous", gamma_table(nonaut));
  double gf = 0.0, gn = 0.0;
  for (const auto& r : frozen) gf = std::max(gf, r.gamma);
  for (const auto& r : nonaut) gn = std::max(gn, r.gamma);
  CommandResult res;
  res.code = ok ? exit_pass : exit_fail;
  res.summary = std::string(ok ? "PASS" : "FAIL") + " admissibility: " + f.label() + " theta=" + detail::fmt(theta) +
                " sup_gamma_frozen=" + detail::fmt(gf) + " sup_gamma_nonautonomous=" + detail::fmt(gn);
  return res;
}

namespace detail {

inline void emit_equivalence(CommandContext& ctx, const std::string& prefix, const EquivalenceReport& rep) {
  ctx.emit(prefix + "_forward", EquivalenceReport::rows_table(rep.forward));
  ctx.emit(prefix + "_reverse", EquivalenceReport::rows_table(rep.reverse));
  std::vector<AdmissibilityReport> fr, na;
  for (const auto& a : rep.anchors) {
    AdmissibilityReport r = a.frozen;
    r.s = a.s;
    fr.push_back(r);
    na.push_back(a.nonautonomous);
  }
  ctx.emit(prefix + "_gamma_frozen", gamma_table(fr));
  ctx.emit(prefix + "_gamma_nonautonomous", gamma_table(na));
  csv::Table ops({"s", "forward_lhs", "forward_rhs", "forward_verdict", "reverse_lhs", "reverse_rhs", "reverse_verdict"});
  for (const auto& a : rep.anchors) {
    ops.add({a.s, a.forward_op_lhs, a.forward_op_rhs, std::string(a.forward_op_pass ? "pass" : "fail"), a.reverse_op_lhs,
             a.reverse_op_rhs, std::string(a.reverse_op_pass ? "pass" : "fail")});
  }
  ctx.emit(prefix + "_bounds", ops);
}

}  // namespace detail

inline CommandResult cmd_equivalence(CommandContext& ctx) {
  const Config& cfg = ctx.cfg;
  const TimeGrid grid = detail::grid_from_config(cfg);
  auto built = detail::family_from_config(cfg, grid.end(), ctx.seed);
  const double theta = cfg.num("theta", 2.0);
  const double p = cfg.num("p", 1.5);
  detail::require_range("theta", theta, 1.0, INFINITY);
  detail::require_range("p", p, 1.0, INFINITY);
  const std::vector<int> anchors = detail::anchors_from_config(cfg, grid);
  const Method method = detail::method_from_config(cfg, "frozen-product");
  const EvolutionOptions eopt = detail::evolution_options(cfg, anchors);
  const ObservationOp c = detail::observation_from_config(cfg, built);
  const int n_x = static_cast<int>(cfg.integer("equivalence.n_x", 64));
  cfg.reject_unused();
  const OperatorFamily& f = built.family;

  const DiniReport dini = dini_report(f, default_lag_grid(grid.end()), p);
  const EvolutionTable table = propagate(f, grid, method, eopt);
  EquivalenceOptions opt;
  opt.n_x = n_x;
  opt.seed = ctx.seed;
  opt.ascent.seed = ctx.seed;
  opt.dini_finite = dini.finite();
  const EquivalenceReport rep = equivalence_experiment(f, c, theta, table, anchors, opt);
  detail::emit_equivalence(ctx, "equivalence", rep);

  CommandResult res;
  const bool ok = rep.pass();
  if (rep.outside_hypothesis) {
    res.code = exit_hypothesis;
    res.summary = "FAIL equivalence: " + f.label() + " relative Dini condition diverges at p=" + detail::fmt(p) +
                  " (hypothesis violated); inequalities " + (ok ? "hold" : "fail") +
                  " worst slack=" + detail::fmt(rep.worst_slack());
    return res;
  }
  res.code = ok ? exit_pass : exit_fail;
  res.summary = std::string(ok ? "PASS" : "FAIL") + " equivalence: " + f.label() + " theta=" + detail::fmt(theta) +
                " sup_gamma_frozen=" + detail::fmt(rep.sup_gamma_frozen) +
                " sup_gamma_nonautonomous=" + detail::fmt(rep.sup_gamma_nonautonomous) +
                " worst slack=" + detail::fmt(rep.worst_slack());
  return res;
}

inline CommandResult cmd_hoelder(CommandContext& ctx) {
  const Config& cfg = ctx.cfg;
  const TimeGrid grid = detail::grid_from_config(cfg);
  auto built = detail::family_from_config(cfg, grid.end(), ctx.seed);
  const double alpha = cfg.num("alpha", 0.5);
  const double p = cfg.num("p", 1.5);
  if (!(alpha > 0.0 && alpha <= 1.0)) throw config_error("config key 'alpha' must lie in (0, 1]");
  detail::require_range("p", p, 1.0, INFINITY);
  const std::vector<int> anchors = detail::anchors_from_config(cfg, grid);
  const Method method = detail::method_from_config(cfg, "frozen-product");
  const EvolutionOptions eopt = detail::evolution_options(cfg, anchors);
  const ObservationOp c = detail::observation_from_config(cfg, built);
  HoelderOptions hopt;
  hopt.n_x = static_cast<int>(cfg.integer("hoelder.n_x", 64));
  hopt.divergence_halvings = static_cast<int>(cfg.integer("hoelder.halvings", 4));
  hopt.seed = ctx.seed;
  cfg.reject_unused();
  const OperatorFamily& f = built.family;

  const EvolutionTable table = propagate(f, grid, method, eopt);
  csv::Table rows({"s", "x_id", "lhs", "split", "convolved", "bound", "verdict"});
  csv::Table consts({"s", "alpha", "p", "gamma", "k", "L", "c_U", "singular_integral", "hypothesis"});
  csv::Table div({"s", "halving", "singular_sum", "growth"});
  bool ok = true, hyp = true;
  double min_growth = INFINITY;
  for (int i : anchors) {
    const HoelderChainReport rep = hoelder_chain_check(f, c, alpha, p, table, i, hopt);
    for (const auto& r : rep.rows)
      rows.add({rep.s, static_cast<long long>(r.x_id), r.lhs, r.split, r.convolved, r.bound,
                std::string(r.pass ? "pass" : "fail")});
    consts.add({rep.s, alpha, p, rep.gamma, rep.k, rep.L, rep.c_U, rep.singular_integral,
                std::string(rep.hypothesis_ok ? "ok" : "violated")});
    for (std::size_t h = 0; h < rep.divergence_sums.size(); ++h) {
      const double g = h == 0 ? NAN : rep.divergence_growth[h - 1];
      div.add({rep.s, static_cast<long long>(h), rep.divergence_sums[h], g});
      if (h > 0) min_growth = std::min(min_growth, g);
    }
    hyp = hyp && rep.hypothesis_ok;
    ok = ok && rep.pass();
  }
  ctx.emit("hoelder_rows", rows);
  ctx.emit("hoelder_constants", consts);
  ctx.emit("hoelder_divergence", div);
  CommandResult res;
  if (!hyp) {
    res.code = exit_hypothesis;
    res.summary = "FAIL hoelder: p=" + detail::fmt(p) + " is not below 1/(1-alpha)=" +
                  detail::fmt(1.0 / (1.0 - alpha)) + "; singular sum growth per halving >= " + detail::fmt(min_growth);
    return res;
  }
  res.code = ok ? exit_pass : exit_fail;
  res.summary = std::string(ok ? "PASS" : "FAIL") + " hoelder: " + f.label() + " alpha=" + detail::fmt(alpha) +
                " p=" + detail::fmt(p) + " rows=" + std::to_string(rows.rows());
  return res;
}

/// Boundary-observed fractional family with its admissibility pipeline.
inline CommandResult cmd_example_s4(CommandContext& ctx) {
  Config& cfg = ctx.cfg;
  if (!cfg.has("family.tag")) cfg.set("family.tag", "fractional");
  if (cfg.str("family.tag", "") != "fractional") throw config_error("config key 'family.tag' must be 'fractional' for example-s4");
  if (!cfg.has("domain.dim")) cfg.set("domain.dim", "1");
  if (!cfg.has("domain.m") && !cfg.has("domain.mx")) cfg.set("domain.m", "64");
  const TimeGrid grid = detail::grid_from_config(cfg, 512);
  auto built = detail::family_from_config(cfg, grid.end(), ctx.seed);
  const double theta = cfg.num("theta", 2.0);
  const double p = cfg.num("p", 2.0);
  detail::require_range("theta", theta, 1.0, INFINITY);
  detail::require_range("p", p, 1.0, INFINITY);
  const std::vector<int> anchors = detail::anchors_from_config(cfg, grid, {0.0, 0.25, 0.5, 0.75});
  const Method method = detail::method_from_config(cfg, "frozen-product");
  const EvolutionOptions eopt = detail::evolution_options(cfg, anchors);
  const ObservationOp c = detail::observation_from_config(cfg, built);
  const int n_x = static_cast<int>(cfg.integer("equivalence.n_x", 64));
  cfg.reject_unused();
  const OperatorFamily& f = built.family;

  const DiniReport dini = dini_report(f, default_lag_grid(grid.end()), p);
  const EvolutionTable table = propagate(f, grid, method, eopt);
  EquivalenceOptions opt;
  opt.n_x = n_x;
  opt.seed = ctx.seed;
  opt.ascent.seed = ctx.seed;
  opt.dini_finite = dini.finite();
  const EquivalenceReport rep = equivalence_experiment(f, c, theta, table, anchors, opt);
  detail::emit_equivalence(ctx, "s4", rep);
  if (f.hprime) {
    csv::Table hp({"lag", "alpha", "c_fit", "worst_ratio", "stable", "min_sym_eigenvalue"});
    for (std::size_t k = 0; k < f.hprime->lags.size(); ++k)
      hp.add({f.hprime->lags[k], f.hprime->alpha, f.hprime->c_fit, f.hprime->worst_ratio[k],
              std::string(f.hprime->stable ? "yes" : "no"), f.hprime->min_sym_eigenvalue});
    ctx.emit("s4_hprime", hp);
  }

  std::string gammas;
  for (const auto& a : rep.anchors) gammas += " gamma(" + detail::fmt(a.s) + ")=" + detail::fmt(a.nonautonomous.gamma);
  CommandResult res;
  if (rep.outside_hypothesis) {
    res.code = exit_hypothesis;
    res.summary = "FAIL example-s4: relative Dini condition diverges at p=" + detail::fmt(p);
    return res;
  }
  const bool ok = rep.pass() && std::isfinite(rep.sup_gamma_nonautonomous);
  res.code = ok ? exit_pass : exit_fail;
  res.summary = std::string(ok ? "PASS" : "FAIL") + " example-s4: C admissible, sup_gamma_frozen=" +
                detail::fmt(rep.sup_gamma_frozen) + gammas + " worst slack=" + detail::fmt(rep.worst_slack());
  return res;
}

inline const std::vector<std::string>& command_names() {
  static const std::vector<std::string> names = {"dini", "evolve", "admissibility", "equivalence",
                                                 "hoelder", "resolvent", "mr", "example-s4"};
  return names;
}

/// Runs a command and maps exceptions onto exit codes. Messages go to `err`.
inline CommandResult run_command(const std::string& name, CommandContext& ctx, std::ostream& err = std::cerr) {
  CommandResult res;
  try {
    if (ctx.cfg.has("output.dat")) ctx.dat = ctx.cfg.flag("output.dat", false);
    ctx.cfg.str("seed", "");  // consumed by the caller
    if (name == "dini") res = cmd_dini(ctx);
    else if (name == "evolve") res = cmd_evolve(ctx);
    else if (name == "admissibility") res = cmd_admissibility(ctx);
    else if (name == "equivalence") res = cmd_equivalence(ctx);
    else if (name == "hoelder") res = cmd_hoelder(ctx);
    else if (name == "resolvent") res = cmd_resolvent(ctx);
    else if (name == "mr") res = cmd_mr(ctx);
    else if (name == "example-s4") res = cmd_example_s4(ctx);
    else throw config_error("unknown command '" + name + "'");
  } catch (const NonConvergence& e) {
    res.code = exit_numerical;
    res.summary = std::string("ERROR ") + name + ": " + e.what();
    err << "evofam: " << e.what() << " (after " << e.iterations() << " iterations, defect " << e.last_defect() << ")\n";
  } catch (const Error& e) {
    res.code = exit_code_for(e.kind());
    res.summary = std::string("ERROR ") + name + ": " + e.what();
    err << "evofam: " << e.what() << "\n";
  } catch (const std::exception& e) {
    res.code = exit_numerical;
    res.summary = std::string("ERROR ") + name + ": " + e.what();
    err << "evofam: " << e.what() << "\n";
  }
  res.files = ctx.written;
  return res;
}

}  // namespace evofam
