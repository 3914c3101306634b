#include <gtest/gtest.h>

#include <sys/wait.h>

#include <Eigen/Eigenvalues>
#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include "evofam/commands.hpp"

using namespace evofam;
namespace fs = std::filesystem;

namespace {

using Rows = std::vector<std::vector<std::string>>;

fs::path scratch(const std::string& name) {
  const fs::path p = fs::temp_directory_path() / "evofam_cli_test" / name;
  fs::remove_all(p);
  fs::create_directories(p);
  return p;
}

std::string slurp(const fs::path& p) {
  std::ifstream f(p, std::ios::binary);
  std::stringstream ss;
  ss << f.rdbuf();
  return ss.str();
}

Rows read_csv(const fs::path& p) {
  Rows out;
  std::stringstream ss(slurp(p));
  std::string line;
  while (std::getline(ss, line)) {
    std::vector<std::string> cells;
    std::stringstream ls(line);
    std::string c;
    while (std::getline(ls, c, ',')) cells.push_back(c);
    out.push_back(cells);
  }
  return out;
}

std::size_t col(const Rows& r, const std::string& name) {
  for (std::size_t k = 0; k < r.front().size(); ++k)
    if (r.front()[k] == name) return k;
  ADD_FAILURE() << "no column " << name;
  return 0;
}

double cell(const Rows& r, std::size_t row, const std::string& name) { return std::stod(r.at(row).at(col(r, name))); }

fs::path write_cfg(const fs::path& dir, const std::string& text) {
  const fs::path p = dir / "run.cfg";
  std::ofstream(p) << text;
  return p;
}

struct CliRun {
  int code;
  std::string out, err;
};

// Runs the CLI binary with optional environment prefix.
CliRun cli(const std::string& args, const fs::path& dir, const std::string& env = "") {
  const fs::path o = dir / "stdout.txt", e = dir / "stderr.txt";
  const std::string cmd = env + " " + std::string(EVOFAM_CLI) + " " + args + " >" + o.string() + " 2>" + e.string();
  const int st = std::system(cmd.c_str());
  return {WIFEXITED(st) ? WEXITSTATUS(st) : -1, slurp(o), slurp(e)};
}

CommandResult in_process(const std::string& name, const std::string& text, const fs::path& out,
                         std::uint64_t seed = 42) {
  CommandContext ctx;
  ctx.cfg = Config::parse(text);
  ctx.seed = seed;
  ctx.out = out;
  std::ostringstream err;
  return run_command(name, ctx, err);
}

}  // namespace

TEST(ConfigParse, CommentsWhitespaceAndTypes) {
  const Config c = Config::parse("# header\n  a.b = 3.5  # trailing\n\nflag = yes\nlist = 1, 2 ,3\nn = 12\n");
  EXPECT_DOUBLE_EQ(c.num("a.b", 0), 3.5);
  EXPECT_TRUE(c.flag("flag", false));
  EXPECT_EQ(c.numbers("list", {}), (std::vector<double>{1, 2, 3}));
  EXPECT_EQ(c.integer("n", 0), 12);
  EXPECT_EQ(c.str("missing", "dflt"), "dflt");
  EXPECT_NO_THROW(c.reject_unused());
}

TEST(ConfigParse, MalformedInputIsConfigError) {
  for (const char* text : {"a = 1\na = 2\n", "no equals sign\n", " = 4\n"}) {
    try {
      Config::parse(text);
      FAIL() << text;
    } catch (const Error& e) {
      EXPECT_EQ(e.kind(), ErrorKind::config);
    }
  }
  const Config c = Config::parse("x = 1.5q\nb = maybe\nl = 1, two\nk = 2.5\n");
  EXPECT_THROW(c.num("x", 0), Error);
  EXPECT_THROW(c.flag("b", false), Error);
  EXPECT_THROW(c.numbers("l", {}), Error);
  EXPECT_THROW(c.integer("k", 0), Error);
}

TEST(ConfigParse, RejectUnusedNamesTheKey) {
  const Config c = Config::parse("used = 1\nstray.key = 2\n");
  c.num("used", 0);
  try {
    c.reject_unused();
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::config);
    EXPECT_NE(std::string(e.what()).find("stray.key"), std::string::npos);
  }
}

TEST(Cli, ArgumentAndConfigErrorsExitTwo) {
  const fs::path d = scratch("args");
  EXPECT_EQ(cli("dini", d).code, 2);
  EXPECT_EQ(cli("dini --config " + (d / "absent.cfg").string(), d).code, 2);
  const fs::path cfg = write_cfg(d, "family.tag = constant\n");
  EXPECT_EQ(cli("frobnicate --config " + cfg.string() + " --out " + d.string(), d).code, 2);
  const fs::path bad = write_cfg(d, "family.tag = constant\nfamily.bogus = 3\n");
  const CliRun r = cli("dini --config " + bad.string() + " --out " + d.string(), d);
  EXPECT_EQ(r.code, 2);
  EXPECT_NE(r.err.find("family.bogus"), std::string::npos);
  EXPECT_EQ(r.out.rfind("ERROR dini", 0), 0u);
  const fs::path neg = write_cfg(d, "family.tag = constant\nresolvent.r0 = -1\n");
  EXPECT_EQ(cli("resolvent --config " + neg.string() + " --out " + d.string(), d).code, 2);
}

TEST(Cli, ExitCodesForVerdictNumericalAndHypothesis) {
  const fs::path d = scratch("codes");
  const fs::path finite = write_cfg(d, "family.tag = hoelder\nfamily.alpha = 0.5\np = 1.5\nexpect = finite\n");
  EXPECT_EQ(cli("dini --config " + finite.string() + " --out " + d.string(), d).code, 0);
  const fs::path wrong = write_cfg(d, "family.tag = hoelder\nfamily.alpha = 0.5\np = 1.5\nexpect = diverging\n");
  const CliRun fail = cli("dini --config " + wrong.string() + " --out " + d.string(), d);
  EXPECT_EQ(fail.code, 1);
  EXPECT_EQ(fail.out.rfind("FAIL", 0), 0u);

  const fs::path nc = write_cfg(d, "family.tag = linear\nfamily.dim = 2\ngrid.N = 64\nevolve.max_iter = 1\n");
  EXPECT_EQ(cli("evolve --config " + nc.string() + " --out " + d.string(), d).code, 3);

  const fs::path jump = write_cfg(d, "family.tag = jump\ngrid.N = 64\ntheta = 2\np = 1.5\n");
  EXPECT_EQ(cli("equivalence --config " + jump.string() + " --out " + d.string(), d).code, 4);
  const fs::path frac = write_cfg(d, "family.alpha = 0.6\ngrid.N = 64\ndomain.m = 8\n");
  EXPECT_EQ(cli("example-s4 --config " + frac.string() + " --out " + d.string(), d).code, 4);
  const fs::path hol = write_cfg(
      d, "family.tag = elliptic\ndomain.m = 8\ncoef.a = hoelder(alpha=0.5,a0=1,amp=0.5)\nalpha = 0.5\np = 3\ngrid.N = 64\n");
  EXPECT_EQ(cli("hoelder --config " + hol.string() + " --out " + d.string(), d).code, 4);
}

TEST(Cli, DatOutputAndSeedOverride) {
  const fs::path d = scratch("dat");
  const std::string text = "family.tag = random_spd\nfamily.n = 4\nfamily.drift = 0.3\ngrid.N = 32\noutput.dat = true\n";
  const fs::path cfg = write_cfg(d, text);
  const fs::path a = d / "a", b = d / "b", c = d / "c";
  ASSERT_EQ(cli("evolve --config " + cfg.string() + " --out " + a.string() + " --seed 7", d).code, 0);
  ASSERT_EQ(cli("evolve --config " + cfg.string() + " --out " + b.string() + " --seed 7", d).code, 0);
  ASSERT_EQ(cli("evolve --config " + cfg.string() + " --out " + c.string() + " --seed 8", d).code, 0);
  EXPECT_TRUE(fs::exists(a / "trajectory.dat"));
  EXPECT_EQ(slurp(a / "trajectory.csv"), slurp(b / "trajectory.csv"));
  EXPECT_NE(slurp(a / "trajectory.csv"), slurp(c / "trajectory.csv"));
  const CommandResult r = in_process("evolve", text, d / "p", 7);
  EXPECT_EQ(slurp(a / "trajectory.csv"), slurp(d / "p" / "trajectory.csv"));
  EXPECT_EQ(r.code, 0);
}

TEST(Cli, OutputsIndependentOfThreadCount) {
  const fs::path d = scratch("threads");
  const fs::path cfg = fs::path(EVOFAM_CONFIGS) / "equivalence_elliptic.cfg";
  ASSERT_EQ(cli("equivalence --config " + cfg.string() + " --out " + (d / "t1").string(), d, "EVOFAM_THREADS=1").code, 0);
  ASSERT_EQ(cli("equivalence --config " + cfg.string() + " --out " + (d / "t8").string(), d, "EVOFAM_THREADS=8").code, 0);
  int files = 0;
  for (const auto& e : fs::directory_iterator(d / "t1")) {
    ++files;
    EXPECT_EQ(slurp(e.path()), slurp(d / "t8" / e.path().filename())) << e.path().filename();
  }
  EXPECT_GE(files, 5);
}

TEST(Commands, ResolventMatchesSpectralOracle) {
  const fs::path d = scratch("resolvent");
  for (double drift : {0.0, 0.2}) {
    const std::string text = "family.tag = random_spd\nfamily.n = 8\nfamily.drift = " + std::to_string(drift) +
                             "\nresolvent.n_re = 5\nresolvent.n_im = 9\nresolvent.n_t = 9\n";
    ASSERT_EQ(in_process("resolvent", text, d).code, 0);
    const Rows s = read_csv(d / "resolvent_summary.csv");
    const double m0 = cell(s, 1, "M0");
    const auto f = detail::random_spd_family(8, 42, 0.5, 50.0, drift, 1.0);
    double oracle = 0.0;
    for (double t : linspace(0.0, 1.0, 9)) {
      const Vector mu = Eigen::SelfAdjointEigenSolver<Matrix>(f.at(t)).eigenvalues();
      for (Complex lam : half_plane_lambda_grid(0.0, 1e4, 5, 9)) {
        double dist = INFINITY;
        for (Index i = 0; i < mu.size(); ++i) dist = std::min(dist, std::abs(lam + mu(i)));
        oracle = std::max(oracle, (1.0 + std::abs(lam)) / dist);
      }
    }
    EXPECT_NEAR(m0, oracle, 1e-6 * oracle) << drift;
    EXPECT_EQ(s[1][col(s, "violation")], "no");
  }
}

TEST(Commands, MrTableMatchesDirectCall) {
  const fs::path d = scratch("mr");
  const std::string text = slurp(fs::path(EVOFAM_CONFIGS) / "mr_zero.cfg");
  ASSERT_EQ(in_process("mr", text, d).code, 0);
  const Rows r = read_csv(d / "mr.csv");
  const TimeGrid g = TimeGrid::uniform(0.0, 1.0, 128);
  const MRSolver solver(build_scalar_family("zero(dim=2)", 1.0), g);
  const MRReport rep = mr_constant(solver, 2.0, 12, 42, 0);
  EXPECT_NEAR(cell(r, 1, "c_emp"), rep.c_emp, 1e-12 * rep.c_emp);
  EXPECT_EQ(static_cast<int>(cell(r, 1, "n_probes")), 12);
}

TEST(Commands, EvolveConstantZeroAndLinear) {
  const fs::path d = scratch("evolve");
  ASSERT_EQ(in_process("evolve", "family.tag = random_spd\nfamily.n = 6\ngrid.N = 64\n", d).code, 0);
  const Rows s = read_csv(d / "evolve_summary.csv");
  // Both exponential routes are exact for a constant family; the reference stays within its own estimate.
  for (std::size_t k = 1; k < s.size(); ++k) {
    EXPECT_LE(cell(s, k, "sup_difference"), cell(s, k, "combined_tolerance")) << s[k][0];
    if (s[k][0] == "frozen_vs_picard") {
      EXPECT_LT(cell(s, k, "sup_difference"), 1e-8);
    }
  }

  ASSERT_EQ(in_process("evolve", "family.tag = zero\nfamily.dim = 2\ngrid.N = 32\nevolve.x0 = 0.6, -0.8\n", d).code, 0);
  const Rows z = read_csv(d / "trajectory.csv");
  for (std::size_t k = 1; k < z.size(); ++k) {
    EXPECT_DOUBLE_EQ(cell(z, k, "x_1"), 0.6);
    EXPECT_DOUBLE_EQ(cell(z, k, "x_2"), -0.8);
  }

  ASSERT_EQ(in_process("evolve", "family.tag = linear\nfamily.dim = 3\ngrid.N = 1024\n", d).code, 0);
  const Rows l = read_csv(d / "trajectory.csv");
  double worst = 0.0;
  for (std::size_t k = 1; k < l.size(); ++k) {
    const double t = cell(l, k, "t");
    const double exact = std::exp(-t - 0.5 * t * t) / std::sqrt(3.0);
    for (const char* c : {"x_1", "x_2", "x_3"}) worst = std::max(worst, std::abs(cell(l, k, c) - exact));
  }
  EXPECT_LT(worst, 1e-6);
}

TEST(Commands, DiniVerdicts) {
  const fs::path d = scratch("dini");
  ASSERT_EQ(in_process("dini", "family.tag = constant\np = 3\nexpect = finite\n", d).code, 0);
  EXPECT_NEAR(cell(read_csv(d / "dini_summary.csv"), 1, "integral"), 0.0, 1e-12);

  ASSERT_EQ(in_process("dini", "family.tag = hoelder\nfamily.alpha = 0.5\nfamily.amp = 1\np = 1.5\n", d).code, 0);
  // omega(h) = h^0.5 / 2 relative to 1 + A(0), so the integral is 4 (1/2)^1.5.
  EXPECT_NEAR(cell(read_csv(d / "dini_summary.csv"), 1, "integral"), 4.0 * std::pow(0.5, 1.5), 0.02);

  ASSERT_EQ(in_process("dini", "family.tag = hoelder\nfamily.alpha = 0.5\np = 3\nexpect = diverging\n", d).code, 0);
  const Rows r = read_csv(d / "dini_summary.csv");
  EXPECT_EQ(r[1][col(r, "verdict")], "diverging");
}

// Ten times the time resolution moves the anchor constants by under 2%.
TEST(Commands, ExampleS4StableUnderTimeRefinement) {
  const fs::path d = scratch("s4");
  const std::string base = slurp(fs::path(EVOFAM_CONFIGS) / "example_s4.cfg");
  auto gammas = [&](int n, const fs::path& out) {
    std::string text = base;
    const auto at = text.find("grid.N = 512");
    EXPECT_NE(at, std::string::npos);
    text.replace(at, 12, "grid.N = " + std::to_string(n));
    EXPECT_EQ(in_process("example-s4", text, out).code, 0);
    const Rows r = read_csv(out / "s4_gamma_nonautonomous.csv");
    std::vector<double> g;
    for (std::size_t k = 1; k < r.size(); ++k) g.push_back(cell(r, k, "gamma"));
    return g;
  };
  const auto coarse = gammas(512, d / "coarse");
  const auto fine = gammas(5120, d / "fine");
  ASSERT_EQ(coarse.size(), 4u);
  ASSERT_EQ(fine.size(), coarse.size());
  for (std::size_t k = 0; k < coarse.size(); ++k) EXPECT_NEAR(coarse[k], fine[k], 0.02 * fine[k]) << k;
}
