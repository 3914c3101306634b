#include <iostream>
#include <string>

#include <CLI11.hpp>

#include "evofam/commands.hpp"

int main(int argc, char** argv) {
  CLI::App app{"Numerical laboratory for non-autonomous evolution equations"};
  std::string command, config_path, out_dir = ".";
  long long seed = 0;
  app.add_option("command", command, "dini | evolve | admissibility | equivalence | hoelder | resolvent | mr | example-s4")
      ->required();
  app.add_option("--config", config_path, "key = value configuration file")->required();
  app.add_option("--out", out_dir, "output directory");
  auto* seed_opt = app.add_option("--seed", seed, "overrides the config seed");
  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? 0 : evofam::exit_config;
  }

  evofam::CommandContext ctx;
  try {
    ctx.cfg = evofam::Config::load(config_path);
    if (*seed_opt) ctx.cfg.set("seed", std::to_string(seed));
    const long long s = ctx.cfg.integer("seed", 42);
    if (s < 0) throw evofam::config_error("config key 'seed' must be nonnegative");
    ctx.seed = static_cast<std::uint64_t>(s);
  } catch (const evofam::Error& e) {
    std::cerr << "evofam: " << e.what() << "\n";
    std::cout << "ERROR " << command << ": " << e.what() << "\n";
    return evofam::exit_config;
  }
  ctx.out = out_dir;
  const evofam::CommandResult res = evofam::run_command(command, ctx);
  std::cout << res.summary << "\n";
  return res.code;
}
