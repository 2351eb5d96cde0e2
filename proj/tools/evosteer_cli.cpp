// evosteer command-line runner.

#include <iostream>
#include <map>
#include <optional>
#include <string>

#include <CLI11.hpp>

#include "evosteer/config.hpp"
#include "evosteer/error.hpp"
#include "evosteer/experiments.hpp"

namespace {

struct Flags {
  std::string config;
  std::optional<double> lambda;
  std::string out;
  std::optional<std::uint64_t> seed;
  std::string format = "csv";
  int snapshots = 0;
};

void add_common(CLI::App* cmd, Flags& flags, bool with_lambda) {
  cmd->add_option("--config", flags.config, "run configuration file")->required();
  cmd->add_option("--out", flags.out, "output directory");
  cmd->add_option("--seed", flags.seed, "override the configured seed");
  cmd->add_option("--format", flags.format, "stdout format")->check(CLI::IsMember({"csv", "json"}));
  if (with_lambda) cmd->add_option("--lambda", flags.lambda, "regularization parameter");
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Approximate controllability experiments for an impulsive delayed evolution inclusion"};
  app.require_subcommand(1);
  Flags flags;

  auto* check = app.add_subcommand("check", "run the invariant suites");
  add_common(check, flags, false);
  auto* gramian = app.add_subcommand("gramian", "dump the controllability Gramian");
  add_common(gramian, flags, false);
  auto* steer = app.add_subcommand("steer", "single steering run");
  add_common(steer, flags, true);
  steer->add_option("--snapshots", flags.snapshots, "also write grid values every k-th time node");
  auto* sweep = app.add_subcommand("sweep", "lambda sweep of terminal errors");
  add_common(sweep, flags, false);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : evosteer::kExitConfig;
  }

  try {
    evosteer::RunConfig config = evosteer::load_config(flags.config);
    if (flags.seed) evosteer::apply_seed(config, *flags.seed);

    evosteer::CommandOptions options;
    options.lambda = flags.lambda;
    options.out_dir = flags.out;
    options.format = flags.format == "json" ? evosteer::OutputFormat::Json : evosteer::OutputFormat::Csv;
    options.snapshot_stride = flags.snapshots;
    if ((steer->parsed() || sweep->parsed()) && options.out_dir.empty()) options.out_dir = "out";

    int code = evosteer::kExitOk;
    if (check->parsed()) code = evosteer::cmd_check(config, options, std::cout);
    if (gramian->parsed()) code = evosteer::cmd_gramian(config, options, std::cout);
    if (steer->parsed()) code = evosteer::cmd_steer(config, options, std::cout);
    if (sweep->parsed()) code = evosteer::cmd_sweep(config, options, std::cout);
    if (code == evosteer::kExitInvariant) std::cerr << "evosteer: invariant check failed\n";
    if (code == evosteer::kExitNonConvergence) std::cerr << "evosteer: iteration did not converge\n";
    return code;
  } catch (const evosteer::Error& e) {
    std::cerr << "evosteer: " << e.what() << '\n';
    return e.kind() == evosteer::ErrorKind::SolverFailure ? evosteer::kExitNonConvergence
                                                          : evosteer::kExitConfig;
  } catch (const std::exception& e) {
    std::cerr << "evosteer: " << e.what() << '\n';
    return evosteer::kExitConfig;
  }
}
