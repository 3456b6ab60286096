// Command-line front end: dpgrr {run|validate|oracle} <config.json>

#include <iostream>
#include <optional>
#include <string>

#include "CLI11.hpp"
#include "dpgrr/experiment.hpp"

int main(int argc, char** argv) {
  CLI::App app{"Distributed proximal gradient with random reshuffling: experiment runner"};
  app.require_subcommand(1);

  std::string config;
  std::string output_dir;
  std::optional<std::uint64_t> seed;
  std::optional<double> tol;
  int verbose = 0;
  bool quiet = false;

  auto add_common = [&](CLI::App* sub) {
    sub->add_option("config", config, "experiment config (JSON)")->required()->check(CLI::ExistingFile);
    sub->add_flag("-v,--verbose", verbose, "more output (repeatable)");
    sub->add_flag("-q,--quiet", quiet, "only report errors");
  };

  auto* run = app.add_subcommand("run", "run every configured algorithm and write metrics CSVs");
  add_common(run);
  run->add_option("-o,--output", output_dir, "output directory (overrides the config)");
  run->add_option("-s,--seed", seed, "run a single seed instead of the config's seed list");

  auto* validate = app.add_subcommand("validate", "check graph schedule and step-size assumptions");
  add_common(validate);

  auto* oracle = app.add_subcommand("oracle", "solve the centralized problem and store F* / x*");
  add_common(oracle);
  oracle->add_option("--tol", tol, "gradient-mapping tolerance (default from config)");

  CLI11_PARSE(app, argc, argv);

  dpgrr::command_options opt;
  opt.verbosity = quiet ? 0 : 1 + verbose;
  opt.seed = seed;
  opt.oracle_tol = tol;
  if (!output_dir.empty()) opt.output_dir = output_dir;

  if (*run) return dpgrr::cmd_run(config, std::cout, opt);
  if (*validate) return dpgrr::cmd_validate(config, std::cout, opt);
  return dpgrr::cmd_oracle(config, std::cout, opt);
}
