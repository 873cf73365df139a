// Command-line front end: parse a config file, dispatch to the library,
// emit one report artifact.  Exit 0 on pass/complete, 2 on a failing
// experiment verdict, 1 on any error.

#include <cstdint>
#include <fstream>
#include <iostream>
#include <sstream>
#include <string>

#include <CLI11.hpp>
#include <json.hpp>

#include "dpstat/dpstat.hpp"

namespace {

std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw dpstat::Error("cannot read config: " + path);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{
      "dpstat: differentially private estimation of one-dimensional "
      "statistics, with seeded experiment and audit harnesses"};
  app.require_subcommand(1);
  app.footer(dpstat::config_keys_help());

  std::string config_path;
  std::string experiment_name;
  std::uint64_t seed_flag = 0;
  std::string out_flag;
  std::string format_flag;
  std::uint64_t threads_flag = 1;

  auto add_common = [&](CLI::App* cmd) {
    cmd->add_option("--config", config_path, "config file (key = value lines)")
        ->required();
    cmd->add_option("--seed", seed_flag, "root seed; overrides the config");
    cmd->add_option("--out", out_flag, "output path; overrides the config");
    cmd->add_option("--format", format_flag,
                    "csv | json; overrides the config");
    cmd->add_option("--threads", threads_flag,
                    "worker count contract; overrides the config");
  };

  CLI::App* cmds[5];
  cmds[0] = app.add_subcommand("estimate", "one private release of a statistic");
  cmds[1] = app.add_subcommand(
      "sensitivity", "local and smooth sensitivity on a drawn sample");
  cmds[2] = app.add_subcommand(
      "bounds", "closed-form bound and sample-size calculators");
  cmds[3] = app.add_subcommand(
      "audit", "empirical neighboring-dataset audit of a mechanism");
  cmds[4] = app.add_subcommand(
      "experiment",
      "seeded Monte Carlo experiment: convergence, "
      "lower-bound-contamination, lower-bound-range, coverage-laplace, "
      "coverage-expmech, rate");
  cmds[4]
      ->add_option("name", experiment_name, "experiment name")
      ->required();
  for (CLI::App* c : cmds) add_common(c);

  CLI11_PARSE(app, argc, argv);

  CLI::App* sub = app.get_subcommands().front();
  try {
    dpstat::RunConfig cfg =
        dpstat::parse_config(read_file(config_path), sub->get_name());
    cfg.experiment = experiment_name;
    if (sub->count("--seed"))
      cfg.set("seed", std::to_string(seed_flag), false);
    if (sub->count("--out")) cfg.set("out", out_flag, false);
    if (sub->count("--format")) cfg.set("format", format_flag, false);
    if (sub->count("--threads"))
      cfg.set("threads", std::to_string(threads_flag), false);
    return dpstat::run(cfg, std::cout, std::cerr);
  } catch (const dpstat::Error& e) {
    nlohmann::ordered_json j;
    j["schema"] = 1;
    j["error"] = e.what();
    j["command"] = sub->get_name();
    std::cerr << j.dump() << "\n";
    return 1;
  }
}
