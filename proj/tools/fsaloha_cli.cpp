// Command line driver: one subcommand per experiment plus the oracle self-test.

#include <CLI11.hpp>

#include <chrono>
#include <cstdio>
#include <iostream>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "fsaloha/harness.hpp"
#include "fsaloha/selftest.hpp"

namespace {

using fsaloha::harness::ExperimentConfig;
using fsaloha::harness::ExperimentKind;

/// Flags given on the command line, kept as text and applied after the config file.
struct Overrides {
  std::map<std::string, std::string> values;
  std::vector<double> sigma_targets;
  std::string config_path;
  bool quiet = false;
};

void add_experiment_flags(CLI::App* cmd, Overrides& o) {
  auto text_flag = [&](const std::string& name, const std::string& help) {
    cmd->add_option_function<std::string>("--" + name, [&o, name](const std::string& v) { o.values[name] = v; }, help);
  };
  text_flag("frames", "frames per run");
  text_flag("reps", "independent repetitions");
  text_flag("restarts", "random initial matrices per method");
  text_flag("gamma", "constant step size");
  text_flag("kappa", "importance weight clip");
  cmd->add_option("--sigma-target", o.sigma_targets, "target perturbation std (repeatable)")->allow_extra_args(false);
  text_flag("sweep", "comma separated sweep values");
  text_flag("seed", "master seed");
  text_flag("out", "output directory");
  text_flag("threads", "worker threads over repetitions");
  text_flag("cadence", "frames between evaluations");
  text_flag("devices", "number of devices N");
  text_flag("slots", "number of slots K");
  text_flag("activity", "explicit activity vector");
  text_flag("p-range", "uniform range lo,hi for the activity draw");
  cmd->add_flag_function(
      "--record-timing", [&o](std::int64_t) { o.values["record-timing"] = "1"; }, "store wall time in the CSV");
  cmd->add_option("--config", o.config_path, "key = value settings file")->check(CLI::ExistingFile);
  cmd->add_flag("--quiet", o.quiet, "suppress the summary table");
}

ExperimentConfig resolve(ExperimentKind kind, const Overrides& o) {
  ExperimentConfig c = ExperimentConfig::defaults(kind);
  if (!o.config_path.empty()) {
    for (const auto& [key, value] : fsaloha::harness::read_config_file(o.config_path)) {
      if (key == "experiment" && fsaloha::harness::parse_kind(value) != kind) {
        throw std::invalid_argument(o.config_path + ": experiment '" + value + "' does not match the subcommand");
      }
      fsaloha::harness::apply_setting(c, key, value);
    }
  }
  for (const auto& [key, value] : o.values) fsaloha::harness::apply_setting(c, key, value);
  if (!o.sigma_targets.empty()) c.sigma_targets = o.sigma_targets;
  c.validate();
  return c;
}

int run(ExperimentKind kind, const Overrides& o) {
  const ExperimentConfig c = resolve(kind, o);
  const auto t0 = std::chrono::steady_clock::now();
  const auto result = fsaloha::harness::run_experiment(c);
  const auto paths = fsaloha::harness::write_outputs(c, result);
  const double seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();

  if (!o.quiet) {
    std::printf("%-22s %10s %10s %10s\n", "method", c.sweep_name().c_str(), "mean", "std");
    for (const auto& row : fsaloha::harness::summarize(result.records)) {
      std::printf("%-22s %10.4g %10.5f %10.5f\n", row.method.c_str(), row.sweep_value, row.mean, row.stddev);
    }
  }
  std::printf("wrote %s (%zu records) and %s in %.1f s\n", paths.csv.c_str(), result.records.size(),
              paths.manifest.c_str(), seconds);
  return 0;
}

int selftest() {
  bool ok = true;
  for (const auto& check : fsaloha::selftest::run_all()) {
    std::printf("%s %s: %s (%.2f s)\n", check.passed ? "PASS" : "FAIL", check.name.c_str(), check.detail.c_str(),
                check.seconds);
    ok = ok && check.passed;
  }
  return ok ? 0 : 1;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Frame slotted ALOHA allocation optimizer under activity detection errors"};
  app.require_subcommand(1);

  const std::vector<std::pair<std::string, ExperimentKind>> commands = {
      {"example1", ExperimentKind::example1},
      {"sweep-symmetric", ExperimentKind::symmetric},
      {"sweep-asymmetric", ExperimentKind::asymmetric},
      {"sweep-gamp", ExperimentKind::gamp},
      {"trajectory", ExperimentKind::trajectory},
  };
  std::vector<Overrides> overrides(commands.size());
  std::vector<CLI::App*> subs;
  for (std::size_t i = 0; i < commands.size(); ++i) {
    auto* cmd = app.add_subcommand(commands[i].first, "run the " + commands[i].first + " experiment");
    add_experiment_flags(cmd, overrides[i]);
    subs.push_back(cmd);
  }
  auto* check = app.add_subcommand("selftest", "run the enumeration and finite-difference oracle checks");

  CLI11_PARSE(app, argc, argv);

  try {
    if (check->parsed()) return selftest();
    for (std::size_t i = 0; i < subs.size(); ++i) {
      if (subs[i]->parsed()) return run(commands[i].second, overrides[i]);
    }
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  }
  return 1;
}
