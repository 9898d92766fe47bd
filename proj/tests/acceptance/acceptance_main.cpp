// Acceptance checks: one PASS / FAIL line per criterion.
//
//   acceptance                      run every criterion
//   acceptance --criterion <name>   run one criterion
//   acceptance --list               print the criterion names

#include <algorithm>
#include <chrono>
#include <cstdio>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <functional>
#include <sstream>
#include <string>
#include <thread>
#include <vector>

#include "fsaloha/fsaloha.hpp"
#include "fsaloha/harness.hpp"
#include "fsaloha/selftest.hpp"

namespace {

using namespace fsaloha;
using namespace fsaloha::harness;

struct Outcome {
  bool passed = false;
  std::string detail;
};

struct Criterion {
  std::string name;
  double time_limit_s;
  std::function<Outcome()> run;
};

std::size_t worker_count() { return std::max(1u, std::thread::hardware_concurrency()); }

std::string fmt(const char* format, auto... args) {
  char buf[512];
  std::snprintf(buf, sizeof buf, format, args...);
  return buf;
}

Outcome from_check(const selftest::CheckResult& r) { return {r.passed, r.detail}; }

double mean_of(const std::vector<SummaryRow>& rows, const std::string& method, double sweep) {
  const SummaryRow* row = find_row(rows, method, sweep);
  if (!row) throw std::runtime_error("no summary row for " + method + " at " + std::to_string(sweep));
  return row->mean;
}

std::vector<std::string> gradient_methods(const ExperimentConfig& c) {
  std::vector<std::string> out{methods::kPerfect, methods::kErrors, methods::kTrueWeight};
  for (double s : c.sigma_targets) out.push_back(methods::perturbed(s));
  return out;
}

std::vector<SummaryRow> run_and_summarize(const ExperimentConfig& c) {
  return summarize(run_experiment(c).records);
}

std::string file_bytes(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  std::ostringstream os;
  os << in.rdbuf();
  return os.str();
}

Outcome determinism() {
  namespace fs = std::filesystem;
  const fs::path root = fs::temp_directory_path() / fmt("fsaloha_determinism_%d", static_cast<int>(::getpid()));
  ExperimentConfig c = ExperimentConfig::defaults(ExperimentKind::example1);
  std::vector<std::string> csv;
  for (std::size_t threads : {std::size_t{1}, std::size_t{1}, worker_count() > 1 ? worker_count() : 3}) {
    c.threads = threads;
    c.output_dir = (root / std::to_string(csv.size())).string();
    csv.push_back(file_bytes(write_outputs(c, run_experiment(c)).csv));
  }
  fs::remove_all(root);
  const bool rerun = csv[0] == csv[1] && !csv[0].empty();
  const bool threads = csv[0] == csv[2];
  return {rerun && threads, fmt("re-run identical: %s, parallel run identical: %s, %zu bytes", rerun ? "yes" : "no",
                                threads ? "yes" : "no", csv[0].size())};
}

Outcome example1() {
  ExperimentConfig c = ExperimentConfig::defaults(ExperimentKind::example1);
  c.threads = worker_count();
  const auto result = run_experiment(c);
  const auto rows = summarize(result.records);
  const double load = result.activity.sum();
  const double clean = mean_of(rows, methods::kErrors, 0.0);
  const double confused = mean_of(rows, methods::kErrors, 1.0);
  const double drop = (clean - confused) / clean;
  const double aloha = expected_throughput_independent(aloha_allocation(3, 2), result.activity);
  const bool drop_ok = drop >= 0.25 && drop <= 0.45;
  const bool below_aloha = confused * load < aloha;

  // Diagnostic only: the same sweep end point without restart selection.
  ExperimentConfig single = c;
  single.restarts = 1;
  single.sweep_values = {1.0};
  const double single_confused = mean_of(run_and_summarize(single), methods::kErrors, 1.0) * load;

  return {drop_ok && below_aloha,
          fmt("throughput eps=0 %.4f, eps=1 %.4f, drop %.1f%% (band 25-45%%), eps=1 vs ALOHA %.4f: %s "
              "(single restart eps=1: %.4f)",
              clean * load, confused * load, 100.0 * drop, aloha, below_aloha ? "below" : "NOT below",
              single_confused)};
}

Outcome symmetric() {
  ExperimentConfig c = ExperimentConfig::defaults(ExperimentKind::symmetric);
  c.sweep_values = {0.0, 0.05, 0.15, 0.35};
  c.threads = worker_count();
  const auto rows = run_and_summarize(c);
  const double errors = mean_of(rows, methods::kErrors, 0.35);
  const double gain = mean_of(rows, methods::kTrueWeight, 0.35) / errors - 1.0;
  bool sigma_ok = true;
  std::string sigma_detail;
  for (double s : c.sigma_targets) {
    const double v = mean_of(rows, methods::perturbed(s), 0.35);
    sigma_ok = sigma_ok && v > errors;
    sigma_detail += fmt(" sigma=%g %+.1f%%", s, 100.0 * (v / errors - 1.0));
  }
  double worst_spread = 0.0;
  for (double sweep : {0.0, 0.05, 0.15}) {
    double lo = 1e300, hi = -1e300;
    for (const auto& m : gradient_methods(c)) {
      lo = std::min(lo, mean_of(rows, m, sweep));
      hi = std::max(hi, mean_of(rows, m, sweep));
    }
    worst_spread = std::max(worst_spread, (hi - lo) / hi);
  }
  const bool gain_ok = gain >= 0.10;
  const bool spread_ok = worst_spread <= 0.05;
  return {gain_ok && sigma_ok && spread_ok,
          fmt("p_flip=0.35 true-weight gain %+.1f%% (need >= 10%%);%s over error-stream (need > 0); "
              "largest spread at p_flip<=0.15 %.1f%% (need <= 5%%)",
              100.0 * gain, sigma_detail.c_str(), 100.0 * worst_spread)};
}

Outcome asymmetric() {
  ExperimentConfig c = ExperimentConfig::defaults(ExperimentKind::asymmetric);
  c.threads = worker_count();
  const auto rows = run_and_summarize(c);
  const double gain = mean_of(rows, methods::kTrueWeight, 0.4) / mean_of(rows, methods::kErrors, 0.4) - 1.0;
  // Greedy is best when no other method beats it at any sweep value.
  std::string beaten;
  for (double sweep : c.sweep_values) {
    const double greedy = mean_of(rows, methods::kGreedy, sweep);
    for (const auto& row : rows) {
      if (row.sweep_value == sweep && row.method != methods::kGreedy && row.mean > greedy) {
        beaten += fmt(" %s@%g(%.4f>%.4f)", row.method.c_str(), sweep, row.mean, greedy);
      }
    }
  }
  const bool gain_ok = gain >= 0.15;
  return {gain_ok && beaten.empty(),
          fmt("p_miss=0.4 true-weight gain %+.1f%% (need >= 15%%); greedy best at every p_miss: %s%s", 100.0 * gain,
              beaten.empty() ? "yes" : "no, beaten by", beaten.c_str())};
}

Outcome gamp() {
  ExperimentConfig c = ExperimentConfig::defaults(ExperimentKind::gamp);
  c.sweep_values = {0.0, 18.0, 21.0};
  c.threads = worker_count();
  const auto rows = run_and_summarize(c);
  const double errors = mean_of(rows, methods::kErrors, 0.0);
  bool low_ok = true;
  std::string low;
  for (double s : c.sigma_targets) {
    const double g = mean_of(rows, methods::perturbed(s), 0.0) / errors - 1.0;
    low_ok = low_ok && g >= 0.05;
    low += fmt(" sigma=%g %+.1f%%", s, 100.0 * g);
  }
  bool high_ok = true;
  double worst = 0.0;
  for (double snr : {18.0, 21.0}) {
    const double perfect = mean_of(rows, methods::kPerfect, snr);
    for (const auto& m : gradient_methods(c)) {
      const double shortfall = 1.0 - mean_of(rows, m, snr) / perfect;
      worst = std::max(worst, shortfall);
      high_ok = high_ok && shortfall <= 0.05;
    }
  }
  return {low_ok && high_ok, fmt("0 dB gain over error-stream:%s (need >= 5%%); largest shortfall vs perfect at "
                                 ">= 18 dB %.1f%% (need <= 5%%)",
                                 low.c_str(), 100.0 * worst)};
}

constexpr std::size_t kTheoremRuns = 20;
constexpr std::size_t kTheoremFrames = 500;
constexpr std::size_t kTheoremRestarts = 12;

Outcome theorem1_surrogate() {
  const ActivityProbabilities p({0.3, 0.4, 0.9});
  const StepSchedule schedule = StepSchedule::harmonic(0.5);
  std::size_t below = 0;
  double worst = 0.0;
  for (std::size_t run = 0; run < kTheoremRuns; ++run) {
    Rng activity = seed_plan(1, run, kActivityStream);
    std::vector<ActivityVector> obs;
    for (std::size_t f = 0; f < kTheoremFrames; ++f) obs.push_back(sample_activity(p, activity));
    // Same multi-start protocol as the Example 1 experiment.
    const auto best = multi_start(
        kTheoremRestarts,
        [&](std::size_t r) {
          Rng init = seed_plan(1, run, kInitStream, r);
          return run_alg2(random_allocation(3, 2, init), obs, schedule, kTheoremFrames);
        },
        [&](const AllocationMatrix& a) { return normalized_throughput(a, p); });
    const double r = stationarity_residual(best.best.final_allocation(), p);
    below += r < 1e-2 ? 1 : 0;
    worst = std::max(worst, r);
  }
  const double share = static_cast<double>(below) / kTheoremRuns;
  return {share >= 0.9, fmt("%zu of %zu runs below 1e-2 after %zu frames (need >= 90%%), largest residual %.3g", below,
                            kTheoremRuns, kTheoremFrames, worst)};
}

std::vector<Criterion> criteria() {
  return {
      {"gradient-unbiasedness", 10.0, [] { return from_check(selftest::gradient_unbiasedness()); }},
      {"importance-identity", 10.0, [] { return from_check(selftest::importance_identity()); }},
      {"oracle-equivalence", 0.0, [] { return from_check(selftest::throughput_oracle_equivalence()); }},
      {"projection", 0.0, [] { return from_check(selftest::projection_correctness()); }},
      {"determinism", 0.0, determinism},
      {"example1", 60.0, example1},
      {"theorem1-surrogate", 0.0, theorem1_surrogate},
      {"symmetric", 1800.0, symmetric},
      {"asymmetric", 1800.0, asymmetric},
      {"gamp", 7200.0, gamp},
  };
}

}  // namespace

int main(int argc, char** argv) {
  std::string only;
  for (int i = 1; i < argc; ++i) {
    if (std::strcmp(argv[i], "--criterion") == 0 && i + 1 < argc) {
      only = argv[++i];
    } else if (std::strcmp(argv[i], "--list") == 0) {
      for (const auto& c : criteria()) std::printf("%s\n", c.name.c_str());
      return 0;
    } else {
      std::fprintf(stderr, "usage: %s [--criterion <name>] [--list]\n", argv[0]);
      return 2;
    }
  }

  bool all_passed = true;
  bool matched = false;
  for (const auto& c : criteria()) {
    if (!only.empty() && c.name != only) continue;
    matched = true;
    const auto t0 = std::chrono::steady_clock::now();
    Outcome o;
    try {
      o = c.run();
    } catch (const std::exception& e) {
      o = {false, std::string("exception: ") + e.what()};
    }
    const double seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    std::string timing = fmt("%.1f s", seconds);
    if (c.time_limit_s > 0.0) {
      const bool in_time = seconds < c.time_limit_s;
      o.passed = o.passed && in_time;
      timing += fmt(in_time ? " < %.0f s" : " EXCEEDS %.0f s", c.time_limit_s);
    }
    std::printf("%s %s: %s [%s]\n", o.passed ? "PASS" : "FAIL", c.name.c_str(), o.detail.c_str(), timing.c_str());
    std::fflush(stdout);
    all_passed = all_passed && o.passed;
  }
  if (!matched) {
    std::fprintf(stderr, "unknown criterion '%s'\n", only.c_str());
    return 2;
  }
  return all_passed ? 0 : 1;
}
