#pragma once

#include <chrono>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include "fsaloha/activity.hpp"
#include "fsaloha/allocation.hpp"
#include "fsaloha/detector.hpp"
#include "fsaloha/harness/config.hpp"
#include "fsaloha/harness/parallel.hpp"
#include "fsaloha/harness/records.hpp"
#include "fsaloha/metrics.hpp"
#include "fsaloha/optimizer.hpp"
#include "fsaloha/random.hpp"

namespace fsaloha::harness {

namespace methods {
inline constexpr const char* kPerfect = "alg2_perfect";
inline constexpr const char* kErrors = "alg2_errors";
inline constexpr const char* kTrueWeight = "alg3_true_weight";
inline constexpr const char* kGreedy = "greedy";
inline constexpr const char* kAloha = "aloha";
inline constexpr const char* kInitial = "initial";

inline std::string perturbed(double sigma) {
  char buf[48];
  std::snprintf(buf, sizeof buf, "alg4_sigma=%g", sigma);
  return buf;
}
}  // namespace methods

/// The true activity law: the explicit vector, or one draw from
/// Unif[p_low, p_high] per device under the master seed.
inline ActivityProbabilities resolve_activity(const ExperimentConfig& c) {
  if (!c.activity.empty()) return ActivityProbabilities(c.activity);
  Rng rng = seed_plan(c.master_seed, 0, kEnvironmentStream);
  std::uniform_real_distribution<double> draw(c.p_low, c.p_high);
  std::vector<double> p(c.devices);
  for (double& v : p) v = draw(rng);
  return ActivityProbabilities(std::move(p));
}

/// Observation streams of one (sweep value, repetition) pair.
struct PointStreams {
  std::vector<ActivityVector> truth;
  std::vector<ActivityVector> observed;
  /// Factorized law of the observed vectors used as the weight denominator.
  ActivityProbabilities proposal;
  std::size_t detector_divergences = 0;
};

inline GampChannel make_gamp_channel(const ExperimentConfig& c, const ActivityProbabilities& p, double snr_db) {
  return GampChannel{p, c.detector.moduli, c.detector.pilot_length, noise_variance_from_snr_db(snr_db),
                     c.detector.gamp};
}

/// True activity depends only on (seed, rep); so does the randomness of the
/// error channel, which makes every method and sweep value share sample paths.
inline std::vector<ActivityVector> true_activity_stream(const ExperimentConfig& c, const ActivityProbabilities& p,
                                                        std::size_t rep) {
  Rng rng = seed_plan(c.master_seed, rep, kActivityStream);
  std::vector<ActivityVector> truth;
  truth.reserve(c.frames);
  for (std::size_t f = 0; f < c.frames; ++f) truth.push_back(sample_activity(p, rng));
  return truth;
}

inline PointStreams build_streams(const ExperimentConfig& c, const ActivityProbabilities& p,
                                  std::vector<ActivityVector> truth, double sweep_value, std::size_t rep) {
  PointStreams s;
  s.truth = std::move(truth);
  s.observed.reserve(s.truth.size());
  Rng channel = seed_plan(c.master_seed, rep, kChannelStream);
  switch (c.kind) {
    case ExperimentKind::example1: {
      const ActivityProbabilities alt(c.alt_activity);
      for (const auto& x : s.truth) s.observed.push_back(mixture_channel(x, alt, sweep_value, channel));
      s.proposal = mixture_marginals(p, alt, sweep_value);
      break;
    }
    case ExperimentKind::symmetric:
    case ExperimentKind::trajectory:
      for (const auto& x : s.truth) s.observed.push_back(flip_symmetric(x, sweep_value, channel));
      s.proposal = induced_proposal_symmetric(p, sweep_value);
      break;
    case ExperimentKind::asymmetric:
      for (const auto& x : s.truth) s.observed.push_back(flip_asymmetric(x, sweep_value, channel));
      s.proposal = induced_proposal_asymmetric(p, sweep_value);
      break;
    case ExperimentKind::gamp: {
      const GampChannel detector = make_gamp_channel(c, p, sweep_value);
      for (const auto& x : s.truth) {
        DetectionResult d = detector.detect(x, channel);
        s.detector_divergences += d.diverged ? 1 : 0;
        s.observed.push_back(std::move(d.hard_decision));
      }
      // The law of GAMP decisions has no closed form; estimate it on a separate run of the network.
      Rng calib = seed_plan(c.master_seed, rep, kProposalStream);
      std::vector<ActivityVector> calibration;
      calibration.reserve(c.detector.proposal_frames);
      for (std::size_t f = 0; f < c.detector.proposal_frames; ++f) {
        const ActivityVector x = sample_activity(p, calib);
        calibration.push_back(detector.detect(x, calib).hard_decision);
      }
      s.proposal = estimate_proposal_empirical(calibration);
      break;
    }
  }
  return s;
}

struct PointDiagnostics {
  double sweep_value = 0.0;
  std::size_t rep = 0;
  /// Fraction of device-frames where the observation differs from the truth.
  double observation_error_rate = 0.0;
  std::size_t detector_divergences = 0;
  std::size_t clipped_weights = 0;
  std::size_t zero_proposal_weights = 0;
};

struct ExperimentResult {
  ActivityProbabilities activity;
  std::vector<RunRecord> records;
  std::vector<PointDiagnostics> diagnostics;
};

namespace detail {

inline double error_rate(const std::vector<ActivityVector>& truth, const std::vector<ActivityVector>& observed) {
  std::size_t wrong = 0;
  std::size_t total = 0;
  for (std::size_t f = 0; f < truth.size(); ++f) {
    for (std::size_t i = 0; i < truth[f].size(); ++i) wrong += truth[f][i] != observed[f][i] ? 1 : 0;
    total += truth[f].size();
  }
  return total == 0 ? 0.0 : static_cast<double>(wrong) / static_cast<double>(total);
}

/// Frames at which trajectories are evaluated: 0, every cadence, and the last.
inline std::vector<std::size_t> evaluation_frames(std::size_t frames, std::size_t cadence) {
  std::vector<std::size_t> out{0};
  for (std::size_t f = cadence; f <= frames; f += cadence) out.push_back(f);
  if (out.back() != frames) out.push_back(frames);
  return out;
}

}  // namespace detail

/// Runs every method for one repetition across all sweep values.
inline void run_repetition(const ExperimentConfig& c, const ActivityProbabilities& p, std::size_t rep,
                           std::vector<RunRecord>& records, std::vector<PointDiagnostics>& diagnostics) {
  using clock = std::chrono::steady_clock;
  const std::string experiment = to_string(c.kind);
  const std::uint64_t rep_seed = derive_seed(c.master_seed, rep, kActivityStream, 0);
  const StepSchedule schedule = StepSchedule::constant(c.gamma, c.kappa);
  const auto evaluator = [&](const AllocationMatrix& a) { return normalized_throughput(a, p); };
  const auto frames_to_report = detail::evaluation_frames(c.frames, c.cadence);

  std::vector<AllocationMatrix> initials;
  for (std::size_t r = 0; r < c.restarts; ++r) {
    Rng init = seed_plan(c.master_seed, rep, kInitStream, r);
    initials.push_back(random_allocation(c.devices, c.slots, init));
  }

  auto emit_trajectory = [&](const std::string& method, double sweep, const Trajectory& traj, double ms) {
    for (const auto& snap : traj.snapshots) {
      records.push_back({experiment, method, sweep, rep, snap.frame, evaluator(snap.a), rep_seed, ms});
    }
  };
  auto emit_constant = [&](const std::string& method, double sweep, double value) {
    for (std::size_t f : frames_to_report) records.push_back({experiment, method, sweep, rep, f, value, rep_seed, 0.0});
  };
  auto timed = [&](auto&& body) {
    const auto t0 = clock::now();
    auto result = body();
    const double ms = std::chrono::duration<double, std::milli>(clock::now() - t0).count();
    return std::make_pair(std::move(result), c.record_timing ? ms : 0.0);
  };

  std::vector<ActivityVector> truth = true_activity_stream(c, p, rep);

  // Perfect detection sees the same stream at every sweep value.
  const auto [perfect, perfect_ms] = timed([&] {
    return multi_start(
        c.restarts, [&](std::size_t r) { return run_alg2(initials[r], truth, schedule, c.frames, c.cadence); },
        evaluator);
  });

  std::size_t best_initial = 0;
  for (std::size_t r = 1; r < initials.size(); ++r) {
    if (evaluator(initials[r]) > evaluator(initials[best_initial])) best_initial = r;
  }
  const double initial_value = evaluator(initials[best_initial]);
  const double aloha_value = evaluator(aloha_allocation(c.devices, c.slots));
  const bool greedy_defined = c.slots >= 2 && c.devices >= c.slots;
  const double greedy_value = greedy_defined ? evaluator(greedy_allocation(p, c.slots)) : 0.0;

  std::vector<std::pair<std::string, ActivityProbabilities>> perturbed_targets;
  for (double sigma : c.sigma_targets) {
    const std::string label = methods::perturbed(sigma);
    Rng rng = seed_plan(c.master_seed, rep, label);
    perturbed_targets.emplace_back(label, perturb_target(p, sigma, rng));
  }

  for (double sweep : c.sweep_values) {
    const PointStreams streams = build_streams(c, p, truth, sweep, rep);
    PointDiagnostics diag{sweep, rep, detail::error_rate(streams.truth, streams.observed),
                          streams.detector_divergences, 0, 0};

    emit_trajectory(methods::kPerfect, sweep, perfect.best, perfect_ms);

    const auto [errors, errors_ms] = timed([&] {
      return multi_start(
          c.restarts,
          [&](std::size_t r) { return run_alg2(initials[r], streams.observed, schedule, c.frames, c.cadence); },
          evaluator);
    });
    emit_trajectory(methods::kErrors, sweep, errors.best, errors_ms);

    auto weighted = [&](const std::string& label, const ActivityProbabilities& target) {
      const auto [res, ms] = timed([&] {
        return multi_start(
            c.restarts,
            [&](std::size_t r) {
              Trajectory t = run_alg4(initials[r], streams.observed, target, streams.proposal, schedule, c.frames,
                                      c.cadence);
              diag.clipped_weights += t.clipped_weights;
              diag.zero_proposal_weights += t.zero_proposal_weights;
              return t;
            },
            evaluator);
      });
      emit_trajectory(label, sweep, res.best, ms);
    };
    // The true-weight method uses the exact target with the same clip bound as the perturbed variants.
    weighted(methods::kTrueWeight, p);
    for (const auto& [label, target] : perturbed_targets) weighted(label, target);

    if (greedy_defined) emit_constant(methods::kGreedy, sweep, greedy_value);
    emit_constant(methods::kAloha, sweep, aloha_value);
    emit_constant(methods::kInitial, sweep, initial_value);
    diagnostics.push_back(diag);
  }
}

inline ExperimentResult run_experiment(const ExperimentConfig& c) {
  c.validate();
  ExperimentResult result;
  result.activity = resolve_activity(c);

  std::vector<std::vector<RunRecord>> per_rep(c.repetitions);
  std::vector<std::vector<PointDiagnostics>> per_rep_diag(c.repetitions);
  parallel_for(c.repetitions, c.threads,
               [&](std::size_t rep) { run_repetition(c, result.activity, rep, per_rep[rep], per_rep_diag[rep]); });

  for (std::size_t rep = 0; rep < c.repetitions; ++rep) {
    result.records.insert(result.records.end(), per_rep[rep].begin(), per_rep[rep].end());
    result.diagnostics.insert(result.diagnostics.end(), per_rep_diag[rep].begin(), per_rep_diag[rep].end());
  }
  sort_records(result.records);
  return result;
}

/// Resolved configuration, drawn activity law and per-point diagnostics.
inline std::string manifest_text(const ExperimentConfig& c, const ExperimentResult& result) {
  std::ostringstream os;
  os.precision(17);
  os << describe(c);
  os << "# activity law used for every repetition\n";
  os << "resolved-activity = ";
  for (std::size_t i = 0; i < result.activity.size(); ++i) os << (i ? "," : "") << result.activity[i];
  os << "\n# diagnostics: " << c.sweep_name()
     << " rep observation_error_rate detector_divergences clipped_weights zero_proposal_weights\n";
  for (const auto& d : result.diagnostics) {
    os << "# " << d.sweep_value << " " << d.rep << " " << d.observation_error_rate << " " << d.detector_divergences
       << " " << d.clipped_weights << " " << d.zero_proposal_weights << "\n";
  }
  return os.str();
}

struct OutputPaths {
  std::string csv;
  std::string manifest;
};

inline OutputPaths write_outputs(const ExperimentConfig& c, const ExperimentResult& result) {
  namespace fs = std::filesystem;
  fs::create_directories(c.output_dir);
  const std::string stem = (fs::path(c.output_dir) / to_string(c.kind)).string();
  OutputPaths paths{stem + ".csv", stem + ".manifest"};
  write_records(paths.csv, result.records);
  std::ofstream manifest(paths.manifest, std::ios::binary);
  if (!manifest) throw std::runtime_error("cannot open " + paths.manifest + " for writing");
  manifest << manifest_text(c, result);
  if (!manifest) throw std::runtime_error("failed writing " + paths.manifest);
  return paths;
}

}  // namespace fsaloha::harness
