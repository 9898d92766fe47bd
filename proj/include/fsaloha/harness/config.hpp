#pragma once

#include <cstdint>
#include <fstream>
#include <optional>
#include <sstream>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "fsaloha/detector.hpp"

namespace fsaloha::harness {

enum class ExperimentKind { example1, symmetric, asymmetric, gamp, trajectory };

inline std::string to_string(ExperimentKind kind) {
  switch (kind) {
    case ExperimentKind::example1: return "example1";
    case ExperimentKind::symmetric: return "symmetric";
    case ExperimentKind::asymmetric: return "asymmetric";
    case ExperimentKind::gamp: return "gamp";
    case ExperimentKind::trajectory: return "trajectory";
  }
  return "unknown";
}

inline ExperimentKind parse_kind(const std::string& text) {
  if (text == "example1") return ExperimentKind::example1;
  if (text == "symmetric" || text == "sweep-symmetric") return ExperimentKind::symmetric;
  if (text == "asymmetric" || text == "sweep-asymmetric") return ExperimentKind::asymmetric;
  if (text == "gamp" || text == "sweep-gamp") return ExperimentKind::gamp;
  if (text == "trajectory") return ExperimentKind::trajectory;
  throw std::invalid_argument("unknown experiment kind '" + text + "'");
}

/// Activity probabilities of the experiment network used in the GAMP study.
inline const std::vector<double>& gamp_activity_profile() {
  static const std::vector<double> p{0.01, 0.03, 0.09, 0.14, 0.21, 0.21, 0.23, 0.27, 0.32, 0.33,
                                     0.34, 0.42, 0.43, 0.47, 0.52, 0.56, 0.58, 0.61, 0.65, 0.8};
  return p;
}

inline const std::vector<double>& gamp_channel_moduli() {
  static const std::vector<double> h{1.6, 0.8, 0.5, 0.5, 1.2, 1.0, 2.4, 0.3, 1.0, 0.1,
                                     0.5, 1.2, 1.7, 0.2, 2.5, 1.6, 2.1, 1.4, 0.5, 0.2};
  return h;
}

struct DetectorConfig {
  std::size_t pilot_length = 15;
  std::vector<double> moduli = gamp_channel_moduli();
  GampSettings gamp;
  /// Frames used to estimate the law of detected vectors.
  std::size_t proposal_frames = 10000;
};

struct ExperimentConfig {
  ExperimentKind kind = ExperimentKind::symmetric;
  std::size_t devices = 20;
  std::size_t slots = 5;
  std::size_t frames = 10000;
  std::size_t repetitions = 20;
  std::size_t restarts = 12;
  std::size_t cadence = 50;
  std::size_t threads = 1;
  double gamma = 0.01;
  double kappa = 5.0;
  std::vector<double> sigma_targets{0.05, 0.1, 0.2};
  /// epsilon, p_flip, p_miss or SNR in dB depending on the kind.
  std::vector<double> sweep_values;
  /// Explicit activity vector; when empty p is drawn once from Unif[p_low, p_high].
  std::vector<double> activity;
  double p_low = 0.0;
  double p_high = 0.45;
  /// Law of the confused observations in example1.
  std::vector<double> alt_activity;
  DetectorConfig detector;
  std::uint64_t master_seed = 1;
  std::string output_dir = "results";
  /// Wall time goes into the CSV only on request, so default output is reproducible.
  bool record_timing = false;

  static ExperimentConfig defaults(ExperimentKind kind) {
    ExperimentConfig c;
    c.kind = kind;
    switch (kind) {
      case ExperimentKind::example1:
        c.devices = 3;
        c.slots = 2;
        c.frames = 500;
        c.cadence = 10;
        c.activity = {0.3, 0.4, 0.9};
        c.alt_activity = {0.9, 0.4, 0.3};
        c.sigma_targets = {};
        c.sweep_values = {0.0, 0.1, 0.2, 0.3, 0.4, 0.5, 0.6, 0.7, 0.8, 0.9, 1.0};
        break;
      case ExperimentKind::symmetric:
        c.p_high = 0.45;
        c.sweep_values = {0.0, 0.05, 0.15, 0.25, 0.35, 0.45, 0.5};
        break;
      case ExperimentKind::trajectory:
        c.p_high = 0.45;
        c.sweep_values = {0.35};
        break;
      case ExperimentKind::asymmetric:
        c.p_high = 0.9;
        c.sweep_values = {0.0, 0.1, 0.2, 0.3, 0.4, 0.5};
        break;
      case ExperimentKind::gamp:
        c.activity = gamp_activity_profile();
        c.sweep_values = {0.0, 3.0, 6.0, 9.0, 12.0, 15.0, 18.0, 21.0};
        break;
    }
    return c;
  }

  /// Sweep parameter name used in logs and manifests.
  std::string sweep_name() const {
    switch (kind) {
      case ExperimentKind::example1: return "epsilon";
      case ExperimentKind::symmetric:
      case ExperimentKind::trajectory: return "p_flip";
      case ExperimentKind::asymmetric: return "p_miss";
      case ExperimentKind::gamp: return "snr_db";
    }
    return "value";
  }

  void validate() const {
    auto fail = [](const std::string& msg) { throw std::invalid_argument("invalid config: " + msg); };
    if (devices < 1 || slots < 1) fail("N and K must be positive");
    if (frames < 1) fail("frames must be positive");
    if (repetitions < 1) fail("reps must be positive");
    if (restarts < 1) fail("restarts must be positive");
    if (cadence < 1) fail("cadence must be positive");
    if (threads < 1) fail("threads must be positive");
    if (!(gamma > 0.0)) fail("gamma must be positive");
    if (!(kappa > 0.0)) fail("kappa must be positive");
    for (double s : sigma_targets) {
      if (!(s >= 0.0)) fail("sigma-target values must be nonnegative");
    }
    if (sweep_values.empty()) fail("sweep must list at least one value");
    for (double v : sweep_values) {
      switch (kind) {
        case ExperimentKind::example1:
          if (!(v >= 0.0 && v <= 1.0)) fail("epsilon sweep values must lie in [0,1]");
          break;
        case ExperimentKind::symmetric:
        case ExperimentKind::trajectory:
        case ExperimentKind::asymmetric:
          if (!(v >= 0.0 && v <= 0.5)) fail(sweep_name() + " sweep values must lie in [0,0.5]");
          break;
        case ExperimentKind::gamp:
          if (!std::isfinite(v)) fail("SNR sweep values must be finite");
          break;
      }
    }
    if (!activity.empty() && activity.size() != devices) fail("activity vector length must equal N");
    if (activity.empty() && !(p_low >= 0.0 && p_low <= p_high && p_high <= 1.0)) fail("p-range must satisfy 0<=lo<=hi<=1");
    if (kind == ExperimentKind::example1 && alt_activity.size() != devices) fail("alt-activity length must equal N");
    if (kind == ExperimentKind::gamp) {
      if (detector.moduli.size() != devices) fail("channel moduli length must equal N");
      if (detector.pilot_length < 1) fail("pilot length must be positive");
      if (detector.proposal_frames < 1) fail("proposal frames must be positive");
      if (!(detector.gamp.damping > 0.0 && detector.gamp.damping <= 1.0)) fail("damping must lie in (0,1]");
    }
  }
};

namespace detail {

inline std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return "";
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

inline std::vector<double> parse_list(const std::string& text) {
  std::vector<double> out;
  std::stringstream ss(text);
  std::string item;
  while (std::getline(ss, item, ',')) {
    item = trim(item);
    if (item.empty()) continue;
    std::size_t used = 0;
    const double v = std::stod(item, &used);
    if (used != item.size()) throw std::invalid_argument("bad number '" + item + "'");
    out.push_back(v);
  }
  return out;
}

inline std::size_t parse_count(const std::string& text) {
  std::size_t used = 0;
  const long long v = std::stoll(text, &used);
  if (used != text.size() || v < 0) throw std::invalid_argument("bad count '" + text + "'");
  return static_cast<std::size_t>(v);
}

inline double parse_real(const std::string& text) {
  std::size_t used = 0;
  const double v = std::stod(text, &used);
  if (used != text.size()) throw std::invalid_argument("bad number '" + text + "'");
  return v;
}

inline std::string join(const std::vector<double>& values) {
  std::ostringstream os;
  os.precision(17);
  for (std::size_t i = 0; i < values.size(); ++i) os << (i ? "," : "") << values[i];
  return os.str();
}

}  // namespace detail

/// Applies one `key = value` setting. Keys match the long CLI flag names.
inline void apply_setting(ExperimentConfig& c, const std::string& key, const std::string& value) {
  using namespace detail;
  try {
    if (key == "experiment") c.kind = parse_kind(value);
    else if (key == "devices" || key == "N") c.devices = parse_count(value);
    else if (key == "slots" || key == "K") c.slots = parse_count(value);
    else if (key == "frames") c.frames = parse_count(value);
    else if (key == "reps") c.repetitions = parse_count(value);
    else if (key == "restarts") c.restarts = parse_count(value);
    else if (key == "cadence") c.cadence = parse_count(value);
    else if (key == "threads") c.threads = parse_count(value);
    else if (key == "gamma") c.gamma = parse_real(value);
    else if (key == "kappa") c.kappa = parse_real(value);
    else if (key == "sigma-target") c.sigma_targets = parse_list(value);
    else if (key == "sweep") c.sweep_values = parse_list(value);
    else if (key == "activity") c.activity = parse_list(value);
    else if (key == "alt-activity") c.alt_activity = parse_list(value);
    else if (key == "p-range") {
      const auto r = parse_list(value);
      if (r.size() != 2) throw std::invalid_argument("p-range needs two values");
      c.p_low = r[0];
      c.p_high = r[1];
      c.activity.clear();
    } else if (key == "moduli") c.detector.moduli = parse_list(value);
    else if (key == "pilot-length") c.detector.pilot_length = parse_count(value);
    else if (key == "proposal-frames") c.detector.proposal_frames = parse_count(value);
    else if (key == "gamp-iters") c.detector.gamp.max_iters = parse_count(value);
    else if (key == "gamp-damping") c.detector.gamp.damping = parse_real(value);
    else if (key == "gamp-tol") c.detector.gamp.tolerance = parse_real(value);
    else if (key == "threshold") c.detector.gamp.threshold = parse_real(value);
    else if (key == "seed") c.master_seed = std::stoull(value);
    else if (key == "out") c.output_dir = value;
    else if (key == "record-timing") c.record_timing = (value == "1" || value == "true" || value == "yes");
    else throw std::invalid_argument("unknown setting '" + key + "'");
  } catch (const std::invalid_argument& e) {
    throw std::invalid_argument("setting '" + key + "': " + e.what());
  } catch (const std::out_of_range&) {
    throw std::invalid_argument("setting '" + key + "': value out of range");
  }
}

/// Reads `key = value` lines; `#` starts a comment.
inline std::vector<std::pair<std::string, std::string>> read_config_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open config file " + path);
  std::vector<std::pair<std::string, std::string>> out;
  std::string line;
  std::size_t number = 0;
  while (std::getline(in, line)) {
    ++number;
    if (const auto hash = line.find('#'); hash != std::string::npos) line.erase(hash);
    line = detail::trim(line);
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos) {
      throw std::invalid_argument(path + ":" + std::to_string(number) + ": expected 'key = value'");
    }
    out.emplace_back(detail::trim(line.substr(0, eq)), detail::trim(line.substr(eq + 1)));
  }
  return out;
}

/// Resolved configuration as `key = value` lines, readable by read_config_file.
inline std::string describe(const ExperimentConfig& c) {
  using detail::join;
  std::ostringstream os;
  os.precision(17);
  os << "experiment = " << to_string(c.kind) << "\n"
     << "N = " << c.devices << "\n"
     << "K = " << c.slots << "\n"
     << "frames = " << c.frames << "\n"
     << "reps = " << c.repetitions << "\n"
     << "restarts = " << c.restarts << "\n"
     << "cadence = " << c.cadence << "\n"
     << "gamma = " << c.gamma << "\n"
     << "kappa = " << c.kappa << "\n"
     << "sigma-target = " << join(c.sigma_targets) << "\n"
     << "sweep = " << join(c.sweep_values) << "\n";
  if (c.activity.empty()) {
    os << "p-range = " << c.p_low << "," << c.p_high << "\n";
  } else {
    os << "activity = " << join(c.activity) << "\n";
  }
  if (!c.alt_activity.empty()) os << "alt-activity = " << join(c.alt_activity) << "\n";
  if (c.kind == ExperimentKind::gamp) {
    os << "moduli = " << join(c.detector.moduli) << "\n"
       << "pilot-length = " << c.detector.pilot_length << "\n"
       << "proposal-frames = " << c.detector.proposal_frames << "\n"
       << "gamp-iters = " << c.detector.gamp.max_iters << "\n"
       << "gamp-damping = " << c.detector.gamp.damping << "\n"
       << "gamp-tol = " << c.detector.gamp.tolerance << "\n"
       << "threshold = " << c.detector.gamp.threshold << "\n";
  }
  os << "seed = " << c.master_seed << "\n";
  return os.str();
}

}  // namespace fsaloha::harness
