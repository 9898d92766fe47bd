#pragma once

#include <cstdint>
#include <functional>
#include <optional>
#include <span>
#include <stdexcept>
#include <vector>

#include "fsaloha/activity.hpp"
#include "fsaloha/allocation.hpp"
#include "fsaloha/metrics.hpp"
#include "fsaloha/types.hpp"

namespace fsaloha {

namespace detail {

/// Probabilities that no device / exactly one device lands in a slot when
/// device m lands there independently with probability a_m.
struct SlotOccupancy {
  double none = 1.0;
  double one = 0.0;

  SlotOccupancy with(double a) const { return {none * (1.0 - a), one * (1.0 - a) + none * a}; }
  SlotOccupancy merge(const SlotOccupancy& other) const {
    return {none * other.none, none * other.one + one * other.none};
  }
};

/// Shared O(NK) gradient: entry (q, l) is scale_q * (P0_{-q} - P1_{-q}) where
/// P0/P1 are the no-device / one-device probabilities of slot l with device q
/// left out and device m present with probability scale_m * A_ml. Leave-one-out
/// terms come from prefix and suffix products, so no division is needed.
inline GradientMatrix leave_one_out_gradient(const AllocationMatrix& a, std::span<const double> scale) {
  const std::size_t n = a.devices();
  const std::size_t k = a.slots();
  GradientMatrix g = GradientMatrix::zeros(n, k);
  std::vector<SlotOccupancy> suffix(n + 1);
  for (std::size_t l = 0; l < k; ++l) {
    suffix[n] = SlotOccupancy{};
    for (std::size_t m = n; m-- > 0;) suffix[m] = suffix[m + 1].with(scale[m] * a(m, l));
    SlotOccupancy prefix;
    for (std::size_t q = 0; q < n; ++q) {
      if (scale[q] != 0.0) {
        const SlotOccupancy others = prefix.merge(suffix[q + 1]);
        g.entries(static_cast<Eigen::Index>(q), static_cast<Eigen::Index>(l)) = scale[q] * (others.none - others.one);
      }
      prefix = prefix.with(scale[q] * a(q, l));
    }
  }
  return g;
}

inline std::vector<double> as_scale(const ActivityVector& x) {
  std::vector<double> s(x.size());
  for (std::size_t i = 0; i < x.size(); ++i) s[i] = x[i] ? 1.0 : 0.0;
  return s;
}

}  // namespace detail

/// Stochastic gradient g(A; x) of the instantaneous throughput.
inline GradientMatrix stochastic_gradient(const AllocationMatrix& a, const ActivityVector& x) {
  detail::require_same_size(a.devices(), x.size(), "stochastic_gradient");
  const auto scale = detail::as_scale(x);
  return detail::leave_one_out_gradient(a, scale);
}

/// Term-by-term O(N^2 K) evaluation of the same gradient. Reference for the fast path.
inline GradientMatrix stochastic_gradient_direct(const AllocationMatrix& a, const ActivityVector& x) {
  detail::require_same_size(a.devices(), x.size(), "stochastic_gradient_direct");
  const std::size_t n = a.devices();
  const std::size_t k = a.slots();
  auto xa = [&](std::size_t m, std::size_t l) { return x[m] ? a(m, l) : 0.0; };
  GradientMatrix g = GradientMatrix::zeros(n, k);
  for (std::size_t q = 0; q < n; ++q) {
    if (!x[q]) continue;
    for (std::size_t l = 0; l < k; ++l) {
      double own = 1.0;
      for (std::size_t m = 0; m < n; ++m) {
        if (m != q) own *= 1.0 - xa(m, l);
      }
      double others = 0.0;
      for (std::size_t nn = 0; nn < n; ++nn) {
        if (nn == q || !x[nn]) continue;
        double term = a(nn, l);
        for (std::size_t m = 0; m < n; ++m) {
          if (m != nn && m != q) term *= 1.0 - xa(m, l);
        }
        others += term;
      }
      g.entries(static_cast<Eigen::Index>(q), static_cast<Eigen::Index>(l)) = own - others;
    }
  }
  return g;
}

/// Gradient of the closed-form expected throughput under independent activity.
inline GradientMatrix exact_gradient_independent(const AllocationMatrix& a, const ActivityProbabilities& p) {
  detail::require_same_size(a.devices(), p.size(), "exact_gradient_independent");
  return detail::leave_one_out_gradient(a, p.values());
}

/// Step size gamma(t) and weight clip kappa(t) for t >= 1.
struct StepSchedule {
  std::function<double(std::size_t)> gamma;
  std::function<double(std::size_t)> kappa;
  /// gamma sums to infinity while its squares are summable.
  bool robbins_monro = false;

  static StepSchedule constant(double gamma, double kappa = kDefaultClip) {
    if (!(gamma > 0.0) || !(kappa > 0.0)) throw std::invalid_argument("step and clip must be positive");
    return {[gamma](std::size_t) { return gamma; }, [kappa](std::size_t) { return kappa; }, false};
  }

  /// gamma(t) = c / t.
  static StepSchedule harmonic(double c, double kappa = kDefaultClip) {
    if (!(c > 0.0) || !(kappa > 0.0)) throw std::invalid_argument("step and clip must be positive");
    return {[c](std::size_t t) { return c / static_cast<double>(t == 0 ? 1 : t); },
            [kappa](std::size_t) { return kappa; }, true};
  }
};

struct OptimizerState {
  AllocationMatrix a;
  /// Frame counter of the current iterate; the first iterate has t = 1.
  std::size_t t = 1;
};

/// One projected ascent step A <- Pi_H[A + gamma(t+1) w g(A; x)].
inline OptimizerState psga_step(const OptimizerState& state, const ActivityVector& x_obs, const ImportanceWeight& weight,
                                const StepSchedule& schedule, double* step_norm = nullptr) {
  OptimizerState next{state.a, state.t + 1};
  if (step_norm) *step_norm = 0.0;
  if (weight.value == 0.0 || x_obs.count() == 0) return next;

  const GradientMatrix g = stochastic_gradient(state.a, x_obs);
  if (step_norm) *step_norm = weight.value * g.entries.norm();
  const double gamma = schedule.gamma(state.t + 1);
  next.a = project_allocation(state.a.entries() + (gamma * weight.value) * g.entries);
  return next;
}

struct Snapshot {
  std::size_t frame = 0;
  AllocationMatrix a;
};

struct Trajectory {
  /// Frame 0 holds the initial matrix; later entries follow the cadence and
  /// always include the last frame.
  std::vector<Snapshot> snapshots;
  std::size_t clipped_weights = 0;
  std::size_t zero_proposal_weights = 0;
  /// Largest |w| * ||g||_F applied over the run.
  double max_weighted_gradient_norm = 0.0;

  const AllocationMatrix& final_allocation() const { return snapshots.back().a; }
};

inline constexpr std::size_t kDefaultCadence = 50;

/// Weighted projected ascent over the first `frames` observations.
/// `weight_of(x, t)` returns the importance weight used at counter t.
template <typename WeightFn>
Trajectory run_weighted(const AllocationMatrix& initial, std::span<const ActivityVector> observed, std::size_t frames,
                        WeightFn&& weight_of, const StepSchedule& schedule, std::size_t cadence = kDefaultCadence) {
  if (observed.size() < frames) throw std::invalid_argument("observation stream shorter than requested frames");
  if (cadence < 1) throw std::invalid_argument("evaluation cadence must be positive");

  Trajectory traj;
  traj.snapshots.push_back({0, initial});
  OptimizerState state{initial, 1};
  for (std::size_t f = 0; f < frames; ++f) {
    const ActivityVector& x = observed[f];
    const ImportanceWeight w = weight_of(x, state.t);
    traj.clipped_weights += w.clipped ? 1 : 0;
    traj.zero_proposal_weights += w.zero_proposal ? 1 : 0;
    double step_norm = 0.0;
    state = psga_step(state, x, w, schedule, &step_norm);
    traj.max_weighted_gradient_norm = std::max(traj.max_weighted_gradient_norm, step_norm);
    const std::size_t done = f + 1;
    if (done % cadence == 0 || done == frames) traj.snapshots.push_back({done, state.a});
  }
  return traj;
}

/// Unweighted ascent on the observed stream.
inline Trajectory run_alg2(const AllocationMatrix& initial, std::span<const ActivityVector> observed,
                           const StepSchedule& schedule, std::size_t frames, std::size_t cadence = kDefaultCadence) {
  return run_weighted(
      initial, observed, frames, [](const ActivityVector&, std::size_t) { return ImportanceWeight{}; }, schedule,
      cadence);
}

/// Ascent weighted by the exact, unclipped ratio target / proposal.
inline Trajectory run_alg3(const AllocationMatrix& initial, std::span<const ActivityVector> observed,
                           const ActivityProbabilities& target, const ActivityProbabilities& proposal,
                           const StepSchedule& schedule, std::size_t frames, std::size_t cadence = kDefaultCadence) {
  detail::require_same_size(target.size(), initial.devices(), "run_alg3");
  return run_weighted(
      initial, observed, frames,
      [&](const ActivityVector& x, std::size_t) { return importance_weight(target, proposal, x); }, schedule,
      cadence);
}

/// Ascent weighted by an estimated target over the proposal, clipped at kappa(t).
inline Trajectory run_alg4(const AllocationMatrix& initial, std::span<const ActivityVector> observed,
                           const ActivityProbabilities& perturbed_target, const ActivityProbabilities& proposal,
                           const StepSchedule& schedule, std::size_t frames, std::size_t cadence = kDefaultCadence) {
  detail::require_same_size(perturbed_target.size(), initial.devices(), "run_alg4");
  return run_weighted(
      initial, observed, frames,
      [&](const ActivityVector& x, std::size_t t) {
        return importance_weight(perturbed_target, proposal, x, schedule.kappa(t));
      },
      schedule, cadence);
}

struct MultiStartResult {
  std::size_t best_restart = 0;
  Trajectory best;
  double best_value = 0.0;
  std::vector<double> values;
};

/// Runs every restart and keeps the one whose final matrix scores highest.
/// Selection happens once, at the end of the runs; ties keep the lowest index.
template <typename RunFn, typename EvalFn>
MultiStartResult multi_start(std::size_t restarts, RunFn&& run, EvalFn&& evaluator) {
  if (restarts < 1) throw std::invalid_argument("multi-start needs at least one restart");
  MultiStartResult result;
  for (std::size_t r = 0; r < restarts; ++r) {
    Trajectory traj = run(r);
    const double value = evaluator(traj.final_allocation());
    result.values.push_back(value);
    if (r == 0 || value > result.best_value) {
      result.best_restart = r;
      result.best_value = value;
      result.best = std::move(traj);
    }
  }
  return result;
}

inline constexpr std::size_t kBiasEnumerationCap = 10;

namespace detail {

template <typename Fn>
void for_each_pattern(std::size_t n, Fn&& fn) {
  for (std::uint64_t code = 0; code < (std::uint64_t{1} << n); ++code) fn(ActivityVector::from_code(code, n));
}

inline void require_bias_cap(std::size_t n) {
  if (n > kBiasEnumerationCap) throw std::invalid_argument("bias diagnostics enumerate at most 10 devices");
}

}  // namespace detail

/// E_{x ~ proposal}[g(A; x)] - E_{x ~ p}[g(A; x)] by enumeration.
inline GradientMatrix bias_diagnostic(const AllocationMatrix& a, const ActivityProbabilities& p,
                                      const ActivityProbabilities& proposal) {
  detail::require_same_size(p.size(), proposal.size(), "bias_diagnostic");
  detail::require_bias_cap(p.size());
  GradientMatrix beta = GradientMatrix::zeros(a.devices(), a.slots());
  detail::for_each_pattern(p.size(), [&](const ActivityVector& x) {
    const double delta = joint_probability(proposal, x) - joint_probability(p, x);
    if (delta != 0.0) beta.entries += delta * stochastic_gradient(a, x).entries;
  });
  return beta;
}

/// Bias left after weighting: E_{x ~ proposal}[w(x) g(A; x)] - E_{x ~ p}[g(A; x)].
/// Weights use `weight_target` (p itself when absent) over the proposal.
inline GradientMatrix weighted_bias_diagnostic(const AllocationMatrix& a, const ActivityProbabilities& p,
                                               const ActivityProbabilities& proposal,
                                               std::optional<double> clip = std::nullopt,
                                               const ActivityProbabilities* weight_target = nullptr) {
  detail::require_same_size(p.size(), proposal.size(), "weighted_bias_diagnostic");
  detail::require_bias_cap(p.size());
  const ActivityProbabilities& target = weight_target ? *weight_target : p;
  GradientMatrix beta = GradientMatrix::zeros(a.devices(), a.slots());
  detail::for_each_pattern(p.size(), [&](const ActivityVector& x) {
    const double weighted = importance_weight(target, proposal, x, clip).value * joint_probability(proposal, x);
    const double coef = weighted - joint_probability(p, x);
    if (coef != 0.0) beta.entries += coef * stochastic_gradient(a, x).entries;
  });
  return beta;
}

inline constexpr double kStationarityProbe = 1e-4;

/// ||Pi_H(A + delta grad T(A; p)) - A||_F / delta; zero at stationary points.
inline double stationarity_residual(const AllocationMatrix& a, const ActivityProbabilities& p,
                                    double delta = kStationarityProbe) {
  const GradientMatrix grad = exact_gradient_independent(a, p);
  const AllocationMatrix moved = project_allocation(a.entries() + delta * grad.entries);
  return (moved.entries() - a.entries()).norm() / delta;
}

}  // namespace fsaloha
