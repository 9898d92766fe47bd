#pragma once

#include <algorithm>
#include <cmath>
#include <optional>
#include <random>
#include <stdexcept>
#include <string>
#include <vector>

#include "fsaloha/random.hpp"
#include "fsaloha/types.hpp"

namespace fsaloha {

/// Default bound applied to importance weights.
inline constexpr double kDefaultClip = 5.0;

struct ImportanceWeight {
  double value = 1.0;
  bool clipped = false;
  /// The observed vector has zero probability under the proposal while the
  /// target gives it mass. The value is then the clip bound.
  bool zero_proposal = false;
};

inline ActivityVector sample_activity(const ActivityProbabilities& p, Rng& rng) {
  ActivityVector x = ActivityVector::zeros(p.size());
  for (std::size_t i = 0; i < p.size(); ++i) x.set(i, bernoulli(rng, p[i]));
  return x;
}

/// Pr(X = x) for independent Bernoulli devices.
inline double joint_probability(const ActivityProbabilities& p, const ActivityVector& x) {
  detail::require_same_size(p.size(), x.size(), "joint_probability");
  double prob = 1.0;
  for (std::size_t i = 0; i < p.size(); ++i) prob *= x[i] ? p[i] : 1.0 - p[i];
  return prob;
}

namespace detail {

inline void require_error_probability(double value, const char* name) {
  if (!(value >= 0.0 && value <= 0.5)) {
    throw std::invalid_argument(std::string(name) + " must lie in [0, 0.5], got " + std::to_string(value));
  }
}

}  // namespace detail

/// Detection with equal false-alarm and miss probability `p_flip`.
inline ActivityVector flip_symmetric(const ActivityVector& x, double p_flip, Rng& rng) {
  detail::require_error_probability(p_flip, "p_flip");
  ActivityVector out = x;
  for (std::size_t i = 0; i < x.size(); ++i) {
    if (bernoulli(rng, p_flip)) out.set(i, !x[i]);
  }
  return out;
}

/// Detection that misses active devices with probability `p_miss` and never
/// raises false alarms.
inline ActivityVector flip_asymmetric(const ActivityVector& x, double p_miss, Rng& rng) {
  detail::require_error_probability(p_miss, "p_miss");
  ActivityVector out = x;
  for (std::size_t i = 0; i < x.size(); ++i) {
    // One draw per device regardless of state keeps the stream aligned across sweep values.
    const bool miss = bernoulli(rng, p_miss);
    if (x[i] && miss) out.set(i, false);
  }
  return out;
}

/// Marginal activity of the detected vector under symmetric flips.
inline ActivityProbabilities induced_proposal_symmetric(const ActivityProbabilities& p, double p_flip) {
  detail::require_error_probability(p_flip, "p_flip");
  std::vector<double> out(p.size());
  for (std::size_t i = 0; i < p.size(); ++i) {
    out[i] = std::clamp(p[i] + p_flip - 2.0 * p_flip * p[i], 0.0, 1.0);
  }
  return ActivityProbabilities(std::move(out));
}

inline ActivityProbabilities induced_proposal_asymmetric(const ActivityProbabilities& p, double p_miss) {
  detail::require_error_probability(p_miss, "p_miss");
  std::vector<double> out(p.size());
  for (std::size_t i = 0; i < p.size(); ++i) out[i] = (1.0 - p_miss) * p[i];
  return ActivityProbabilities(std::move(out));
}

/// Per frame: with probability `eps` the whole vector is drawn from `p_alt`,
/// otherwise from `p`.
inline ActivityVector sample_mixture(const ActivityProbabilities& p, const ActivityProbabilities& p_alt, double eps,
                                     Rng& rng) {
  detail::require_same_size(p.size(), p_alt.size(), "sample_mixture");
  if (!(eps >= 0.0 && eps <= 1.0)) throw std::invalid_argument("mixture weight must lie in [0,1]");
  const bool use_alt = bernoulli(rng, eps);
  return sample_activity(use_alt ? p_alt : p, rng);
}

/// Mixture channel coupled to an already drawn true vector: with probability
/// `eps` the observation is replaced by an independent draw from `p_alt`.
/// The observation law is the same as sample_mixture(p, p_alt, eps).
inline ActivityVector mixture_channel(const ActivityVector& x, const ActivityProbabilities& p_alt, double eps,
                                      Rng& rng) {
  detail::require_same_size(x.size(), p_alt.size(), "mixture_channel");
  if (!(eps >= 0.0 && eps <= 1.0)) throw std::invalid_argument("mixture weight must lie in [0,1]");
  const bool use_alt = bernoulli(rng, eps);
  ActivityVector alt = sample_activity(p_alt, rng);
  return use_alt ? alt : x;
}

/// Marginals of the mixture law (1 - eps) p + eps p_alt.
inline ActivityProbabilities mixture_marginals(const ActivityProbabilities& p, const ActivityProbabilities& p_alt,
                                               double eps) {
  detail::require_same_size(p.size(), p_alt.size(), "mixture_marginals");
  std::vector<double> out(p.size());
  for (std::size_t i = 0; i < p.size(); ++i) out[i] = std::clamp((1.0 - eps) * p[i] + eps * p_alt[i], 0.0, 1.0);
  return ActivityProbabilities(std::move(out));
}

/// Noisy estimate of the activity law, clamped entrywise to [0,1].
inline ActivityProbabilities perturb_target(const ActivityProbabilities& p, double sigma, Rng& rng) {
  if (!(sigma >= 0.0)) throw std::invalid_argument("perturbation sigma must be nonnegative");
  if (sigma == 0.0) return p;
  std::vector<double> out(p.values().begin(), p.values().end());
  std::normal_distribution<double> noise(0.0, sigma);
  for (double& v : out) v = std::clamp(v + noise(rng), 0.0, 1.0);
  return ActivityProbabilities(std::move(out));
}

/// min(clip, Pr_target(x) / Pr_proposal(x)) with 0/0 = 0. A vector that has
/// target mass but no proposal mass gets the clip bound; without a clip bound
/// that case has no finite weight and throws std::domain_error.
inline ImportanceWeight importance_weight(const ActivityProbabilities& target, const ActivityProbabilities& proposal,
                                          const ActivityVector& x, std::optional<double> clip = std::nullopt) {
  detail::require_same_size(target.size(), proposal.size(), "importance_weight");
  if (clip && !(*clip > 0.0)) throw std::invalid_argument("clip bound must be positive");

  const double numerator = joint_probability(target, x);
  const double denominator = joint_probability(proposal, x);

  ImportanceWeight w;
  if (denominator == 0.0) {
    if (numerator == 0.0) {
      w.value = 0.0;
      return w;
    }
    if (!clip) throw std::domain_error("importance weight is unbounded: proposal gives zero mass to a target vector");
    w.value = *clip;
    w.clipped = true;
    w.zero_proposal = true;
    return w;
  }

  w.value = numerator / denominator;
  if (clip && w.value > *clip) {
    w.value = *clip;
    w.clipped = true;
  }
  return w;
}

}  // namespace fsaloha
