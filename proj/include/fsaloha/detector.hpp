#pragma once

#include <algorithm>
#include <cmath>
#include <complex>
#include <numbers>
#include <random>
#include <span>
#include <stdexcept>
#include <vector>

#include <Eigen/Dense>

#include "fsaloha/activity.hpp"
#include "fsaloha/random.hpp"
#include "fsaloha/types.hpp"

namespace fsaloha {

using Complex = std::complex<double>;
using ComplexMatrix = Eigen::MatrixXcd;
using ComplexVector = Eigen::VectorXcd;

/// T x N pilot matrix; column i is the preamble of device i.
struct PilotMatrix {
  ComplexMatrix entries;

  std::size_t length() const { return static_cast<std::size_t>(entries.rows()); }
  std::size_t devices() const { return static_cast<std::size_t>(entries.cols()); }
};

struct ChannelState {
  ComplexVector coefficients;
  /// Noise variance per complex sample.
  double noise_variance = 1.0;
};

struct DetectionResult {
  ActivityProbabilities posterior;
  ActivityVector hard_decision;
  ComplexVector channel_estimate;
  std::size_t iterations = 0;
  /// State became non-finite; posterior and decision fall back to the prior.
  bool diverged = false;
};

struct GampSettings {
  std::size_t max_iters = 50;
  /// Fraction of each new estimate kept; 1 means undamped.
  double damping = 0.7;
  double tolerance = 1e-6;
  double threshold = 0.5;
};

namespace detail {

inline Complex complex_normal(Rng& rng, double variance) {
  std::normal_distribution<double> half(0.0, std::sqrt(variance / 2.0));
  const double re = half(rng);
  const double im = half(rng);
  return {re, im};
}

}  // namespace detail

/// Transmit SNR in dB to noise variance for unit transmit power.
inline double noise_variance_from_snr_db(double snr_db) { return std::pow(10.0, -snr_db / 10.0); }

/// i.i.d. CN(0, 1) pilot symbols.
inline PilotMatrix draw_pilots(std::size_t length, std::size_t devices, Rng& rng) {
  if (length < 1 || devices < 1) throw std::invalid_argument("pilot matrix needs T, N >= 1");
  PilotMatrix s{ComplexMatrix(static_cast<Eigen::Index>(length), static_cast<Eigen::Index>(devices))};
  for (Eigen::Index j = 0; j < s.entries.cols(); ++j) {
    for (Eigen::Index t = 0; t < s.entries.rows(); ++t) s.entries(t, j) = detail::complex_normal(rng, 1.0);
  }
  return s;
}

/// Fixed moduli with independent uniform phases.
inline ChannelState draw_channel(std::span<const double> moduli, Rng& rng, double noise_variance = 1.0) {
  std::uniform_real_distribution<double> phase(0.0, 2.0 * std::numbers::pi);
  ChannelState h{ComplexVector(static_cast<Eigen::Index>(moduli.size())), noise_variance};
  for (std::size_t i = 0; i < moduli.size(); ++i) {
    if (!(moduli[i] >= 0.0)) throw std::invalid_argument("channel moduli must be nonnegative");
    h.coefficients(static_cast<Eigen::Index>(i)) = std::polar(moduli[i], phase(rng));
  }
  return h;
}

/// y = S (x .* h) + w with w ~ CN(0, noise_variance).
inline ComplexVector simulate_control_channel(const PilotMatrix& s, const ChannelState& h, const ActivityVector& x,
                                              Rng& rng) {
  detail::require_same_size(s.devices(), x.size(), "simulate_control_channel");
  detail::require_same_size(s.devices(), static_cast<std::size_t>(h.coefficients.size()), "simulate_control_channel");
  ComplexVector effective = ComplexVector::Zero(h.coefficients.size());
  for (std::size_t i = 0; i < x.size(); ++i) {
    if (x[i]) effective(static_cast<Eigen::Index>(i)) = h.coefficients(static_cast<Eigen::Index>(i));
  }
  ComplexVector y = s.entries * effective;
  if (h.noise_variance > 0.0) {
    for (Eigen::Index t = 0; t < y.size(); ++t) y(t) += detail::complex_normal(rng, h.noise_variance);
  }
  return y;
}

/// Decides activity from the threshold on the posterior.
inline ActivityVector threshold_decision(const ActivityProbabilities& posterior, double threshold) {
  ActivityVector x = ActivityVector::zeros(posterior.size());
  for (std::size_t i = 0; i < posterior.size(); ++i) x.set(i, posterior[i] >= threshold);
  return x;
}

/// Sum-product GAMP with an AWGN output channel and a Bernoulli / complex
/// Gaussian input prior: x_i = 0 with probability 1 - prior_i, otherwise
/// x_i ~ CN(0, channel_prior_variance_i).
inline DetectionResult gamp_detect(const ComplexVector& y, const PilotMatrix& s, const ActivityProbabilities& prior,
                                   std::span<const double> channel_prior_variance, double noise_variance,
                                   const GampSettings& settings = {}) {
  const auto n = static_cast<Eigen::Index>(s.devices());
  const auto m = static_cast<Eigen::Index>(s.length());
  detail::require_same_size(prior.size(), s.devices(), "gamp_detect");
  detail::require_same_size(channel_prior_variance.size(), s.devices(), "gamp_detect");
  detail::require_same_size(static_cast<std::size_t>(y.size()), s.length(), "gamp_detect");
  if (!(settings.damping > 0.0 && settings.damping <= 1.0)) throw std::invalid_argument("damping must lie in (0,1]");

  // Tiny floor keeps the noiseless case well defined.
  const double wvar = std::max(noise_variance, 1e-12);
  const double beta = settings.damping;
  const Eigen::MatrixXd s2 = s.entries.cwiseAbs2();
  const Eigen::Map<const Eigen::VectorXd> slab(channel_prior_variance.data(), n);

  Eigen::VectorXd rho(n);
  for (Eigen::Index i = 0; i < n; ++i) rho(i) = prior[static_cast<std::size_t>(i)];

  ComplexVector xhat = ComplexVector::Zero(n);
  Eigen::VectorXd vx = rho.cwiseProduct(slab);
  ComplexVector shat = ComplexVector::Zero(m);
  Eigen::VectorXd pi = rho;

  DetectionResult result;
  for (std::size_t it = 0; it < settings.max_iters; ++it) {
    result.iterations = it + 1;

    // Output step.
    const Eigen::VectorXd vp = (s2 * vx).cwiseMax(1e-300);
    const ComplexVector phat = s.entries * xhat - vp.cast<Complex>().cwiseProduct(shat);
    const Eigen::VectorXd vs = (vp.array() + wvar).inverse().matrix();
    const ComplexVector shat_new = (y - phat).cwiseProduct(vs.cast<Complex>());
    shat = beta * shat_new + (1.0 - beta) * shat;

    // Input step.
    const Eigen::VectorXd vr = (s2.transpose() * vs).cwiseMax(1e-300).cwiseInverse();
    const ComplexVector rhat = xhat + vr.cast<Complex>().cwiseProduct(s.entries.adjoint() * shat);

    ComplexVector xnew(n);
    Eigen::VectorXd vxnew(n);
    for (Eigen::Index i = 0; i < n; ++i) {
      const double r2 = std::norm(rhat(i));
      const double v = slab(i);
      const double total = v + vr(i);
      double active;
      if (rho(i) <= 0.0 || v <= 0.0) {
        active = 0.0;
      } else if (rho(i) >= 1.0) {
        active = 1.0;
      } else {
        const double llr = std::log(rho(i) / (1.0 - rho(i))) + std::log(vr(i) / total) + r2 * (1.0 / vr(i) - 1.0 / total);
        active = 1.0 / (1.0 + std::exp(-llr));
      }
      const Complex mean = (v / total) * rhat(i);
      const double var = v * vr(i) / total;
      pi(i) = active;
      xnew(i) = active * mean;
      vxnew(i) = active * var + active * (1.0 - active) * std::norm(mean);
    }

    const ComplexVector previous = xhat;
    xhat = beta * xnew + (1.0 - beta) * xhat;
    vx = beta * vxnew + (1.0 - beta) * vx;

    if (!xhat.allFinite() || !vx.allFinite() || !pi.allFinite()) {
      result.diverged = true;
      break;
    }
    const double change = (xhat - previous).norm();
    const double scale = std::max(previous.norm(), 1e-12);
    if (it > 0 && change / scale < settings.tolerance) break;
  }

  if (result.diverged) {
    result.posterior = prior;
    result.channel_estimate = ComplexVector::Zero(n);
  } else {
    std::vector<double> post(static_cast<std::size_t>(n));
    for (Eigen::Index i = 0; i < n; ++i) post[static_cast<std::size_t>(i)] = std::clamp(pi(i), 0.0, 1.0);
    result.posterior = ActivityProbabilities(std::move(post));
    result.channel_estimate = xhat;
  }
  result.hard_decision = threshold_decision(result.posterior, settings.threshold);
  return result;
}

/// Per-device detection frequency with add-one smoothing: (count + 1) / (frames + 2).
inline ActivityProbabilities estimate_proposal_empirical(std::span<const ActivityVector> detected) {
  if (detected.empty()) throw std::invalid_argument("empirical proposal needs at least one frame");
  const std::size_t n = detected.front().size();
  std::vector<double> counts(n, 0.0);
  for (const auto& x : detected) {
    detail::require_same_size(x.size(), n, "estimate_proposal_empirical");
    for (std::size_t i = 0; i < n; ++i) counts[i] += x[i] ? 1.0 : 0.0;
  }
  const double frames = static_cast<double>(detected.size());
  for (double& c : counts) c = (c + 1.0) / (frames + 2.0);
  return ActivityProbabilities(std::move(counts));
}

/// Pilot-based detector used by the experiments: fresh pilots, phases and
/// noise every frame, GAMP decision at the access point.
struct GampChannel {
  ActivityProbabilities prior;
  std::vector<double> moduli;
  std::size_t pilot_length = 15;
  double noise_variance = 1.0;
  GampSettings settings;

  std::vector<double> slab_variances() const {
    std::vector<double> v(moduli.size());
    for (std::size_t i = 0; i < moduli.size(); ++i) v[i] = moduli[i] * moduli[i];
    return v;
  }

  DetectionResult detect(const ActivityVector& x, Rng& rng) const {
    const PilotMatrix s = draw_pilots(pilot_length, x.size(), rng);
    const ChannelState h = draw_channel(moduli, rng, noise_variance);
    const ComplexVector y = simulate_control_channel(s, h, x, rng);
    const auto slab = slab_variances();
    return gamp_detect(y, s, prior, slab, noise_variance, settings);
  }
};

}  // namespace fsaloha
