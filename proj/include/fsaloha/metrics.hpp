#pragma once

#include <concepts>
#include <cstdint>
#include <optional>
#include <stdexcept>
#include <vector>

#include "fsaloha/activity.hpp"
#include "fsaloha/types.hpp"

namespace fsaloha {

struct ThroughputReport {
  std::vector<double> per_device;
  double total = 0.0;
  std::optional<double> normalized;
};

/// T_i(A; x) = sum_k x_i A_ik prod_{m != i} (1 - x_m A_mk), and their sum.
inline ThroughputReport instantaneous_throughput(const AllocationMatrix& a, const ActivityVector& x) {
  detail::require_same_size(a.devices(), x.size(), "instantaneous_throughput");
  const std::size_t n = a.devices();
  const std::size_t k = a.slots();

  std::vector<std::size_t> active;
  for (std::size_t i = 0; i < n; ++i) {
    if (x[i]) active.push_back(i);
  }

  ThroughputReport report;
  report.per_device.assign(n, 0.0);
  for (std::size_t i : active) {
    double ti = 0.0;
    for (std::size_t slot = 0; slot < k; ++slot) {
      double alone = a(i, slot);
      for (std::size_t m : active) {
        if (m != i) alone *= 1.0 - a(m, slot);
      }
      ti += alone;
    }
    report.per_device[i] = ti;
    report.total += ti;
  }
  return report;
}

/// Closed-form expected throughput for independent device activity.
inline double expected_throughput_independent(const AllocationMatrix& a, const ActivityProbabilities& p) {
  detail::require_same_size(a.devices(), p.size(), "expected_throughput_independent");
  const std::size_t n = a.devices();
  const std::size_t k = a.slots();
  double total = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    if (p[i] == 0.0) continue;
    for (std::size_t slot = 0; slot < k; ++slot) {
      double term = p[i] * a(i, slot);
      if (term == 0.0) continue;
      for (std::size_t m = 0; m < n; ++m) {
        if (m != i) term *= 1.0 - p[m] * a(m, slot);
      }
      total += term;
    }
  }
  return total;
}

inline constexpr std::size_t kEnumerationCap = 20;

/// Expected throughput by summing over all 2^N activity patterns.
inline double expected_throughput_enumerate(const AllocationMatrix& a, const ActivityProbabilities& p) {
  detail::require_same_size(a.devices(), p.size(), "expected_throughput_enumerate");
  const std::size_t n = p.size();
  if (n > kEnumerationCap) throw std::invalid_argument("enumeration is capped at 20 devices");
  double total = 0.0;
  for (std::uint64_t code = 0; code < (std::uint64_t{1} << n); ++code) {
    const auto x = ActivityVector::from_code(code, n);
    const double prob = joint_probability(p, x);
    if (prob == 0.0) continue;
    total += prob * instantaneous_throughput(a, x).total;
  }
  return total;
}

/// Expected throughput divided by the expected number of active devices.
inline double normalized_throughput(const AllocationMatrix& a, const ActivityProbabilities& p) {
  const double load = p.sum();
  if (!(load > 0.0)) throw std::invalid_argument("normalized throughput undefined when no device can be active");
  return expected_throughput_independent(a, p) / load;
}

template <typename Source>
concept ActivitySource = requires(Source s) {
  { s() } -> std::convertible_to<ActivityVector>;
};

/// Empirical mean of the instantaneous throughput over `frames` draws.
template <ActivitySource Source>
double monte_carlo_throughput(const AllocationMatrix& a, Source&& source, std::size_t frames) {
  if (frames < 1) throw std::invalid_argument("monte carlo throughput needs at least one frame");
  double sum = 0.0;
  for (std::size_t f = 0; f < frames; ++f) sum += instantaneous_throughput(a, source()).total;
  return sum / static_cast<double>(frames);
}

}  // namespace fsaloha
