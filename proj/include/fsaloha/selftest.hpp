#pragma once

// Enumeration and finite-difference oracles for the exact parts of the
// library. The oracles use the term-by-term formulas and brute force, never
// the leave-one-out fast paths they check.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdint>
#include <sstream>
#include <string>
#include <vector>

#include "fsaloha/activity.hpp"
#include "fsaloha/allocation.hpp"
#include "fsaloha/metrics.hpp"
#include "fsaloha/optimizer.hpp"
#include "fsaloha/random.hpp"

namespace fsaloha::selftest {

struct CheckResult {
  std::string name;
  bool passed = false;
  std::string detail;
  double seconds = 0.0;
};

namespace oracle {

/// Closed-form throughput evaluated on an arbitrary (not necessarily feasible) matrix.
inline double throughput_raw(const Matrix& a, const ActivityProbabilities& p) {
  double total = 0.0;
  for (Eigen::Index i = 0; i < a.rows(); ++i) {
    for (Eigen::Index k = 0; k < a.cols(); ++k) {
      double term = p[static_cast<std::size_t>(i)] * a(i, k);
      for (Eigen::Index m = 0; m < a.rows(); ++m) {
        if (m != i) term *= 1.0 - p[static_cast<std::size_t>(m)] * a(m, k);
      }
      total += term;
    }
  }
  return total;
}

/// E_{x ~ law}[g(A; x)] by enumeration of the direct gradient formula, with
/// an optional per-pattern multiplier.
template <typename Multiplier>
Matrix expected_gradient(const AllocationMatrix& a, const ActivityProbabilities& law, Multiplier&& mult) {
  const std::size_t n = law.size();
  Matrix acc = Matrix::Zero(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(a.slots()));
  for (std::uint64_t code = 0; code < (std::uint64_t{1} << n); ++code) {
    const auto x = ActivityVector::from_code(code, n);
    const double prob = joint_probability(law, x);
    if (prob == 0.0) continue;
    acc += (prob * mult(x)) * stochastic_gradient_direct(a, x).entries;
  }
  return acc;
}

inline Matrix expected_gradient(const AllocationMatrix& a, const ActivityProbabilities& law) {
  return expected_gradient(a, law, [](const ActivityVector&) { return 1.0; });
}

/// Central differences of throughput_raw with step h.
inline Matrix finite_difference_gradient(const AllocationMatrix& a, const ActivityProbabilities& p, double h) {
  Matrix grad(a.entries().rows(), a.entries().cols());
  for (Eigen::Index i = 0; i < grad.rows(); ++i) {
    for (Eigen::Index k = 0; k < grad.cols(); ++k) {
      Matrix plus = a.entries();
      Matrix minus = a.entries();
      plus(i, k) += h;
      minus(i, k) -= h;
      grad(i, k) = (throughput_raw(plus, p) - throughput_raw(minus, p)) / (2.0 * h);
    }
  }
  return grad;
}

inline double squared_distance(std::span<const double> a, std::span<const double> b) {
  double d = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) d += (a[i] - b[i]) * (a[i] - b[i]);
  return d;
}

/// Smallest squared distance from v to a grid on the K = 2 or K = 3 simplex.
/// K = 3 searches a coarse grid, then a window of the fine grid around the
/// coarse minimizer (the objective is strictly convex).
inline double grid_min_squared_distance(std::span<const double> v, double resolution) {
  if (v.size() == 2) {
    double best = std::numeric_limits<double>::infinity();
    const auto steps = static_cast<long>(std::llround(1.0 / resolution));
    for (long s = 0; s <= steps; ++s) {
      const double u0 = static_cast<double>(s) / static_cast<double>(steps);
      const double u[2] = {u0, 1.0 - u0};
      best = std::min(best, squared_distance(v, u));
    }
    return best;
  }
  if (v.size() != 3) throw std::invalid_argument("grid oracle supports K = 2 or 3");
  auto search = [&](double lo0, double hi0, double lo1, double hi1, double step, double& b0, double& b1) {
    double best = std::numeric_limits<double>::infinity();
    const long n0 = std::lround((hi0 - lo0) / step);
    const long n1 = std::lround((hi1 - lo1) / step);
    for (long s0 = 0; s0 <= n0; ++s0) {
      const double u0 = lo0 + static_cast<double>(s0) * step;
      if (u0 < 0.0 || u0 > 1.0) continue;
      for (long s1 = 0; s1 <= n1; ++s1) {
        const double u1 = lo1 + static_cast<double>(s1) * step;
        if (u1 < 0.0 || u0 + u1 > 1.0 + 1e-12) continue;
        const double u[3] = {u0, u1, std::max(0.0, 1.0 - u0 - u1)};
        const double d = squared_distance(v, u);
        if (d < best) {
          best = d;
          b0 = u0;
          b1 = u1;
        }
      }
    }
    return best;
  };
  double c0 = 0.0, c1 = 0.0;
  search(0.0, 1.0, 0.0, 1.0, 0.01, c0, c1);
  double f0 = 0.0, f1 = 0.0;
  return search(std::max(0.0, c0 - 0.02), std::min(1.0, c0 + 0.02), std::max(0.0, c1 - 0.02),
                std::min(1.0, c1 + 0.02), resolution, f0, f1);
}

}  // namespace oracle

namespace detail {

template <typename Body>
CheckResult timed_check(const std::string& name, Body&& body) {
  const auto t0 = std::chrono::steady_clock::now();
  CheckResult r = body();
  r.name = name;
  r.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  return r;
}

inline ActivityProbabilities random_probabilities(std::size_t n, Rng& rng, double lo = 0.0, double hi = 1.0) {
  std::uniform_real_distribution<double> d(lo, hi);
  std::vector<double> p(n);
  for (double& v : p) v = d(rng);
  return ActivityProbabilities(std::move(p));
}

inline std::string sci(double v) {
  std::ostringstream os;
  os.precision(3);
  os << std::scientific << v;
  return os.str();
}

}  // namespace detail

/// Enumeration-averaged stochastic gradient equals the exact gradient (1e-10),
/// and the exact gradient matches central differences with h = 1e-6 to a
/// relative 1e-5, measured as |fd - g| / max(1, |g|).
inline CheckResult gradient_unbiasedness(std::size_t trials = 100, std::uint64_t seed = 1) {
  return detail::timed_check("gradient unbiasedness", [&] {
    Rng rng(seed);
    double worst_unbiased = 0.0;
    double worst_fd = 0.0;
    for (std::size_t t = 0; t < trials; ++t) {
      const AllocationMatrix a = random_allocation(6, 3, rng);
      const ActivityProbabilities p = detail::random_probabilities(6, rng);
      const Matrix exact = exact_gradient_independent(a, p).entries;
      const Matrix averaged = oracle::expected_gradient(a, p);
      worst_unbiased = std::max(worst_unbiased, (averaged - exact).cwiseAbs().maxCoeff());
      const Matrix fd = oracle::finite_difference_gradient(a, p, 1e-6);
      const Matrix rel = (fd - exact).cwiseAbs().cwiseQuotient(exact.cwiseAbs().cwiseMax(1.0));
      worst_fd = std::max(worst_fd, rel.maxCoeff());
    }
    CheckResult r;
    r.passed = worst_unbiased <= 1e-10 && worst_fd <= 1e-5;
    r.detail = "max |E g - grad| = " + detail::sci(worst_unbiased) + ", max fd rel err = " + detail::sci(worst_fd);
    return r;
  });
}

/// Weighted proposal expectation of g equals the target expectation (1e-10)
/// and the weighted bias diagnostic vanishes (1e-10).
inline CheckResult importance_identity(std::size_t trials = 100, std::uint64_t seed = 2) {
  return detail::timed_check("importance weighting identity", [&] {
    Rng rng(seed);
    double worst_identity = 0.0;
    double worst_bias = 0.0;
    for (std::size_t t = 0; t < trials; ++t) {
      const AllocationMatrix a = random_allocation(6, 3, rng);
      const ActivityProbabilities p = detail::random_probabilities(6, rng);
      const ActivityProbabilities proposal = detail::random_probabilities(6, rng, 0.05, 0.95);
      const Matrix target_side = oracle::expected_gradient(a, p);
      const Matrix weighted_side = oracle::expected_gradient(
          a, proposal, [&](const ActivityVector& x) { return importance_weight(p, proposal, x).value; });
      worst_identity = std::max(worst_identity, (weighted_side - target_side).cwiseAbs().maxCoeff());
      worst_bias = std::max(worst_bias, weighted_bias_diagnostic(a, p, proposal).max_abs());
    }
    CheckResult r;
    r.passed = worst_identity <= 1e-10 && worst_bias <= 1e-10;
    r.detail = "max identity gap = " + detail::sci(worst_identity) + ", max weighted bias = " + detail::sci(worst_bias);
    return r;
  });
}

/// Closed-form throughput equals 2^N enumeration (1e-12) for N <= 12.
inline CheckResult throughput_oracle_equivalence(std::size_t trials = 100, std::uint64_t seed = 3) {
  return detail::timed_check("throughput oracle equivalence", [&] {
    Rng rng(seed);
    std::uniform_int_distribution<std::size_t> devices(1, 12);
    std::uniform_int_distribution<std::size_t> slots(1, 5);
    double worst = 0.0;
    for (std::size_t t = 0; t < trials; ++t) {
      const std::size_t n = devices(rng);
      const AllocationMatrix a = random_allocation(n, slots(rng), rng);
      const ActivityProbabilities p = detail::random_probabilities(n, rng);
      worst = std::max(worst, std::abs(expected_throughput_independent(a, p) - expected_throughput_enumerate(a, p)));
    }
    CheckResult r;
    r.passed = worst <= 1e-12;
    r.detail = "max |closed - enumerated| = " + detail::sci(worst);
    return r;
  });
}

/// Sort-based projection is within 1e-6 squared distance of a 1e-4 grid
/// search (and never worse than it), and is exactly idempotent.
inline CheckResult projection_correctness(std::size_t trials = 40, std::uint64_t seed = 4) {
  return detail::timed_check("simplex projection", [&] {
    Rng rng(seed);
    std::uniform_real_distribution<double> entry(-1.5, 2.0);
    double worst_gap = 0.0;
    double worst_excess = 0.0;
    bool idempotent = true;
    for (std::size_t t = 0; t < trials; ++t) {
      const std::size_t k = 2 + t % 2;
      std::vector<double> v(k);
      for (double& x : v) x = entry(rng);
      const auto u = project_row_simplex(v);
      const double d_proj = oracle::squared_distance(v, u);
      const double d_grid = oracle::grid_min_squared_distance(v, 1e-4);
      worst_gap = std::max(worst_gap, d_grid - d_proj);
      worst_excess = std::max(worst_excess, d_proj - d_grid);
      idempotent = idempotent && project_row_simplex(u) == u;
    }
    CheckResult r;
    r.passed = worst_gap <= 1e-6 && worst_excess <= 1e-12 && idempotent;
    r.detail = "max grid - proj = " + detail::sci(worst_gap) + ", max proj - grid = " + detail::sci(worst_excess) +
               (idempotent ? ", idempotent" : ", NOT idempotent");
    return r;
  });
}

inline std::vector<CheckResult> run_all() {
  return {gradient_unbiasedness(), importance_identity(), throughput_oracle_equivalence(), projection_correctness()};
}

}  // namespace fsaloha::selftest
