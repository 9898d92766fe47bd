#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <numeric>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include <Eigen/Dense>

namespace fsaloha {

/// Row-major so that each device row is a contiguous span.
using Matrix = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

/// Per-device Bernoulli activity parameters. Used for the true activity law,
/// the law of detected vectors and perturbed estimates of the true law.
class ActivityProbabilities {
 public:
  ActivityProbabilities() = default;

  explicit ActivityProbabilities(std::vector<double> probs) : probs_(std::move(probs)) {
    for (std::size_t i = 0; i < probs_.size(); ++i) {
      if (!(probs_[i] >= 0.0 && probs_[i] <= 1.0)) {
        throw std::invalid_argument("activity probability " + std::to_string(i) +
                                    " outside [0,1]: " + std::to_string(probs_[i]));
      }
    }
  }

  static ActivityProbabilities constant(std::size_t n, double value) {
    return ActivityProbabilities(std::vector<double>(n, value));
  }

  std::size_t size() const { return probs_.size(); }
  double operator[](std::size_t i) const { return probs_[i]; }
  std::span<const double> values() const { return probs_; }
  double sum() const { return std::accumulate(probs_.begin(), probs_.end(), 0.0); }

  bool operator==(const ActivityProbabilities&) const = default;

 private:
  std::vector<double> probs_;
};

/// Binary per-frame activity pattern (1 = active).
class ActivityVector {
 public:
  ActivityVector() = default;

  explicit ActivityVector(std::vector<std::uint8_t> bits) : bits_(std::move(bits)) {
    for (auto b : bits_) {
      if (b > 1) throw std::invalid_argument("activity bits must be 0 or 1");
    }
  }

  static ActivityVector zeros(std::size_t n) { return ActivityVector(std::vector<std::uint8_t>(n, 0)); }
  static ActivityVector ones(std::size_t n) { return ActivityVector(std::vector<std::uint8_t>(n, 1)); }

  /// Bit pattern of `code` over `n` devices, device i taking bit i.
  static ActivityVector from_code(std::uint64_t code, std::size_t n) {
    ActivityVector x = zeros(n);
    for (std::size_t i = 0; i < n; ++i) x.bits_[i] = static_cast<std::uint8_t>((code >> i) & 1U);
    return x;
  }

  std::size_t size() const { return bits_.size(); }
  bool operator[](std::size_t i) const { return bits_[i] != 0; }
  void set(std::size_t i, bool active) { bits_[i] = active ? 1 : 0; }
  std::span<const std::uint8_t> bits() const { return bits_; }
  std::size_t count() const { return static_cast<std::size_t>(std::count(bits_.begin(), bits_.end(), 1)); }

  bool operator==(const ActivityVector&) const = default;

 private:
  std::vector<std::uint8_t> bits_;
};

/// N x K slot-selection probabilities. Each row is a distribution over slots.
class AllocationMatrix {
 public:
  static constexpr double kRowSumTolerance = 1e-9;

  AllocationMatrix() = default;

  explicit AllocationMatrix(Matrix entries) : entries_(std::move(entries)) {
    if (entries_.cols() < 1) throw std::invalid_argument("allocation needs at least one slot");
    for (Eigen::Index i = 0; i < entries_.rows(); ++i) {
      double row_sum = 0.0;
      for (Eigen::Index k = 0; k < entries_.cols(); ++k) {
        const double a = entries_(i, k);
        if (!(a >= 0.0) || !std::isfinite(a)) {
          throw std::invalid_argument("allocation entry (" + std::to_string(i) + "," + std::to_string(k) +
                                      ") is negative or non-finite");
        }
        row_sum += a;
      }
      if (std::abs(row_sum - 1.0) > kRowSumTolerance) {
        throw std::invalid_argument("allocation row " + std::to_string(i) + " sums to " + std::to_string(row_sum));
      }
    }
  }

  std::size_t devices() const { return static_cast<std::size_t>(entries_.rows()); }
  std::size_t slots() const { return static_cast<std::size_t>(entries_.cols()); }
  double operator()(std::size_t i, std::size_t k) const {
    return entries_(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(k));
  }
  const Matrix& entries() const { return entries_; }
  std::span<const double> row(std::size_t i) const {
    return {entries_.data() + i * slots(), slots()};
  }

  bool operator==(const AllocationMatrix& other) const {
    return entries_.rows() == other.entries_.rows() && entries_.cols() == other.entries_.cols() &&
           entries_ == other.entries_;
  }

 private:
  Matrix entries_;
};

/// Stochastic or exact gradient of the throughput with respect to the allocation.
struct GradientMatrix {
  Matrix entries;

  static GradientMatrix zeros(std::size_t n, std::size_t k) {
    return {Matrix::Zero(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(k))};
  }
  double operator()(std::size_t q, std::size_t l) const {
    return entries(static_cast<Eigen::Index>(q), static_cast<Eigen::Index>(l));
  }
  double max_abs() const { return entries.size() == 0 ? 0.0 : entries.cwiseAbs().maxCoeff(); }
};

namespace detail {

inline void require_same_size(std::size_t a, std::size_t b, const char* what) {
  if (a != b) {
    throw std::invalid_argument(std::string(what) + ": size mismatch (" + std::to_string(a) + " vs " +
                                std::to_string(b) + ")");
  }
}

}  // namespace detail

}  // namespace fsaloha
