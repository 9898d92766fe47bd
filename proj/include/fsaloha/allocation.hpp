#pragma once

#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>
#include <numeric>
#include <random>
#include <span>
#include <stdexcept>
#include <vector>

#include "fsaloha/random.hpp"
#include "fsaloha/types.hpp"

namespace fsaloha {

/// Euclidean projection of `v` onto the probability simplex {u >= 0, sum u = 1}.
/// Sort-based: the threshold theta is found from the descending running sums.
inline std::vector<double> project_row_simplex(std::span<const double> v) {
  if (v.empty()) throw std::invalid_argument("cannot project an empty vector onto the simplex");
  const double total = std::accumulate(v.begin(), v.end(), 0.0);
  const bool feasible = std::all_of(v.begin(), v.end(), [](double x) { return x >= 0.0; });
  if (feasible && std::abs(total - 1.0) <= 8.0 * std::numeric_limits<double>::epsilon() * static_cast<double>(v.size())) {
    // Already on the simplex up to rounding of the sum.
    return {v.begin(), v.end()};
  }
  std::vector<double> sorted(v.begin(), v.end());
  std::sort(sorted.begin(), sorted.end(), std::greater<>());

  double running = 0.0;
  double theta = 0.0;
  for (std::size_t j = 0; j < sorted.size(); ++j) {
    running += sorted[j];
    const double candidate = (running - 1.0) / static_cast<double>(j + 1);
    if (sorted[j] - candidate > 0.0) theta = candidate;
  }

  std::vector<double> out(v.size());
  for (std::size_t i = 0; i < v.size(); ++i) out[i] = std::max(v[i] - theta, 0.0);
  return out;
}

/// Row-wise projection onto the set of row-stochastic matrices.
inline AllocationMatrix project_allocation(const Matrix& raw) {
  if (!raw.allFinite()) throw std::invalid_argument("cannot project a non-finite allocation");
  Matrix out(raw.rows(), raw.cols());
  const auto k = static_cast<std::size_t>(raw.cols());
  for (Eigen::Index i = 0; i < raw.rows(); ++i) {
    const auto row = project_row_simplex(std::span<const double>(raw.data() + i * raw.cols(), k));
    std::copy(row.begin(), row.end(), out.data() + i * raw.cols());
  }
  return AllocationMatrix(std::move(out));
}

/// Plain frame slotted ALOHA: every device picks each slot with probability 1/K.
inline AllocationMatrix aloha_allocation(std::size_t n, std::size_t k) {
  if (n < 1 || k < 1) throw std::invalid_argument("aloha allocation needs N, K >= 1");
  return AllocationMatrix(Matrix::Constant(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(k),
                                           1.0 / static_cast<double>(k)));
}

/// Greedy heuristic: the K-1 most active devices each own a slot, every other
/// device shares slot 0.
///
/// Devices are ranked by ascending activity with ties broken by ascending
/// index, so among equally active devices the higher index counts as more
/// active. The most active device owns slot 1, the next one slot 2 and so on.
inline AllocationMatrix greedy_allocation(const ActivityProbabilities& p, std::size_t k) {
  const std::size_t n = p.size();
  if (k < 2) throw std::invalid_argument("greedy allocation needs K >= 2");
  if (n < k) throw std::invalid_argument("greedy allocation needs N >= K");

  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return p[a] < p[b]; });

  Matrix a = Matrix::Zero(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(k));
  for (std::size_t rank = 0; rank < n; ++rank) {
    const std::size_t from_top = n - 1 - rank;
    const std::size_t slot = from_top < k - 1 ? from_top + 1 : 0;
    a(static_cast<Eigen::Index>(order[rank]), static_cast<Eigen::Index>(slot)) = 1.0;
  }
  return AllocationMatrix(std::move(a));
}

/// Rows drawn independently and uniformly from the simplex (flat Dirichlet).
inline AllocationMatrix random_allocation(std::size_t n, std::size_t k, Rng& rng) {
  if (n < 1 || k < 1) throw std::invalid_argument("random allocation needs N, K >= 1");
  std::exponential_distribution<double> expo(1.0);
  Matrix a(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(k));
  for (Eigen::Index i = 0; i < a.rows(); ++i) {
    double total = 0.0;
    for (Eigen::Index j = 0; j < a.cols(); ++j) {
      a(i, j) = expo(rng);
      total += a(i, j);
    }
    a.row(i) /= total;
  }
  return AllocationMatrix(std::move(a));
}

}  // namespace fsaloha
