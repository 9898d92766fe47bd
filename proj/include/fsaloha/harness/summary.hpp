#pragma once

#include <cmath>
#include <map>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "fsaloha/harness/records.hpp"

namespace fsaloha::harness {

struct SummaryRow {
  std::string method;
  double sweep_value = 0.0;
  double mean = 0.0;
  /// Sample standard deviation over repetitions; 0 for a single repetition.
  double stddev = 0.0;
  std::size_t repetitions = 0;
};

/// Mean and sample std of the last evaluated frame, per (method, sweep value).
inline std::vector<SummaryRow> summarize(const std::vector<RunRecord>& records) {
  if (records.empty()) throw std::invalid_argument("cannot summarize an empty record set");

  // (sweep, method) -> rep -> (frame, value) of the latest frame seen.
  std::map<std::pair<double, std::string>, std::map<std::size_t, std::pair<std::size_t, double>>> last;
  for (const auto& r : records) {
    auto& slot = last[{r.sweep_value, r.method}];
    auto it = slot.find(r.rep);
    if (it == slot.end() || r.frame > it->second.first) slot[r.rep] = {r.frame, r.normalized_throughput};
  }

  std::vector<SummaryRow> rows;
  for (const auto& [key, reps] : last) {
    if (reps.empty()) throw std::invalid_argument("empty group for method " + key.second);
    SummaryRow row{key.second, key.first, 0.0, 0.0, reps.size()};
    for (const auto& [rep, fv] : reps) row.mean += fv.second;
    row.mean /= static_cast<double>(reps.size());
    if (reps.size() > 1) {
      double ss = 0.0;
      for (const auto& [rep, fv] : reps) ss += (fv.second - row.mean) * (fv.second - row.mean);
      row.stddev = std::sqrt(ss / static_cast<double>(reps.size() - 1));
    }
    rows.push_back(std::move(row));
  }
  return rows;
}

inline const SummaryRow* find_row(const std::vector<SummaryRow>& rows, const std::string& method, double sweep_value) {
  for (const auto& r : rows) {
    if (r.method == method && r.sweep_value == sweep_value) return &r;
  }
  return nullptr;
}

}  // namespace fsaloha::harness
