#pragma once

#include <algorithm>
#include <cstdint>
#include <cstdio>
#include <fstream>
#include <istream>
#include <ostream>
#include <sstream>
#include <stdexcept>
#include <string>
#include <tuple>
#include <vector>

namespace fsaloha::harness {

/// One evaluation point of one method in one repetition.
struct RunRecord {
  std::string experiment;
  std::string method;
  double sweep_value = 0.0;
  std::size_t rep = 0;
  std::size_t frame = 0;
  /// Normalized throughput under the true activity law.
  double normalized_throughput = 0.0;
  std::uint64_t seed = 0;
  double wall_ms = 0.0;

  bool operator==(const RunRecord&) const = default;
};

inline constexpr const char* kRecordHeader = "experiment,method,sweep_value,rep,frame,normalized_throughput,seed,wall_ms";

/// Canonical order: (sweep_value, rep, frame, method, experiment).
inline bool canonical_less(const RunRecord& a, const RunRecord& b) {
  return std::tie(a.sweep_value, a.rep, a.frame, a.method, a.experiment) <
         std::tie(b.sweep_value, b.rep, b.frame, b.method, b.experiment);
}

inline void sort_records(std::vector<RunRecord>& records) {
  std::stable_sort(records.begin(), records.end(), canonical_less);
}

namespace detail {

inline std::string format_real(double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

inline void require_plain_field(const std::string& s) {
  if (s.find_first_of(",\n\r\"") != std::string::npos) {
    throw std::invalid_argument("record field '" + s + "' contains a CSV delimiter");
  }
}

}  // namespace detail

/// Writes the header and the records in canonical order.
inline void write_records(std::ostream& out, std::vector<RunRecord> records) {
  sort_records(records);
  out << kRecordHeader << '\n';
  for (const auto& r : records) {
    detail::require_plain_field(r.experiment);
    detail::require_plain_field(r.method);
    out << r.experiment << ',' << r.method << ',' << detail::format_real(r.sweep_value) << ',' << r.rep << ','
        << r.frame << ',' << detail::format_real(r.normalized_throughput) << ',' << r.seed << ','
        << detail::format_real(r.wall_ms) << '\n';
  }
}

inline void write_records(const std::string& path, const std::vector<RunRecord>& records) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot open " + path + " for writing");
  write_records(out, records);
  out.flush();
  if (!out) throw std::runtime_error("failed writing " + path);
}

inline std::vector<RunRecord> read_records(std::istream& in, const std::string& source = "<stream>") {
  std::vector<RunRecord> records;
  std::string line;
  std::size_t number = 0;
  auto fail = [&](const std::string& msg) {
    throw std::runtime_error(source + ":" + std::to_string(number) + ": " + msg);
  };

  if (!std::getline(in, line)) {
    number = 1;
    fail("missing header");
  }
  ++number;
  if (!line.empty() && line.back() == '\r') line.pop_back();
  if (line != kRecordHeader) fail("unexpected header '" + line + "'");

  while (std::getline(in, line)) {
    ++number;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    std::vector<std::string> fields;
    std::stringstream ss(line);
    std::string field;
    while (std::getline(ss, field, ',')) fields.push_back(field);
    if (!line.empty() && line.back() == ',') fields.emplace_back();
    if (fields.size() != 8) fail("expected 8 fields, found " + std::to_string(fields.size()));
    std::string current;
    try {
      RunRecord r;
      r.experiment = fields[0];
      r.method = fields[1];
      std::size_t used = 0;
      auto real = [&](const std::string& s) {
        current = s;
        const double v = std::stod(s, &used);
        if (used != s.size()) throw std::invalid_argument(s);
        return v;
      };
      auto count = [&](const std::string& s) {
        current = s;
        if (s.empty() || s.find_first_not_of("0123456789") != std::string::npos) throw std::invalid_argument(s);
        return static_cast<std::uint64_t>(std::stoull(s));
      };
      r.sweep_value = real(fields[2]);
      r.rep = static_cast<std::size_t>(count(fields[3]));
      r.frame = static_cast<std::size_t>(count(fields[4]));
      r.normalized_throughput = real(fields[5]);
      r.seed = count(fields[6]);
      r.wall_ms = real(fields[7]);
      records.push_back(std::move(r));
    } catch (const std::exception&) {
      fail("malformed value '" + current + "'");
    }
  }
  return records;
}

inline std::vector<RunRecord> read_records(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open " + path);
  return read_records(in, path);
}

}  // namespace fsaloha::harness
