#pragma once

#include "twinrt/scenario/trace.hpp"

#include <json.hpp>

#include <optional>

namespace twinrt::scenario {

struct ColumnRange {
  std::string column;
  double min = 0.0;
  double max = 0.0;
};

/// Consecutive steps sharing one value of a text column.
struct Segment {
  std::int64_t from = 0;
  std::int64_t to = 0; // inclusive
  std::string value;
};

struct TraceSummary {
  std::size_t rows = 0;
  std::vector<ColumnRange> columns; // numeric columns only
  std::vector<Segment> modes;
  std::vector<Segment> sources;
  /// Lowest target acceleration and velocity seen on either twin; absent
  /// for an empty trace.
  std::optional<double> min_target_acceleration;
  std::optional<double> min_target_velocity;

  nlohmann::json to_json() const;
};

TraceSummary summarize(const Trace& trace);

/// Plain-text summary: per-column ranges, mode and source timelines, minima.
std::string render_report(const Trace& trace);

} // namespace twinrt::scenario
