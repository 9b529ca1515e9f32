#pragma once

#include "twinrt/twinlink/envelope.hpp"

#include <cstdint>
#include <filesystem>
#include <map>
#include <string>
#include <vector>

namespace twinrt::scenario {

/// One PT step. The first six fields follow the plotted series order.
struct TraceRow {
  std::string time;
  std::int64_t heartbeat = 0;
  double pt_target_velocity = 0.0;
  double pt_target_acceleration = 0.0;
  double dt_target_velocity = 0.0;
  double dt_target_acceleration = 0.0;
  std::int64_t step = 0;
  std::string twin_mode;
  std::string acc_source;
  double pt_velocity = 0.0;
  double applied_target_acceleration = 0.0;
  double applied_target_velocity = 0.0;
  /// PT step whose inputs produced the dt_target values; -1 before any.
  std::int64_t dt_env_step = -1;

  bool operator==(const TraceRow&) const = default;
};

using Trace = std::vector<TraceRow>;

extern const std::vector<std::string> kTraceColumns;

/// Shortest text that reads back to the same double.
std::string format_real(double v);

void write_trace_csv(const Trace& trace, std::ostream& out);
void write_trace_csv(const Trace& trace, const std::filesystem::path& path);
/// Throws std::runtime_error naming the line on malformed input.
Trace parse_trace_csv(std::istream& in);
Trace load_trace_csv(const std::filesystem::path& path);

/// Collects PT rows and places DT commands on the row of the PT step they
/// were computed from. DT results arrive a few steps late, so alignment
/// happens in finish(); rows without a DT result repeat the previous one.
class TraceRecorder {
public:
  void record(TraceRow row);
  /// Feeds every dt.out envelope the PT receives.
  void on_dt_out(const link::Envelope& envelope);

  std::size_t rows() const { return rows_.size(); }
  Trace finish() const;

private:
  struct DtCommand {
    double accel;
    double vel;
  };
  Trace rows_;
  std::map<std::int64_t, DtCommand> dt_by_env_step_;
};

} // namespace twinrt::scenario
