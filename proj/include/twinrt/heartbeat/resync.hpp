#pragma once

#include "twinrt/heartbeat/heartbeat.hpp"
#include "twinrt/twinlink/envelope.hpp"

namespace twinrt::hb {

/// PT state sent to the DT after an outage: vehicle state entering the
/// step, the environment seen at that step and the ACC activation flag.
/// The step index travels as the envelope's sim_step.
struct TwinSnapshot {
  std::int64_t step = 0;
  double position = 0.0;
  double velocity = 0.0;
  double laser_front = 0.0;
  double us_left = 0.0;
  double us_right = 0.0;
  bool acc_active = false;

  bool operator==(const TwinSnapshot&) const = default;
};

link::Payload to_payload(const TwinSnapshot& s);
/// Throws std::invalid_argument on a missing or mistyped field.
TwinSnapshot snapshot_from(const link::Envelope& envelope);

/// Counts down the R steps during which a snapshot is re-sent after the
/// link status flips Down -> Alive.
class ResyncScheduler {
public:
  explicit ResyncScheduler(int repeat_steps = 3);

  void on_status(Status before, Status after);
  /// True while a resend is due this step; consumes one.
  bool take();

  int pending() const { return remaining_; }
  int resyncs() const { return resyncs_; }

private:
  int repeat_;
  int remaining_ = 0;
  int resyncs_ = 0;
};

} // namespace twinrt::hb
