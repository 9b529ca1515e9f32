#pragma once

#include "twinrt/orchestrator/run_loop.hpp"
#include "twinrt/simcore/unit.hpp"
#include "twinrt/twinlink/transport.hpp"

#include <cstdint>
#include <optional>
#include <string_view>
#include <variant>

namespace twinrt::hb {

inline constexpr const char* kCounterField = "counter";

/// Publishes {counter} on its twin's heartbeat topic once per step. The
/// counter starts at 0 and the first message carries 1. A halted unit
/// stops publishing and its counter output freezes.
class HeartbeatUnit final : public sim::StepUnit {
public:
  HeartbeatUnit(sim::UnitId id, link::Outbox& outbox);

  std::int64_t counter() const { return counter_; }

protected:
  void do_step(double dt) override;

private:
  link::Outbox& outbox_;
  link::Topic topic_;
  std::int64_t counter_ = 0;
};

/// Extracts the counter from a heartbeat envelope, if well-formed.
std::optional<std::int64_t> heartbeat_counter(const link::Envelope& envelope);

enum class Status { Alive, Down };
std::string_view to_string(Status s);

struct LivenessState {
  std::int64_t last_counter = 0;
  int consecutive_misses = 0;
  Status status = Status::Alive;

  bool operator==(const LivenessState&) const = default;
};

/// What happened in one observation window.
struct Received {
  std::int64_t counter;
};
struct DeadlineElapsed {};
using WindowResult = std::variant<Received, DeadlineElapsed>;

/// Counter-based liveness: only a strictly larger counter proves life, so a
/// connected peer whose counter is frozen still goes Down.
class HeartbeatMonitor {
public:
  explicit HeartbeatMonitor(int miss_threshold = 3);

  /// Returns true when the observation was a fresh counter.
  bool observe(const WindowResult& window);

  const LivenessState& state() const { return state_; }
  int miss_threshold() const { return k_; }

private:
  int k_;
  LivenessState state_;
};

/// Wall-clock side of the monitor: every deadline that passes without a
/// fresh heartbeat is one miss. Expiry is checked only when polled.
class HeartbeatWatch {
public:
  HeartbeatWatch(int miss_threshold, orch::Micros deadline, orch::Micros start);

  /// Feeds one received counter; resets the deadline when accepted.
  bool on_heartbeat(std::int64_t counter, orch::Micros now);
  /// Records a miss for every whole deadline elapsed; returns how many.
  int poll(orch::Micros now);
  /// Time of the next deadline expiry.
  orch::Micros next_deadline() const { return mark_ + deadline_; }

  const LivenessState& state() const { return monitor_.state(); }
  orch::Micros deadline() const { return deadline_; }

private:
  HeartbeatMonitor monitor_;
  orch::Micros deadline_;
  orch::Micros mark_;
};

enum class TwinMode { DtSynced, LocalFallback, SafeMode };
std::string_view to_string(TwinMode m);
TwinMode twin_mode_from_string(std::string_view text);

TwinMode decide_mode(TwinMode current, const LivenessState& liveness, bool fallback_available);

/// DtSynced steps on remote heartbeats; every other mode self-paces.
orch::StepTriggerMode trigger_mode_for(TwinMode mode, orch::Micros period);

} // namespace twinrt::hb
