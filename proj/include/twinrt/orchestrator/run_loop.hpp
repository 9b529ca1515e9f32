#pragma once

#include <chrono>
#include <condition_variable>
#include <cstdint>
#include <functional>
#include <mutex>
#include <optional>
#include <variant>

namespace twinrt::orch {

using Micros = std::chrono::microseconds;

Micros seconds_to_micros(double seconds);

/// Each step is triggered by one accepted remote heartbeat.
struct RemoteDriven {
  bool operator==(const RemoteDriven&) const = default;
};

/// Steps are self-paced at a wall-clock period.
struct LocalFixedRate {
  Micros period;
  bool operator==(const LocalFixedRate&) const = default;
};

using StepTriggerMode = std::variant<RemoteDriven, LocalFixedRate>;

LocalFixedRate local_fixed_rate(double period_seconds);

enum class TriggerSource { Remote, Local };

struct StepClock {
  std::uint64_t step_index = 0;
  double dt = 0.1;
};

struct RunSummary {
  std::uint64_t steps = 0;
  std::uint64_t remote_steps = 0;
  std::uint64_t local_steps = 0;
};

/// Step loop for one twin. Remote triggers may be pushed from any thread;
/// they are consumed only at step boundaries inside poll().
///
/// In RemoteDriven mode a non-zero `pace` keeps consecutive remote steps at
/// least that far apart.
class RunLoop {
public:
  using StepFn = std::function<void(const StepClock&, TriggerSource)>;

  RunLoop(StepFn step, StepTriggerMode mode, double dt, Micros pace = Micros{0});

  /// Takes effect from the next poll(); never interrupts a running step.
  /// Switching into LocalFixedRate schedules the first local step at `now`.
  void set_trigger_mode(const StepTriggerMode& mode, Micros now);
  StepTriggerMode trigger_mode() const;

  void push_remote_trigger();
  std::size_t pending_triggers() const;

  /// Executes at most one step if one is due at `now`.
  bool poll(Micros now);

  /// Earliest time at which poll() could step, if known without new triggers.
  std::optional<Micros> next_wakeup() const;

  const RunSummary& summary() const { return summary_; }
  std::uint64_t step_index() const { return clock_.step_index; }
  double dt() const { return clock_.dt; }

  /// Blocking driver on the steady clock; returns once `stop` holds.
  RunSummary run(const std::function<bool(const RunSummary&)>& stop);
  void request_stop();

private:
  void execute(TriggerSource source, Micros now);

  StepFn step_;
  StepClock clock_;
  Micros pace_;
  RunSummary summary_;

  mutable std::mutex mutex_;
  std::condition_variable cv_;
  StepTriggerMode mode_;
  std::size_t triggers_ = 0;
  bool stop_requested_ = false;

  Micros next_local_{0};
  std::optional<Micros> last_step_at_;
};

} // namespace twinrt::orch
