#include "twinrt/orchestrator/run_loop.hpp"

#include <cmath>
#include <stdexcept>

namespace twinrt::orch {

Micros seconds_to_micros(double seconds) {
  return Micros{static_cast<std::int64_t>(std::llround(seconds * 1e6))};
}

LocalFixedRate local_fixed_rate(double period_seconds) {
  if (!(period_seconds > 0.0)) throw std::invalid_argument("fixed-rate period must be positive");
  return LocalFixedRate{seconds_to_micros(period_seconds)};
}

RunLoop::RunLoop(StepFn step, StepTriggerMode mode, double dt, Micros pace)
    : step_(std::move(step)), pace_(pace), mode_(mode) {
  if (!(dt > 0.0)) throw std::invalid_argument("dt must be positive");
  if (auto* local = std::get_if<LocalFixedRate>(&mode_); local && local->period.count() <= 0) {
    throw std::invalid_argument("fixed-rate period must be positive");
  }
  clock_.dt = dt;
}

void RunLoop::set_trigger_mode(const StepTriggerMode& mode, Micros now) {
  if (auto* local = std::get_if<LocalFixedRate>(&mode); local && local->period.count() <= 0) {
    throw std::invalid_argument("fixed-rate period must be positive");
  }
  std::lock_guard lock(mutex_);
  if (mode == mode_) return;
  bool entering_local = std::holds_alternative<LocalFixedRate>(mode) &&
                        !std::holds_alternative<LocalFixedRate>(mode_);
  mode_ = mode;
  if (entering_local) next_local_ = now;
  cv_.notify_all();
}

StepTriggerMode RunLoop::trigger_mode() const {
  std::lock_guard lock(mutex_);
  return mode_;
}

void RunLoop::push_remote_trigger() {
  std::lock_guard lock(mutex_);
  ++triggers_;
  cv_.notify_all();
}

std::size_t RunLoop::pending_triggers() const {
  std::lock_guard lock(mutex_);
  return triggers_;
}

bool RunLoop::poll(Micros now) {
  TriggerSource source;
  {
    std::lock_guard lock(mutex_);
    if (std::holds_alternative<RemoteDriven>(mode_)) {
      if (triggers_ == 0) return false;
      if (last_step_at_ && now < *last_step_at_ + pace_) return false;
      --triggers_;
      source = TriggerSource::Remote;
    } else {
      auto period = std::get<LocalFixedRate>(mode_).period;
      if (now < next_local_) return false;
      next_local_ += period;
      if (next_local_ <= now) next_local_ = now + period; // best effort: drop backlog
      source = TriggerSource::Local;
    }
  }
  execute(source, now);
  return true;
}

void RunLoop::execute(TriggerSource source, Micros now) {
  step_(clock_, source);
  ++clock_.step_index;
  ++summary_.steps;
  if (source == TriggerSource::Remote) {
    ++summary_.remote_steps;
  } else {
    ++summary_.local_steps;
  }
  last_step_at_ = now;
}

std::optional<Micros> RunLoop::next_wakeup() const {
  std::lock_guard lock(mutex_);
  if (std::holds_alternative<LocalFixedRate>(mode_)) return next_local_;
  if (triggers_ == 0) return std::nullopt;
  if (last_step_at_) return *last_step_at_ + pace_;
  return Micros{0};
}

void RunLoop::request_stop() {
  std::lock_guard lock(mutex_);
  stop_requested_ = true;
  cv_.notify_all();
}

RunSummary RunLoop::run(const std::function<bool(const RunSummary&)>& stop) {
  using clock = std::chrono::steady_clock;
  const auto start = clock::now();
  auto now = [&] { return std::chrono::duration_cast<Micros>(clock::now() - start); };
  while (!stop(summary_)) {
    if (poll(now())) continue;
    std::unique_lock lock(mutex_);
    if (stop_requested_) break;
    auto wake = [&]() -> std::optional<Micros> {
      if (std::holds_alternative<LocalFixedRate>(mode_)) return next_local_;
      if (triggers_ == 0) return std::nullopt;
      return last_step_at_ ? *last_step_at_ + pace_ : Micros{0};
    }();
    std::size_t seen = triggers_;
    auto mode_before = mode_;
    auto changed = [&] { return stop_requested_ || triggers_ != seen || !(mode_ == mode_before); };
    if (wake) {
      cv_.wait_until(lock, start + *wake, changed);
    } else {
      cv_.wait(lock, changed);
    }
    if (stop_requested_) break;
  }
  return summary_;
}

} // namespace twinrt::orch
