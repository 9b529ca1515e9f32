#include "twinrt/heartbeat/heartbeat.hpp"

#include "twinrt/log.hpp"

#include <stdexcept>

namespace twinrt::hb {

HeartbeatUnit::HeartbeatUnit(sim::UnitId id, link::Outbox& outbox)
    : StepUnit(std::move(id)), outbox_(outbox), topic_(link::topics::heartbeat_of(outbox.source())) {
  declare_output(kCounterField, std::int64_t{0});
}

void HeartbeatUnit::do_step(double) {
  ++counter_;
  set_output(kCounterField, counter_);
  outbox_.publish(topic_, {{kCounterField, counter_}});
}

std::optional<std::int64_t> heartbeat_counter(const link::Envelope& envelope) {
  auto it = envelope.payload.find(kCounterField);
  if (it == envelope.payload.end() || it->second.kind() != sim::Kind::Integer) return std::nullopt;
  return it->second.as_integer();
}

std::string_view to_string(Status s) { return s == Status::Alive ? "Alive" : "Down"; }

HeartbeatMonitor::HeartbeatMonitor(int miss_threshold) : k_(miss_threshold) {
  if (k_ < 1) throw std::invalid_argument("miss threshold must be at least 1");
}

bool HeartbeatMonitor::observe(const WindowResult& window) {
  if (const auto* r = std::get_if<Received>(&window)) {
    if (r->counter > state_.last_counter) {
      state_.last_counter = r->counter;
      state_.consecutive_misses = 0;
      state_.status = Status::Alive;
      return true;
    }
    log()->warn("heartbeat counter regressed: {} after {}", r->counter, state_.last_counter);
  }
  ++state_.consecutive_misses;
  if (state_.consecutive_misses >= k_) state_.status = Status::Down;
  return false;
}

HeartbeatWatch::HeartbeatWatch(int miss_threshold, orch::Micros deadline, orch::Micros start)
    : monitor_(miss_threshold), deadline_(deadline), mark_(start) {
  if (deadline_ <= orch::Micros{0}) throw std::invalid_argument("heartbeat deadline must be positive");
}

bool HeartbeatWatch::on_heartbeat(std::int64_t counter, orch::Micros now) {
  bool fresh = monitor_.observe(Received{counter});
  if (fresh) mark_ = now;
  return fresh;
}

int HeartbeatWatch::poll(orch::Micros now) {
  int misses = 0;
  while (now >= mark_ + deadline_) {
    monitor_.observe(DeadlineElapsed{});
    mark_ += deadline_;
    ++misses;
  }
  return misses;
}

std::string_view to_string(TwinMode m) {
  switch (m) {
  case TwinMode::DtSynced:
    return "DtSynced";
  case TwinMode::LocalFallback:
    return "LocalFallback";
  case TwinMode::SafeMode:
    return "SafeMode";
  }
  return "?";
}

TwinMode twin_mode_from_string(std::string_view text) {
  for (auto m : {TwinMode::DtSynced, TwinMode::LocalFallback, TwinMode::SafeMode}) {
    if (to_string(m) == text) return m;
  }
  throw std::invalid_argument("unknown twin mode '" + std::string(text) + "'");
}

TwinMode decide_mode(TwinMode, const LivenessState& liveness, bool fallback_available) {
  if (liveness.status == Status::Alive) return TwinMode::DtSynced;
  return fallback_available ? TwinMode::LocalFallback : TwinMode::SafeMode;
}

orch::StepTriggerMode trigger_mode_for(TwinMode mode, orch::Micros period) {
  if (mode == TwinMode::DtSynced) return orch::RemoteDriven{};
  return orch::LocalFixedRate{period};
}

} // namespace twinrt::hb
