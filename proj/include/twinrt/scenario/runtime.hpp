#pragma once

#include "twinrt/faultinject/fault.hpp"
#include "twinrt/heartbeat/heartbeat.hpp"
#include "twinrt/heartbeat/resync.hpp"
#include "twinrt/orchestrator/run_loop.hpp"
#include "twinrt/scenario/trace.hpp"
#include "twinrt/scenario/twin_config.hpp"

#include <functional>
#include <optional>

namespace twinrt::scenario {

/// Structured record of everything noteworthy in a run, one JSON object per
/// entry: mode changes with their miss counts, faults, scenario actions,
/// resyncs.
class EventLog {
public:
  void add(nlohmann::json entry);
  const std::vector<nlohmann::json>& entries() const { return entries_; }
  void write_jsonl(std::ostream& out) const;
  void write_jsonl(const std::filesystem::path& path) const;

private:
  std::vector<nlohmann::json> entries_;
};

/// Current UTC time as ISO-8601 with milliseconds.
std::string iso_now();

struct PtOptions {
  /// Renders the trace's time column for a run-relative instant.
  std::function<std::string(orch::Micros)> clock_text;
  /// Miss counting starts this long after the start instant.
  orch::Micros startup_grace{0};
  /// Called at the start of each step, before scenario events apply.
  std::function<void(std::int64_t step)> before_step;
};

/// The physical twin. poll() handles inbound messages, liveness and at most
/// one step; the caller supplies time, so the same object runs under a
/// virtual clock in-process and under the steady clock over TCP.
///
/// Startup: "pt.ready" is re-sent every deadline until the first DT
/// heartbeat arrives. While DtSynced, every fresh DT heartbeat triggers one
/// step; otherwise the twin self-paces at its period.
class PtTwin {
public:
  PtTwin(const TwinConfig& config, const Scenario& scenario, link::Transport& transport, PtOptions options,
         orch::Micros start);

  bool poll(orch::Micros now);
  std::optional<orch::Micros> next_wakeup() const;

  bool finished() const;
  Trace trace() const { return recorder_.finish(); }
  const EventLog& events() const { return events_; }
  hb::TwinMode mode() const { return mode_; }
  const hb::LivenessState& liveness() const { return watch_.state(); }
  const orch::RunSummary& summary() const { return loop_.summary(); }
  /// Fresh DT heartbeats accepted while DtSynced (each one a step trigger).
  std::uint64_t synced_heartbeats() const { return synced_heartbeats_; }
  TwinAssembly& assembly() { return *assembly_; }

private:
  void handle(const link::Delivery& d, orch::Micros now);
  void update_mode(orch::Micros now, const char* cause);
  void step(const orch::StepClock& clock);
  void apply_event(const ScenarioEvent& e);

  Scenario scenario_;
  link::Transport& transport_;
  PtOptions options_;
  std::unique_ptr<TwinAssembly> assembly_;
  orch::Micros period_;
  hb::HeartbeatWatch watch_;
  hb::ResyncScheduler resync_;
  std::optional<fault::FaultInjector> injector_;
  orch::RunLoop loop_;
  TraceRecorder recorder_;
  EventLog events_;

  hb::TwinMode mode_ = hb::TwinMode::DtSynced;
  hb::Status status_ = hb::Status::Alive;
  bool dt_seen_ = false;
  orch::Micros next_ready_;
  orch::Micros now_{0};
  std::size_t next_event_ = 0;
  std::uint64_t synced_heartbeats_ = 0;
  bool stop_sent_ = false;

  rover::SensorsUnit* sensors_ = nullptr;
  rover::AccUnit* acc_ = nullptr;
  rover::AccMonitorUnit* monitor_ = nullptr;
  rover::PlantUnit* plant_ = nullptr;
};

/// The digital twin: steps once per accepted PT heartbeat (the first step
/// on "pt.ready"), at most once per period.
class DtTwin {
public:
  DtTwin(const TwinConfig& config, link::Transport& transport, orch::Micros start);

  bool poll(orch::Micros now);
  std::optional<orch::Micros> next_wakeup() const { return loop_.next_wakeup(); }

  /// True once "pt.stop" arrived.
  bool stopped() const { return stopped_; }
  orch::Micros last_activity() const { return last_activity_; }
  const EventLog& events() const { return events_; }
  const orch::RunSummary& summary() const { return loop_.summary(); }
  TwinAssembly& assembly() { return *assembly_; }

private:
  void step(const orch::StepClock& clock);

  link::Transport& transport_;
  std::unique_ptr<TwinAssembly> assembly_;
  hb::HeartbeatWatch watch_;
  hb::Status status_ = hb::Status::Alive;
  std::optional<fault::FaultInjector> injector_;
  orch::RunLoop loop_;
  EventLog events_;
  bool started_ = false;
  bool stopped_ = false;
  orch::Micros last_activity_;
};

/// Topics each role listens on.
void subscribe_pt(link::Transport& t);
void subscribe_dt(link::Transport& t);

} // namespace twinrt::scenario
