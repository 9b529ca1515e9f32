#pragma once

#include "twinrt/scenario/runtime.hpp"
#include "twinrt/twinlink/tcp.hpp"

#include <filesystem>
#include <memory>
#include <optional>

namespace twinrt::scenario {

struct RunResult {
  Trace trace;
  EventLog pt_events;
  EventLog dt_events;
  orch::RunSummary pt_summary;
  std::optional<orch::RunSummary> dt_summary;
  std::uint64_t synced_heartbeats = 0;
};

/// Both twins on one thread over an in-memory bus, under a virtual clock.
/// Each instant is polled until neither twin makes progress, then time jumps
/// to the earliest wakeup. Runs are deterministic.
///
/// Without a DT (scenario.dt_enabled false) only the PT runs.
class InProcessRun {
public:
  using StepHook = std::function<void(std::int64_t step, InProcessRun& run)>;

  explicit InProcessRun(const Scenario& scenario, StepHook before_pt_step = {});

  /// Runs to the end of the scenario. Throws std::runtime_error on a stall.
  RunResult run();

  link::InMemoryBus& bus() { return *bus_; }
  PtTwin& pt() { return *pt_; }
  DtTwin* dt() { return dt_.get(); }
  orch::Micros now() const { return now_; }

  static constexpr const char* kPtEndpoint = "pt";
  static constexpr const char* kDtEndpoint = "dt";

private:
  Scenario scenario_;
  std::shared_ptr<link::InMemoryBus> bus_;
  std::shared_ptr<link::InMemoryEndpoint> pt_link_;
  std::shared_ptr<link::InMemoryEndpoint> dt_link_;
  std::unique_ptr<DtTwin> dt_;
  std::unique_ptr<PtTwin> pt_;
  StepHook hook_;
  orch::Micros now_{0};
};

RunResult run_in_process(const Scenario& scenario);

/// PT role over TCP on the steady clock. The time column shows local
/// wall-clock time.
RunResult run_pt_role(const TwinConfig& config, const Scenario& scenario, const link::NetEndpoint& broker,
                      orch::Micros startup_grace);

/// DT role over TCP. Returns after "pt.stop" or once nothing has arrived
/// for `idle_timeout`.
RunResult run_dt_role(const TwinConfig& config, const link::NetEndpoint& broker, orch::Micros idle_timeout);

struct ProcessesOptions {
  std::filesystem::path exe;     // the twin binary to spawn for each role
  std::filesystem::path workdir; // twin configs and logs are written here
  std::optional<double> period;  // overrides the scenario's period
  orch::Micros timeout{std::chrono::seconds(300)};
  /// A DT exiting with an error this early counts as a failed start.
  orch::Micros startup_window{std::chrono::seconds(5)};
};

/// Spawns broker, DT and PT as separate processes on loopback and waits for
/// the PT to write `trace_out`. Throws std::runtime_error when a role fails
/// to start or the PT fails.
void run_processes(const std::filesystem::path& scenario_file, const std::filesystem::path& trace_out,
                   const ProcessesOptions& options);

} // namespace twinrt::scenario
