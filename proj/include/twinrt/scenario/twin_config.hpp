#pragma once

#include "twinrt/faultinject/fault.hpp"
#include "twinrt/orchestrator/engine.hpp"
#include "twinrt/rover/units.hpp"
#include "twinrt/scenario/scenario.hpp"
#include "twinrt/simcore/wiring.hpp"
#include "twinrt/twinlink/bridge.hpp"

#include <filesystem>
#include <memory>

namespace twinrt::scenario {

struct UnitDecl {
  sim::UnitId id;
  std::string type; // sensors, acc_basic, acc_advanced, acc_monitor, plant, bridge, heartbeat, mirror
};

/// Everything one twin process needs. Stored as JSON:
///   { "twin": "PT", "engine": "sequential", "order": [...], "dt": 0.1,
///     "period": 0.1, "miss_threshold": 3, "resync_steps": 3,
///     "acc_config": "augmentation", "fallback_available": true,
///     "params": {...}, "units": [{"id": "Plant", "type": "plant"}],
///     "wiring": ["Plant.velocity -> Bridge.velocity"],
///     "link": {"outgoing": [...], "incoming": [...]},
///     "faults": [{"twin": "PT", "unit": "AccMain", "at": 150}] }
struct TwinConfig {
  link::TwinId twin = link::TwinId::PT;
  orch::EngineKind engine = orch::EngineKind::SequentialImmediate;
  std::vector<sim::UnitId> order; // sequential engine only
  double dt = 0.1;
  double period = 0.1;
  int miss_threshold = 3;
  int resync_steps = 3;
  rover::AccConfig acc_config = rover::AccConfig::Augmentation;
  bool fallback_available = true;
  rover::AccParams params;
  std::vector<UnitDecl> units;
  std::vector<std::string> wiring;
  link::LinkConfig link;
  std::vector<fault::FaultSpec> faults;

  nlohmann::json to_json() const;
  static TwinConfig from_json(const nlohmann::json& j);
};

TwinConfig load_twin_config(const std::filesystem::path& path);
void save_twin_config(const TwinConfig& config, const std::filesystem::path& path);

/// Shipped layouts: the PT runs Sensors, the local ACC, Bridge, AccMonitor,
/// Plant and Heartbeat sequentially; the DT runs Bridge, Mirror, AccRemote
/// and Heartbeat with parallel exchange.
TwinConfig default_pt_config(const Scenario& s);
TwinConfig default_dt_config(const Scenario& s);

/// Id of the PT's local ACC unit for a configuration.
sim::UnitId local_acc_id(rover::AccConfig config);

/// Units, wiring and engine of one twin, built from its config.
struct TwinAssembly {
  TwinConfig config;
  std::unique_ptr<link::Outbox> outbox;
  sim::UnitRegistry units;
  sim::WiringPlan plan;
  std::unique_ptr<orch::Engine> engine;
  link::BridgeUnit* bridge = nullptr;

  template <typename T> T* find(const sim::UnitId& id) { return dynamic_cast<T*>(units.find(id)); }
  /// First unit of type T, if any.
  template <typename T> T* first() {
    for (auto& u : units) {
      if (auto* t = dynamic_cast<T*>(u.get())) return t;
    }
    return nullptr;
  }
};

std::unique_ptr<TwinAssembly> assemble(const TwinConfig& config, link::Transport& transport,
                                       link::Outbox::WallclockFn wallclock);

} // namespace twinrt::scenario
