#pragma once

#include "twinrt/simcore/signal.hpp"
#include "twinrt/twinlink/envelope.hpp"

#include <filesystem>
#include <string>
#include <vector>

#include <json.hpp>

namespace twinrt::link {

enum class HoldPolicy {
  HoldLast,      ///< keep the previous value while nothing new arrives
  ResetToDefault ///< fall back to the port's default value
};

/// A local signal published on a topic under its own name.
struct OutgoingSignal {
  std::string signal;
  sim::Kind kind;
  Topic topic;
};

/// A payload entry copied into a local port. The field "$sim_step" maps
/// the envelope's step index instead of a payload entry.
struct IncomingSignal {
  Topic topic;
  std::string field;
  std::string port;
  sim::Kind kind;
  HoldPolicy hold = HoldPolicy::HoldLast;
};

inline constexpr const char* kSimStepField = "$sim_step";

/// Cross-twin I/O declaration for a bridge unit.
///
/// JSON schema:
///   { "outgoing": [ {"signal": "laser_front", "kind": "real", "topic": "pt.out"} ],
///     "incoming": [ {"topic": "dt.out", "field": "dt_target_accel",
///                    "port": "dt_target_accel", "kind": "real", "hold": "last"} ] }
/// "hold" is "last" (default) or "default".
struct LinkConfig {
  std::vector<OutgoingSignal> outgoing;
  std::vector<IncomingSignal> incoming;

  /// Throws std::invalid_argument when two incoming entries target one port
  /// or a signal name repeats within a topic.
  void validate() const;

  std::vector<Topic> outgoing_topics() const;
  std::vector<Topic> incoming_topics() const;

  static LinkConfig from_json(const nlohmann::json& j);
  nlohmann::json to_json() const;
};

LinkConfig load_link_config(const std::filesystem::path& path);

} // namespace twinrt::link
