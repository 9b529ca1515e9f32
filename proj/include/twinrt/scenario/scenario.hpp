#pragma once

#include "twinrt/faultinject/fault.hpp"
#include "twinrt/heartbeat/heartbeat.hpp"
#include "twinrt/rover/model.hpp"

#include <filesystem>
#include <optional>
#include <stdexcept>
#include <string>
#include <variant>
#include <vector>

#include <json.hpp>

namespace twinrt::scenario {

/// Malformed scenario text or a field of the wrong shape. `where` is either
/// "line N" for JSON syntax errors or a field path such as "events[3].zone".
class ParseError : public std::runtime_error {
public:
  ParseError(std::string where, const std::string& what);
  const std::string& where() const { return where_; }

private:
  std::string where_;
};

/// Well-formed scenario breaking a semantic rule; `rule` names it.
class InvariantViolation : public std::runtime_error {
public:
  InvariantViolation(std::string rule, const std::string& what);
  const std::string& rule() const { return rule_; }

private:
  std::string rule_;
};

namespace action {
struct ActivateAcc {};
struct DeactivateAcc {};
struct PlaceObstacle {
  rover::Zone zone;
  double distance;
};
struct RemoveObstacle {
  rover::Zone zone;
};
struct InjectFault {
  link::TwinId twin;
  sim::UnitId unit;
};
/// Marks a step for assertions without changing anything.
struct Label {};
} // namespace action

using Action = std::variant<action::ActivateAcc, action::DeactivateAcc, action::PlaceObstacle, action::RemoveObstacle,
                            action::InjectFault, action::Label>;

std::string action_name(const Action& a);

struct ScenarioEvent {
  std::int64_t at = 0;
  std::string id; // optional; referenced by assertions
  Action action;
};

/// Step bound in an assertion: an absolute step or an event id.
using StepRef = std::variant<std::int64_t, std::string>;

/// Half-open step window [from, to). A missing `to` runs to the end.
struct Window {
  StepRef from = std::int64_t{0};
  std::optional<StepRef> to;
};

namespace check {
/// Velocity hits 0 within `steps` steps after the event and stays 0 until
/// `until` (exclusive) when given.
struct VelocityZeroWithin {
  std::string after;
  std::int64_t steps;
  std::optional<StepRef> until;
};
struct VelocityPositiveThroughout {
  Window window;
};
/// The heartbeat column never changes from the event's step onward.
struct HeartbeatFrozenAfter {
  std::string event;
};
struct AccSourceIs {
  rover::AccSourceTag tag;
  Window window;
};
/// The tag appears within `steps` steps after the event and holds until
/// `until` when given.
struct AccSourceWithin {
  rover::AccSourceTag tag;
  std::string after;
  std::int64_t steps;
  std::optional<StepRef> until;
};
struct AccSourceNever {
  rover::AccSourceTag tag;
  Window window;
};
struct ModeIs {
  hb::TwinMode mode;
  Window window;
};
/// The applied command equals (accel, velocity) within `steps` steps after
/// the event.
struct AppliedCommandWithin {
  std::string after;
  std::int64_t steps;
  double accel;
  double velocity;
};
} // namespace check

using AssertionKind = std::variant<check::VelocityZeroWithin, check::VelocityPositiveThroughout,
                                   check::HeartbeatFrozenAfter, check::AccSourceIs, check::AccSourceWithin,
                                   check::AccSourceNever, check::ModeIs, check::AppliedCommandWithin>;

struct Assertion {
  std::string name;
  AssertionKind kind;
};

std::string assertion_type(const AssertionKind& a);

struct Scenario {
  std::string name;
  rover::AccConfig config = rover::AccConfig::Augmentation;
  rover::AccVariant pt_acc = rover::AccVariant::Basic;
  rover::AccVariant dt_acc = rover::AccVariant::Advanced;
  double dt = 0.1;
  double period = 0.1; // wall-clock seconds per step
  std::int64_t duration_steps = 0;
  std::string start_clock = "08:36:00";
  bool fallback_available = true;
  bool dt_enabled = true;
  int miss_threshold = 3;
  int resync_steps = 3;
  rover::AccParams params;
  std::vector<ScenarioEvent> events;
  std::vector<Assertion> assertions;

  /// Step of the event with this id; throws std::out_of_range.
  std::int64_t event_step(const std::string& id) const;
  std::vector<fault::FaultSpec> faults() const;
};

/// Parses and checks a scenario document.
Scenario parse_scenario(const std::string& text);
Scenario scenario_from_json(const nlohmann::json& j);
Scenario load_scenario(const std::filesystem::path& path);

/// Seconds since midnight for "HH:MM:SS"; throws std::invalid_argument.
int parse_clock(const std::string& text);
std::string format_clock(std::int64_t seconds_since_midnight);

} // namespace twinrt::scenario
