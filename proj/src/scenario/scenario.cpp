#include "twinrt/scenario/scenario.hpp"

#include <algorithm>
#include <fstream>
#include <set>
#include <sstream>

namespace twinrt::scenario {

using nlohmann::json;

ParseError::ParseError(std::string where, const std::string& what)
    : std::runtime_error(where + ": " + what), where_(std::move(where)) {}

InvariantViolation::InvariantViolation(std::string rule, const std::string& what)
    : std::runtime_error(rule + ": " + what), rule_(std::move(rule)) {}

std::string action_name(const Action& a) {
  struct Name {
    std::string operator()(const action::ActivateAcc&) const { return "activateAcc"; }
    std::string operator()(const action::DeactivateAcc&) const { return "deactivateAcc"; }
    std::string operator()(const action::PlaceObstacle&) const { return "placeObstacle"; }
    std::string operator()(const action::RemoveObstacle&) const { return "removeObstacle"; }
    std::string operator()(const action::InjectFault&) const { return "injectFault"; }
    std::string operator()(const action::Label&) const { return "label"; }
  };
  return std::visit(Name{}, a);
}

std::string assertion_type(const AssertionKind& a) {
  struct Name {
    std::string operator()(const check::VelocityZeroWithin&) const { return "velocityZeroWithin"; }
    std::string operator()(const check::VelocityPositiveThroughout&) const { return "velocityPositiveThroughout"; }
    std::string operator()(const check::HeartbeatFrozenAfter&) const { return "heartbeatFrozenAfter"; }
    std::string operator()(const check::AccSourceIs&) const { return "accSourceIs"; }
    std::string operator()(const check::AccSourceWithin&) const { return "accSourceWithin"; }
    std::string operator()(const check::AccSourceNever&) const { return "accSourceNever"; }
    std::string operator()(const check::ModeIs&) const { return "modeIs"; }
    std::string operator()(const check::AppliedCommandWithin&) const { return "appliedCommandWithin"; }
  };
  return std::visit(Name{}, a);
}

std::int64_t Scenario::event_step(const std::string& id) const {
  for (const auto& e : events) {
    if (e.id == id) return e.at;
  }
  throw std::out_of_range("no event with id '" + id + "'");
}

std::vector<fault::FaultSpec> Scenario::faults() const {
  std::vector<fault::FaultSpec> out;
  for (const auto& e : events) {
    if (const auto* f = std::get_if<action::InjectFault>(&e.action)) out.push_back({f->twin, f->unit, e.at});
  }
  return out;
}

int parse_clock(const std::string& text) {
  int h = 0, m = 0, s = 0;
  char c1 = 0, c2 = 0;
  std::istringstream in(text);
  if (!(in >> h >> c1 >> m >> c2 >> s) || c1 != ':' || c2 != ':' || !in.eof() || h < 0 || h > 23 || m < 0 ||
      m > 59 || s < 0 || s > 59) {
    throw std::invalid_argument("expected HH:MM:SS, got '" + text + "'");
  }
  return h * 3600 + m * 60 + s;
}

std::string format_clock(std::int64_t seconds) {
  seconds %= 86400;
  if (seconds < 0) seconds += 86400;
  char buf[16];
  std::snprintf(buf, sizeof buf, "%02d:%02d:%02d", static_cast<int>(seconds / 3600),
                static_cast<int>(seconds / 60 % 60), static_cast<int>(seconds % 60));
  return buf;
}

namespace {

// Typed field access that reports the JSON path on failure.
class Field {
public:
  Field(const json& j, std::string path) : j_(j), path_(std::move(path)) {}

  Field operator[](const std::string& key) const {
    if (!j_.is_object()) throw ParseError(path_, "expected an object");
    if (!j_.contains(key)) throw ParseError(child(key), "missing field");
    return Field(j_.at(key), child(key));
  }
  Field operator[](std::size_t i) const { return Field(j_.at(i), path_ + "[" + std::to_string(i) + "]"); }

  bool has(const std::string& key) const { return j_.is_object() && j_.contains(key); }
  std::size_t size() const { return j_.size(); }
  bool is_array() const { return j_.is_array(); }
  bool is_string() const { return j_.is_string(); }
  bool is_integer() const { return j_.is_number_integer(); }
  const std::string& path() const { return path_; }

  std::string str() const {
    if (!j_.is_string()) throw ParseError(path_, "expected a string");
    return j_.get<std::string>();
  }
  double real() const {
    if (!j_.is_number()) throw ParseError(path_, "expected a number");
    return j_.get<double>();
  }
  std::int64_t integer() const {
    if (!j_.is_number_integer()) throw ParseError(path_, "expected an integer");
    return j_.get<std::int64_t>();
  }
  bool boolean() const {
    if (!j_.is_boolean()) throw ParseError(path_, "expected true or false");
    return j_.get<bool>();
  }
  Field array() const {
    if (!j_.is_array()) throw ParseError(path_, "expected an array");
    return *this;
  }
  template <typename F> auto as(F&& parse) const {
    try {
      return parse(str());
    } catch (const std::invalid_argument& e) {
      throw ParseError(path_, e.what());
    }
  }

private:
  std::string child(const std::string& key) const { return path_.empty() ? key : path_ + "." + key; }
  const json& j_;
  std::string path_;
};

StepRef step_ref(const Field& f) {
  if (f.is_integer()) return f.integer();
  if (f.is_string()) return f.str();
  throw ParseError(f.path(), "expected a step number or an event id");
}

Window window(const Field& f) {
  Window w;
  w.from = step_ref(f["from"]);
  if (f.has("to")) w.to = step_ref(f["to"]);
  return w;
}

std::optional<StepRef> optional_ref(const Field& f, const char* key) {
  if (!f.has(key)) return std::nullopt;
  return step_ref(f[key]);
}

Action parse_action(const Field& e) {
  auto name = e["action"].str();
  if (name == "activateAcc") return action::ActivateAcc{};
  if (name == "deactivateAcc") return action::DeactivateAcc{};
  if (name == "placeObstacle") {
    return action::PlaceObstacle{e["zone"].as(rover::zone_from_string), e["distance"].real()};
  }
  if (name == "removeObstacle") return action::RemoveObstacle{e["zone"].as(rover::zone_from_string)};
  if (name == "injectFault") return action::InjectFault{e["twin"].as(link::twin_from_string), e["unit"].str()};
  if (name == "label") return action::Label{};
  throw ParseError(e["action"].path(), "unknown action '" + name + "'");
}

AssertionKind parse_assertion(const Field& a) {
  auto type = a["type"].str();
  auto tag = [&] { return a["tag"].as(rover::acc_source_from_string); };
  if (type == "velocityZeroWithin") {
    return check::VelocityZeroWithin{a["after"].str(), a["steps"].integer(), optional_ref(a, "until")};
  }
  if (type == "velocityPositiveThroughout") return check::VelocityPositiveThroughout{window(a["window"])};
  if (type == "heartbeatFrozenAfter") return check::HeartbeatFrozenAfter{a["event"].str()};
  if (type == "accSourceIs") return check::AccSourceIs{tag(), window(a["window"])};
  if (type == "accSourceWithin") {
    return check::AccSourceWithin{tag(), a["after"].str(), a["steps"].integer(), optional_ref(a, "until")};
  }
  if (type == "accSourceNever") {
    return check::AccSourceNever{tag(), a.has("window") ? window(a["window"]) : Window{}};
  }
  if (type == "modeIs") return check::ModeIs{a["mode"].as(hb::twin_mode_from_string), window(a["window"])};
  if (type == "appliedCommandWithin") {
    return check::AppliedCommandWithin{a["after"].str(), a["steps"].integer(), a["accel"].real(),
                                       a["velocity"].real()};
  }
  throw ParseError(a["type"].path(), "unknown assertion type '" + type + "'");
}

rover::AccParams parse_params(const Field& f, rover::AccParams p) {
  auto real = [&](const char* key, double& out) {
    if (f.has(key)) out = f[key].real();
  };
  real("d_stop", p.d_stop);
  real("v_cruise", p.v_cruise);
  real("a_min", p.a_min);
  real("a_max", p.a_max);
  real("k_p", p.k_p);
  real("r_max", p.r_max);
  real("v_max", p.v_max);
  if (f.has("freshness")) p.freshness = static_cast<int>(f["freshness"].integer());
  return p;
}

void check_invariants(const Scenario& s) {
  try {
    s.params.validate();
  } catch (const std::invalid_argument& e) {
    throw InvariantViolation("params", e.what());
  }
  if (!(s.dt > 0.0)) throw InvariantViolation("dt", "dt must be positive");
  if (!(s.period > 0.0)) throw InvariantViolation("period", "period must be positive");
  if (s.duration_steps <= 0) throw InvariantViolation("duration", "duration_steps must be positive");
  if (s.miss_threshold < 1) throw InvariantViolation("miss_threshold", "must be at least 1");
  if (s.resync_steps < 1) throw InvariantViolation("resync_steps", "must be at least 1");
  try {
    parse_clock(s.start_clock);
  } catch (const std::invalid_argument& e) {
    throw InvariantViolation("start_clock", e.what());
  }

  std::set<std::string> ids;
  std::int64_t prev = 0;
  for (std::size_t i = 0; i < s.events.size(); ++i) {
    const auto& e = s.events[i];
    std::string where = "events[" + std::to_string(i) + "]";
    if (e.at < 0) throw InvariantViolation("event-step", where + " is scheduled before step 0");
    if (e.at < prev) throw InvariantViolation("events-sorted", where + " is out of order");
    prev = e.at;
    if (e.at >= s.duration_steps) {
      throw InvariantViolation("duration", where + " at step " + std::to_string(e.at) + " is not before the end");
    }
    if (!e.id.empty() && !ids.insert(e.id).second) {
      throw InvariantViolation("event-id", "duplicate event id '" + e.id + "'");
    }
    if (const auto* p = std::get_if<action::PlaceObstacle>(&e.action)) {
      if (!(p->distance > 0.0 && p->distance <= s.params.r_max)) {
        throw InvariantViolation("obstacle-distance", where + " distance must lie in (0, r_max]");
      }
    }
  }

  auto need = [&](const std::string& id, const std::string& who) {
    if (ids.count(id) == 0) throw InvariantViolation("event-ref", who + " refers to unknown event '" + id + "'");
  };
  auto need_ref = [&](const std::optional<StepRef>& r, const std::string& who) {
    if (r && std::holds_alternative<std::string>(*r)) need(std::get<std::string>(*r), who);
  };
  auto need_window = [&](const Window& w, const std::string& who) {
    need_ref(w.from, who);
    need_ref(w.to, who);
  };
  for (const auto& a : s.assertions) {
    std::visit(
        [&](const auto& c) {
          using T = std::decay_t<decltype(c)>;
          if constexpr (std::is_same_v<T, check::VelocityZeroWithin> || std::is_same_v<T, check::AccSourceWithin>) {
            need(c.after, a.name);
            need_ref(c.until, a.name);
          } else if constexpr (std::is_same_v<T, check::AppliedCommandWithin>) {
            need(c.after, a.name);
          } else if constexpr (std::is_same_v<T, check::HeartbeatFrozenAfter>) {
            need(c.event, a.name);
          } else {
            need_window(c.window, a.name);
          }
        },
        a.kind);
  }
}

} // namespace

Scenario scenario_from_json(const json& doc) {
  Field root(doc, "");
  Scenario s;
  s.name = root["name"].str();
  s.config = root["config"].as(rover::acc_config_from_string);
  if (s.config == rover::AccConfig::Redundancy) s.dt_acc = rover::AccVariant::Basic;
  if (root.has("pt_acc")) s.pt_acc = root["pt_acc"].as(rover::acc_variant_from_string);
  if (root.has("dt_acc")) s.dt_acc = root["dt_acc"].as(rover::acc_variant_from_string);
  if (root.has("dt")) s.dt = root["dt"].real();
  s.period = s.dt;
  if (root.has("period")) s.period = root["period"].real();
  s.duration_steps = root["duration_steps"].integer();
  if (root.has("start_clock")) s.start_clock = root["start_clock"].str();
  if (root.has("fallback_available")) s.fallback_available = root["fallback_available"].boolean();
  if (root.has("dt_enabled")) s.dt_enabled = root["dt_enabled"].boolean();
  if (root.has("miss_threshold")) s.miss_threshold = static_cast<int>(root["miss_threshold"].integer());
  if (root.has("resync_steps")) s.resync_steps = static_cast<int>(root["resync_steps"].integer());
  if (root.has("params")) s.params = parse_params(root["params"], s.params);

  if (root.has("events")) {
    auto events = root["events"].array();
    for (std::size_t i = 0; i < events.size(); ++i) {
      auto e = events[i];
      ScenarioEvent ev;
      ev.at = e["at"].integer();
      if (e.has("id")) ev.id = e["id"].str();
      ev.action = parse_action(e);
      s.events.push_back(std::move(ev));
    }
  }
  if (root.has("assertions")) {
    auto list = root["assertions"].array();
    for (std::size_t i = 0; i < list.size(); ++i) {
      auto a = list[i];
      Assertion out;
      out.kind = parse_assertion(a);
      out.name = a.has("name") ? a["name"].str() : assertion_type(out.kind) + "#" + std::to_string(i);
      s.assertions.push_back(std::move(out));
    }
  }
  check_invariants(s);
  return s;
}

Scenario parse_scenario(const std::string& text) {
  json doc;
  try {
    doc = json::parse(text);
  } catch (const json::parse_error& e) {
    auto upto = std::min<std::size_t>(e.byte, text.size());
    auto line = 1 + std::count(text.begin(), text.begin() + static_cast<std::ptrdiff_t>(upto), '\n');
    throw ParseError("line " + std::to_string(line), "invalid JSON");
  }
  return scenario_from_json(doc);
}

Scenario load_scenario(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open scenario " + path.string());
  std::stringstream buf;
  buf << in.rdbuf();
  return parse_scenario(buf.str());
}

} // namespace twinrt::scenario
