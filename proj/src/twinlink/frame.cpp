#include "twinrt/twinlink/frame.hpp"

#include <cmath>
#include <limits>
#include <set>
#include <vector>

#include <json.hpp>

namespace twinrt::link {

using nlohmann::json;

namespace {

// Finite reals and integers map to JSON numbers; the encoder always emits a
// decimal point or exponent for reals, so the tag survives the round trip.
// Non-finite reals have no JSON number form and travel as {"real": "..."}.
json value_to_json(const sim::SignalValue& v) {
  switch (v.kind()) {
  case sim::Kind::Real: {
    double d = v.as_real();
    if (std::isnan(d)) return json{{"real", "nan"}};
    if (std::isinf(d)) return json{{"real", d > 0 ? "inf" : "-inf"}};
    return json(d);
  }
  case sim::Kind::Integer:
    return json(v.as_integer());
  case sim::Kind::Boolean:
    return json(v.as_boolean());
  case sim::Kind::Text:
    return json(v.as_text());
  }
  return json();
}

sim::SignalValue value_from_json(const json& j, const std::string& name) {
  if (j.is_number_float()) return sim::SignalValue(j.get<double>());
  if (j.is_number_unsigned()) {
    auto u = j.get<std::uint64_t>();
    if (u > static_cast<std::uint64_t>(std::numeric_limits<std::int64_t>::max())) {
      throw MalformedFrame("integer out of range for '" + name + "'");
    }
    return sim::SignalValue(static_cast<std::int64_t>(u));
  }
  if (j.is_number_integer()) return sim::SignalValue(j.get<std::int64_t>());
  if (j.is_boolean()) return sim::SignalValue(j.get<bool>());
  if (j.is_string()) return sim::SignalValue(j.get<std::string>());
  if (j.is_object() && j.size() == 1 && j.contains("real") && j["real"].is_string()) {
    const auto& s = j["real"].get_ref<const std::string&>();
    if (s == "nan") return sim::SignalValue(std::numeric_limits<double>::quiet_NaN());
    if (s == "inf") return sim::SignalValue(std::numeric_limits<double>::infinity());
    if (s == "-inf") return sim::SignalValue(-std::numeric_limits<double>::infinity());
  }
  throw MalformedFrame("unsupported value for payload entry '" + name + "'");
}

json envelope_to_json(const Envelope& e) {
  json payload = json::object();
  for (const auto& [name, value] : e.payload) payload[name] = value_to_json(value);
  return json{{"version", e.version},       {"source", std::string(to_string(e.source))},
              {"seq", e.seq},               {"sim_step", e.sim_step},
              {"wallclock", e.wallclock},   {"payload", std::move(payload)}};
}

template <typename T> T require(const json& j, const char* key) {
  if (!j.contains(key)) throw MalformedFrame(std::string("missing field '") + key + "'");
  try {
    return j.at(key).get<T>();
  } catch (const json::exception&) {
    throw MalformedFrame(std::string("bad field '") + key + "'");
  }
}

Envelope envelope_from_json(const json& j) {
  if (!j.is_object()) throw MalformedFrame("envelope must be an object");
  Envelope e;
  e.version = require<int>(j, "version");
  if (e.version != Envelope::kVersion) throw MalformedFrame("unsupported envelope version");
  try {
    e.source = twin_from_string(require<std::string>(j, "source"));
  } catch (const std::invalid_argument& ex) {
    throw MalformedFrame(ex.what());
  }
  if (!j.contains("seq") || !j["seq"].is_number_integer() || j["seq"].get<std::int64_t>() < 0) {
    throw MalformedFrame("bad field 'seq'");
  }
  e.seq = j["seq"].get<std::uint64_t>();
  if (!j.contains("sim_step") || !j["sim_step"].is_number_integer()) throw MalformedFrame("bad field 'sim_step'");
  e.sim_step = j["sim_step"].get<std::int64_t>();
  e.wallclock = require<std::string>(j, "wallclock");
  if (!j.contains("payload") || !j["payload"].is_object()) throw MalformedFrame("payload must be an object");
  for (const auto& [name, value] : j["payload"].items()) e.payload.emplace(name, value_from_json(value, name));
  return e;
}

Topic topic_field(const json& j) {
  auto name = require<std::string>(j, "topic");
  if (!valid_topic_name(name)) throw MalformedFrame("invalid topic '" + name + "'");
  return Topic(name);
}

} // namespace

std::string encode_frame(const BrokerFrame& frame) {
  json j = std::visit(
      [](const auto& f) -> json {
        using F = std::decay_t<decltype(f)>;
        if constexpr (std::is_same_v<F, frame::Subscribe>) {
          return json{{"type", "subscribe"}, {"topic", f.topic.str()}};
        } else if constexpr (std::is_same_v<F, frame::Publish>) {
          return json{{"type", "publish"}, {"topic", f.topic.str()}, {"envelope", envelope_to_json(f.envelope)}};
        } else if constexpr (std::is_same_v<F, frame::Deliver>) {
          return json{{"type", "deliver"}, {"topic", f.topic.str()}, {"envelope", envelope_to_json(f.envelope)}};
        } else if constexpr (std::is_same_v<F, frame::Ping>) {
          return json{{"type", "ping"}};
        } else {
          return json{{"type", "pong"}};
        }
      },
      frame);
  return j.dump() + '\n';
}

BrokerFrame parse_frame(std::string_view bytes, FrameOrigin origin) {
  if (!bytes.empty() && bytes.back() == '\n') bytes.remove_suffix(1);
  if (!bytes.empty() && bytes.back() == '\r') bytes.remove_suffix(1);

  // JSON objects may legally repeat keys; frames may not.
  std::vector<std::set<std::string>> keys;
  bool duplicate = false;
  json::parser_callback_t cb = [&](int, json::parse_event_t event, json& parsed) {
    switch (event) {
    case json::parse_event_t::object_start:
      keys.emplace_back();
      break;
    case json::parse_event_t::object_end:
      if (!keys.empty()) keys.pop_back();
      break;
    case json::parse_event_t::key:
      if (!keys.empty() && !keys.back().insert(parsed.get<std::string>()).second) duplicate = true;
      break;
    default:
      break;
    }
    return true;
  };

  json j;
  try {
    j = json::parse(bytes.begin(), bytes.end(), cb);
  } catch (const json::exception& e) {
    throw MalformedFrame(std::string("bad JSON: ") + e.what());
  }
  if (duplicate) throw MalformedFrame("duplicate key");
  if (!j.is_object()) throw MalformedFrame("frame must be a JSON object");

  auto type = require<std::string>(j, "type");
  auto from_client_only = [&](const char* what) {
    if (origin != FrameOrigin::Client) throw MalformedFrame(std::string(what) + " sent by the broker");
  };
  if (type == "subscribe") {
    from_client_only("subscribe");
    return frame::Subscribe{topic_field(j)};
  }
  if (type == "publish") {
    from_client_only("publish");
    if (!j.contains("envelope")) throw MalformedFrame("publish without envelope");
    return frame::Publish{topic_field(j), envelope_from_json(j["envelope"])};
  }
  if (type == "deliver") {
    if (origin != FrameOrigin::Broker) throw MalformedFrame("deliver sent by a client");
    if (!j.contains("envelope")) throw MalformedFrame("deliver without envelope");
    return frame::Deliver{topic_field(j), envelope_from_json(j["envelope"])};
  }
  if (type == "ping") return frame::Ping{};
  if (type == "pong") return frame::Pong{};
  throw MalformedFrame("unknown frame type '" + type + "'");
}

} // namespace twinrt::link
