#include "twinrt/twinlink/link_config.hpp"

#include <algorithm>
#include <fstream>
#include <set>

namespace twinrt::link {

using nlohmann::json;

void LinkConfig::validate() const {
  std::set<std::pair<std::string, std::string>> published;
  for (const auto& o : outgoing) {
    if (o.signal.empty()) throw std::invalid_argument("outgoing signal name is empty");
    if (!published.insert({o.topic.str(), o.signal}).second) {
      throw std::invalid_argument("signal '" + o.signal + "' published twice on " + o.topic.str());
    }
  }
  std::set<std::string> ports;
  for (const auto& i : incoming) {
    if (i.port.empty() || i.field.empty()) throw std::invalid_argument("incoming entry needs field and port");
    if (!ports.insert(i.port).second) {
      throw std::invalid_argument("two incoming entries target port '" + i.port + "'");
    }
    if (i.field == kSimStepField && i.kind != sim::Kind::Integer) {
      throw std::invalid_argument("'$sim_step' maps to integer ports only");
    }
  }
}

std::vector<Topic> LinkConfig::outgoing_topics() const {
  std::vector<Topic> out;
  for (const auto& o : outgoing) {
    if (std::find(out.begin(), out.end(), o.topic) == out.end()) out.push_back(o.topic);
  }
  return out;
}

std::vector<Topic> LinkConfig::incoming_topics() const {
  std::vector<Topic> out;
  for (const auto& i : incoming) {
    if (std::find(out.begin(), out.end(), i.topic) == out.end()) out.push_back(i.topic);
  }
  return out;
}

LinkConfig LinkConfig::from_json(const json& j) {
  LinkConfig cfg;
  for (const auto& o : j.value("outgoing", json::array())) {
    cfg.outgoing.push_back(OutgoingSignal{o.at("signal").get<std::string>(),
                                          sim::kind_from_string(o.at("kind").get<std::string>()),
                                          Topic(o.at("topic").get<std::string>())});
  }
  for (const auto& i : j.value("incoming", json::array())) {
    IncomingSignal in{Topic(i.at("topic").get<std::string>()), i.at("field").get<std::string>(),
                      i.at("port").get<std::string>(), sim::kind_from_string(i.at("kind").get<std::string>())};
    auto hold = i.value("hold", std::string("last"));
    if (hold == "last") {
      in.hold = HoldPolicy::HoldLast;
    } else if (hold == "default") {
      in.hold = HoldPolicy::ResetToDefault;
    } else {
      throw std::invalid_argument("unknown hold policy '" + hold + "'");
    }
    cfg.incoming.push_back(std::move(in));
  }
  cfg.validate();
  return cfg;
}

json LinkConfig::to_json() const {
  json out = json::array();
  for (const auto& o : outgoing) {
    out.push_back({{"signal", o.signal}, {"kind", std::string(sim::to_string(o.kind))}, {"topic", o.topic.str()}});
  }
  json in = json::array();
  for (const auto& i : incoming) {
    in.push_back({{"topic", i.topic.str()},
                  {"field", i.field},
                  {"port", i.port},
                  {"kind", std::string(sim::to_string(i.kind))},
                  {"hold", i.hold == HoldPolicy::HoldLast ? "last" : "default"}});
  }
  return json{{"outgoing", out}, {"incoming", in}};
}

LinkConfig load_link_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open link config " + path.string());
  return LinkConfig::from_json(json::parse(in));
}

} // namespace twinrt::link
