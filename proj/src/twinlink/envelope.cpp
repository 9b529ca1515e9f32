#include "twinrt/twinlink/envelope.hpp"

namespace twinrt::link {

std::string_view to_string(TwinId id) { return id == TwinId::PT ? "PT" : "DT"; }

TwinId twin_from_string(std::string_view text) {
  if (text == "PT") return TwinId::PT;
  if (text == "DT") return TwinId::DT;
  throw std::invalid_argument("unknown twin id '" + std::string(text) + "'");
}

bool valid_topic_name(std::string_view name) {
  if (name.empty()) return false;
  for (char c : name) {
    bool ok = (c >= 'a' && c <= 'z') || (c >= '0' && c <= '9') || c == '.' || c == '_' || c == '-';
    if (!ok) return false;
  }
  return true;
}

Topic::Topic(std::string name) : name_(std::move(name)) {
  if (!valid_topic_name(name_)) throw std::invalid_argument("invalid topic name '" + name_ + "'");
}

Topic topics::heartbeat_of(TwinId id) { return id == TwinId::PT ? pt_heartbeat : dt_heartbeat; }

} // namespace twinrt::link
