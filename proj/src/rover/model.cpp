#include "twinrt/rover/model.hpp"

#include <algorithm>
#include <stdexcept>
#include <string>

namespace twinrt::rover {

namespace {
template <typename E, std::size_t N>
E parse_enum(std::string_view text, const std::array<E, N>& all, const char* what) {
  for (E e : all) {
    if (to_string(e) == text) return e;
  }
  throw std::invalid_argument(std::string("unknown ") + what + " '" + std::string(text) + "'");
}
} // namespace

std::string_view to_string(Zone z) {
  switch (z) {
  case Zone::Front:
    return "Front";
  case Zone::Left:
    return "Left";
  case Zone::Right:
    return "Right";
  }
  return "?";
}

Zone zone_from_string(std::string_view text) {
  return parse_enum(text, std::array{Zone::Front, Zone::Left, Zone::Right}, "zone");
}

void AccParams::validate() const {
  if (!(a_min < 0.0 && 0.0 < a_max)) throw std::invalid_argument("require a_min < 0 < a_max");
  if (!(0.0 < d_stop && d_stop < r_max)) throw std::invalid_argument("require 0 < d_stop < r_max");
  if (!(v_cruise > 0.0)) throw std::invalid_argument("require v_cruise > 0");
  if (!(v_max > 0.0)) throw std::invalid_argument("require v_max > 0");
  if (!(k_p > 0.0)) throw std::invalid_argument("require k_p > 0");
  if (freshness < 0) throw std::invalid_argument("require freshness >= 0");
}

void EnvironmentState::place(Zone zone, double distance) {
  if (!(distance > 0.0 && distance <= r_max_)) {
    throw std::invalid_argument("obstacle distance must lie in (0, r_max]");
  }
  obstacle_[index(zone)] = distance;
}

SensorReading sense(const EnvironmentState& env) {
  auto read = [&](Zone z) { return env.obstacle(z).value_or(env.r_max()); };
  return {read(Zone::Front), read(Zone::Left), read(Zone::Right)};
}

AccCommand basic_acc(double laser_front, double velocity, const AccParams& p) {
  if (laser_front < p.d_stop) return safe_stop(p);
  return {std::clamp(p.k_p * (p.v_cruise - velocity), p.a_min, p.a_max), p.v_cruise};
}

AccCommand advanced_acc(const SensorReading& r, double velocity, const AccParams& p) {
  return basic_acc(std::min({r.laser_front, r.us_left, r.us_right}), velocity, p);
}

AccCommand standby_acc(double velocity, const AccParams& p) {
  return {std::clamp(p.k_p * (0.0 - velocity), p.a_min, p.a_max), 0.0};
}

AccCommand safe_stop(const AccParams& p) { return {p.a_min, 0.0}; }

std::string_view to_string(AccVariant v) { return v == AccVariant::Basic ? "basic" : "advanced"; }

AccVariant acc_variant_from_string(std::string_view text) {
  return parse_enum(text, std::array{AccVariant::Basic, AccVariant::Advanced}, "ACC variant");
}

std::string_view to_string(AccConfig c) { return c == AccConfig::Augmentation ? "augmentation" : "redundancy"; }

AccConfig acc_config_from_string(std::string_view text) {
  return parse_enum(text, std::array{AccConfig::Augmentation, AccConfig::Redundancy}, "configuration");
}

std::string_view to_string(AccSourceTag t) {
  switch (t) {
  case AccSourceTag::PtMain:
    return "PtMain";
  case AccSourceTag::PtFallback:
    return "PtFallback";
  case AccSourceTag::DtAugmented:
    return "DtAugmented";
  case AccSourceTag::DtReplica:
    return "DtReplica";
  case AccSourceTag::SafeStop:
    return "SafeStop";
  }
  return "?";
}

AccSourceTag acc_source_from_string(std::string_view text) {
  return parse_enum(text,
                    std::array{AccSourceTag::PtMain, AccSourceTag::PtFallback, AccSourceTag::DtAugmented,
                               AccSourceTag::DtReplica, AccSourceTag::SafeStop},
                    "ACC source");
}

Selection select_command(AccConfig config, hb::TwinMode mode, const AgedCommand& local, const AgedCommand& remote,
                         const AccParams& p) {
  if (mode == hb::TwinMode::SafeMode) return {safe_stop(p), AccSourceTag::SafeStop};
  const bool remote_ok = mode == hb::TwinMode::DtSynced && remote.age <= p.freshness;
  if (config == AccConfig::Augmentation) {
    if (remote_ok) return {remote.cmd, AccSourceTag::DtAugmented};
    return {local.cmd, AccSourceTag::PtFallback};
  }
  if (local.age <= p.freshness) return {local.cmd, AccSourceTag::PtMain};
  if (remote_ok) return {remote.cmd, AccSourceTag::DtReplica};
  return {safe_stop(p), AccSourceTag::SafeStop};
}

VehicleState integrate(const VehicleState& v, const AccCommand& cmd, double dt, double v_max) {
  double next = v.velocity + cmd.target_accel * dt;
  if (cmd.target_accel > 0.0) next = std::min(next, cmd.target_vel);
  if (cmd.target_accel < 0.0) next = std::max(next, cmd.target_vel);
  next = std::clamp(next, 0.0, v_max);
  return {v.position + v.velocity * dt, next};
}

} // namespace twinrt::rover
