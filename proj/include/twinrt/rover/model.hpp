#pragma once

#include "twinrt/heartbeat/heartbeat.hpp"

#include <array>
#include <cstdint>
#include <optional>
#include <string_view>

namespace twinrt::rover {

enum class Zone { Front, Left, Right };
std::string_view to_string(Zone z);
Zone zone_from_string(std::string_view text);

/// Controller, sensor and plant constants. Defaults suit a 1:10 rover.
struct AccParams {
  double d_stop = 0.5;   // m
  double v_cruise = 0.5; // m/s
  double a_min = -2.0;   // m/s^2
  double a_max = 1.0;    // m/s^2
  double k_p = 2.0;      // 1/s
  int freshness = 3;     // steps
  double r_max = 4.0;    // m, sensor range
  double v_max = 1.0;    // m/s

  /// Throws std::invalid_argument naming the violated bound.
  void validate() const;
  bool operator==(const AccParams&) const = default;
};

/// Per-zone obstacle distance; distances are static while present.
class EnvironmentState {
public:
  explicit EnvironmentState(double r_max = 4.0) : r_max_(r_max) {}

  void place(Zone zone, double distance);
  void remove(Zone zone) { obstacle_[index(zone)].reset(); }
  std::optional<double> obstacle(Zone zone) const { return obstacle_[index(zone)]; }
  double r_max() const { return r_max_; }

private:
  static std::size_t index(Zone z) { return static_cast<std::size_t>(z); }
  double r_max_;
  std::array<std::optional<double>, 3> obstacle_{};
};

struct SensorReading {
  double laser_front;
  double us_left;
  double us_right;
  bool operator==(const SensorReading&) const = default;
};

SensorReading sense(const EnvironmentState& env);

struct AccCommand {
  double target_accel = 0.0;
  double target_vel = 0.0;
  bool operator==(const AccCommand&) const = default;
};

AccCommand basic_acc(double laser_front, double velocity, const AccParams& p);
AccCommand advanced_acc(const SensorReading& reading, double velocity, const AccParams& p);
/// ACC switched off by the user: bring the set speed to zero.
AccCommand standby_acc(double velocity, const AccParams& p);
AccCommand safe_stop(const AccParams& p);

enum class AccVariant { Basic, Advanced };
std::string_view to_string(AccVariant v);
AccVariant acc_variant_from_string(std::string_view text);

enum class AccConfig { Augmentation, Redundancy };
std::string_view to_string(AccConfig c);
AccConfig acc_config_from_string(std::string_view text);

enum class AccSourceTag { PtMain, PtFallback, DtAugmented, DtReplica, SafeStop };
std::string_view to_string(AccSourceTag t);
AccSourceTag acc_source_from_string(std::string_view text);

/// A command and the number of steps since it was produced.
struct AgedCommand {
  AccCommand cmd;
  std::int64_t age;
};

struct Selection {
  AccCommand cmd;
  AccSourceTag source;
  bool operator==(const Selection&) const = default;
};

/// Picks the command the plant receives. SafeMode always forces a stop;
/// otherwise augmentation prefers a fresh DT command and redundancy a
/// fresh local one.
Selection select_command(AccConfig config, hb::TwinMode mode, const AgedCommand& local, const AgedCommand& remote,
                         const AccParams& p);

struct VehicleState {
  double position = 0.0;
  double velocity = 0.0;
  bool operator==(const VehicleState&) const = default;
};

VehicleState integrate(const VehicleState& v, const AccCommand& cmd, double dt, double v_max);

} // namespace twinrt::rover
