#pragma once

#include "twinrt/rover/model.hpp"
#include "twinrt/simcore/unit.hpp"

namespace twinrt::rover {

/// Ideal sensors plus the user's ACC switch. The environment is mutated
/// between steps by the scenario driver.
/// Out: laser_front, us_left, us_right (real), user_cmd (boolean).
class SensorsUnit final : public sim::StepUnit {
public:
  SensorsUnit(sim::UnitId id, double r_max);

  EnvironmentState& environment() { return env_; }
  const EnvironmentState& environment() const { return env_; }
  void set_acc_active(bool on) { acc_active_ = on; }
  bool acc_active() const { return acc_active_; }

protected:
  void do_step(double dt) override;

private:
  EnvironmentState env_;
  bool acc_active_ = false;
};

/// Basic or advanced ACC.
/// In: laser_front, us_left, us_right, velocity (real), user_cmd (boolean),
///     env_step (integer, passed through untouched).
/// Out: target_accel, target_vel (real), tick (integer, completed steps),
///      env_step.
class AccUnit final : public sim::StepUnit {
public:
  AccUnit(sim::UnitId id, AccVariant variant, AccParams params);

  AccVariant variant() const { return variant_; }

protected:
  void do_step(double dt) override;

private:
  AccVariant variant_;
  AccParams params_;
  std::int64_t tick_ = 0;
};

/// ACC monitor and command selector on the PT. The twin mode is pushed in by
/// the runtime before each step.
/// In: local_accel, local_vel (real), local_tick (integer),
///     remote_accel, remote_vel (real), remote_age (integer).
/// Out: applied_accel, applied_vel (real), source (text), local_age (integer).
class AccMonitorUnit final : public sim::StepUnit {
public:
  AccMonitorUnit(sim::UnitId id, AccConfig config, AccParams params);

  void set_mode(hb::TwinMode mode) { mode_ = mode; }
  hb::TwinMode mode() const { return mode_; }
  AccConfig config() const { return config_; }

protected:
  void do_step(double dt) override;

private:
  AccConfig config_;
  AccParams params_;
  hb::TwinMode mode_ = hb::TwinMode::DtSynced;
  std::int64_t steps_ = 0;
};

/// Longitudinal vehicle.
/// In: target_accel, target_vel. Out: velocity, position.
class PlantUnit final : public sim::StepUnit {
public:
  PlantUnit(sim::UnitId id, double v_max);

  const VehicleState& state() const { return state_; }
  void set_state(const VehicleState& s);

protected:
  void do_step(double dt) override;

private:
  double v_max_;
  VehicleState state_;
};

/// The DT's copy of the PT vehicle and environment.
///
/// Each step it adopts, in this order: a fresh snapshot whose step is not
/// older than the current stamp, then fresh PT data likewise. With nothing
/// new it dead-reckons from the last command and reports env_step = -1.
///
/// In: laser_front, us_left, us_right, velocity (real), user_cmd (boolean),
///     env_step, env_step_age (integer); snap_position, snap_velocity,
///     snap_laser_front, snap_us_left, snap_us_right (real), snap_user_cmd
///     (boolean), snap_step, snap_step_age (integer); cmd_accel, cmd_vel.
/// Out: laser_front, us_left, us_right, velocity, position, user_cmd, env_step.
class MirrorUnit final : public sim::StepUnit {
public:
  MirrorUnit(sim::UnitId id, AccParams params);

  const VehicleState& state() const { return state_; }
  std::int64_t stamp() const { return stamp_; }
  int snapshots_adopted() const { return snapshots_; }

protected:
  void do_step(double dt) override;

private:
  void publish(std::int64_t env_step);

  AccParams params_;
  VehicleState state_;
  SensorReading reading_;
  bool user_cmd_ = false;
  std::int64_t stamp_ = -1;
  int snapshots_ = 0;
};

} // namespace twinrt::rover
