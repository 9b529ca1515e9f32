#include "twinrt/rover/units.hpp"

#include "twinrt/twinlink/bridge.hpp"

namespace twinrt::rover {

SensorsUnit::SensorsUnit(sim::UnitId id, double r_max) : StepUnit(std::move(id)), env_(r_max) {
  declare_output("laser_front", r_max);
  declare_output("us_left", r_max);
  declare_output("us_right", r_max);
  declare_output("user_cmd", false);
}

void SensorsUnit::do_step(double) {
  auto r = sense(env_);
  set_output("laser_front", r.laser_front);
  set_output("us_left", r.us_left);
  set_output("us_right", r.us_right);
  set_output("user_cmd", acc_active_);
}

AccUnit::AccUnit(sim::UnitId id, AccVariant variant, AccParams params)
    : StepUnit(std::move(id)), variant_(variant), params_(params) {
  params_.validate();
  for (const char* name : {"laser_front", "us_left", "us_right"}) declare_input(name, params_.r_max);
  declare_input("velocity", 0.0);
  declare_input("user_cmd", false);
  declare_input("env_step", std::int64_t{-1});
  declare_output("target_accel", 0.0);
  declare_output("target_vel", 0.0);
  declare_output("tick", std::int64_t{0});
  declare_output("env_step", std::int64_t{-1});
}

void AccUnit::do_step(double) {
  const double v = in_real("velocity");
  AccCommand cmd;
  if (!in_boolean("user_cmd")) {
    cmd = standby_acc(v, params_);
  } else if (variant_ == AccVariant::Basic) {
    cmd = basic_acc(in_real("laser_front"), v, params_);
  } else {
    cmd = advanced_acc({in_real("laser_front"), in_real("us_left"), in_real("us_right")}, v, params_);
  }
  set_output("target_accel", cmd.target_accel);
  set_output("target_vel", cmd.target_vel);
  set_output("tick", ++tick_);
  set_output("env_step", input("env_step"));
}

AccMonitorUnit::AccMonitorUnit(sim::UnitId id, AccConfig config, AccParams params)
    : StepUnit(std::move(id)), config_(config), params_(params) {
  params_.validate();
  declare_input("local_accel", 0.0);
  declare_input("local_vel", 0.0);
  declare_input("local_tick", std::int64_t{0});
  declare_input("remote_accel", 0.0);
  declare_input("remote_vel", 0.0);
  declare_input("remote_age", link::kNeverReceived);
  declare_output("applied_accel", 0.0);
  declare_output("applied_vel", 0.0);
  declare_output("source", std::string(to_string(AccSourceTag::SafeStop)));
  declare_output("local_age", link::kNeverReceived);
}

void AccMonitorUnit::do_step(double) {
  ++steps_;
  const std::int64_t tick = in_integer("local_tick");
  const std::int64_t local_age = tick > 0 ? steps_ - tick : link::kNeverReceived;
  AgedCommand local{{in_real("local_accel"), in_real("local_vel")}, local_age};
  AgedCommand remote{{in_real("remote_accel"), in_real("remote_vel")}, in_integer("remote_age")};
  auto sel = select_command(config_, mode_, local, remote, params_);
  set_output("applied_accel", sel.cmd.target_accel);
  set_output("applied_vel", sel.cmd.target_vel);
  set_output("source", std::string(to_string(sel.source)));
  set_output("local_age", local_age);
}

PlantUnit::PlantUnit(sim::UnitId id, double v_max) : StepUnit(std::move(id)), v_max_(v_max) {
  declare_input("target_accel", 0.0);
  declare_input("target_vel", 0.0);
  declare_output("velocity", 0.0);
  declare_output("position", 0.0);
}

void PlantUnit::set_state(const VehicleState& s) {
  state_ = s;
  set_output("velocity", s.velocity);
  set_output("position", s.position);
}

void PlantUnit::do_step(double dt) {
  set_state(integrate(state_, {in_real("target_accel"), in_real("target_vel")}, dt, v_max_));
}

MirrorUnit::MirrorUnit(sim::UnitId id, AccParams params)
    : StepUnit(std::move(id)), params_(params), reading_{params.r_max, params.r_max, params.r_max} {
  for (const char* name : {"laser_front", "us_left", "us_right"}) declare_input(name, params_.r_max);
  declare_input("velocity", 0.0);
  declare_input("user_cmd", false);
  declare_input("env_step", std::int64_t{-1});
  declare_input("env_step_age", link::kNeverReceived);
  for (const char* name : {"snap_laser_front", "snap_us_left", "snap_us_right"}) declare_input(name, params_.r_max);
  declare_input("snap_position", 0.0);
  declare_input("snap_velocity", 0.0);
  declare_input("snap_user_cmd", false);
  declare_input("snap_step", std::int64_t{-1});
  declare_input("snap_step_age", link::kNeverReceived);
  declare_input("cmd_accel", 0.0);
  declare_input("cmd_vel", 0.0);

  for (const char* name : {"laser_front", "us_left", "us_right"}) declare_output(name, params_.r_max);
  declare_output("velocity", 0.0);
  declare_output("position", 0.0);
  declare_output("user_cmd", false);
  declare_output("env_step", std::int64_t{-1});
}

void MirrorUnit::do_step(double dt) {
  bool adopted = false;
  if (in_integer("snap_step_age") == 0 && in_integer("snap_step") >= stamp_) {
    stamp_ = in_integer("snap_step");
    state_ = {in_real("snap_position"), in_real("snap_velocity")};
    reading_ = {in_real("snap_laser_front"), in_real("snap_us_left"), in_real("snap_us_right")};
    user_cmd_ = in_boolean("snap_user_cmd");
    ++snapshots_;
    adopted = true;
  }
  if (in_integer("env_step_age") == 0 && in_integer("env_step") >= stamp_) {
    const std::int64_t step = in_integer("env_step");
    // Position is not on the wire; advance it from the last adopted velocity.
    if (!adopted && stamp_ >= 0) state_.position += state_.velocity * dt * static_cast<double>(step - stamp_);
    state_.velocity = in_real("velocity");
    reading_ = {in_real("laser_front"), in_real("us_left"), in_real("us_right")};
    user_cmd_ = in_boolean("user_cmd");
    stamp_ = step;
    adopted = true;
  }
  if (adopted) {
    publish(stamp_);
    return;
  }
  state_ = integrate(state_, {in_real("cmd_accel"), in_real("cmd_vel")}, dt, params_.v_max);
  publish(-1);
}

void MirrorUnit::publish(std::int64_t env_step) {
  set_output("laser_front", reading_.laser_front);
  set_output("us_left", reading_.us_left);
  set_output("us_right", reading_.us_right);
  set_output("velocity", state_.velocity);
  set_output("position", state_.position);
  set_output("user_cmd", user_cmd_);
  set_output("env_step", env_step);
}

} // namespace twinrt::rover
