#include "twinrt/scenario/twin_config.hpp"

#include "twinrt/heartbeat/heartbeat.hpp"

#include <fstream>

namespace twinrt::scenario {

using nlohmann::json;
using link::IncomingSignal;
using link::OutgoingSignal;
using sim::Kind;

namespace {

std::string engine_name(orch::EngineKind k) {
  return k == orch::EngineKind::ParallelExchange ? "jacobi" : "sequential";
}

orch::EngineKind engine_from(const std::string& s) {
  if (s == "jacobi") return orch::EngineKind::ParallelExchange;
  if (s == "sequential") return orch::EngineKind::SequentialImmediate;
  throw std::invalid_argument("unknown engine '" + s + "'");
}

json params_json(const rover::AccParams& p) {
  return {{"d_stop", p.d_stop}, {"v_cruise", p.v_cruise}, {"a_min", p.a_min}, {"a_max", p.a_max},
          {"k_p", p.k_p},       {"freshness", p.freshness}, {"r_max", p.r_max}, {"v_max", p.v_max}};
}

rover::AccParams params_from(const json& j) {
  rover::AccParams p;
  p.d_stop = j.value("d_stop", p.d_stop);
  p.v_cruise = j.value("v_cruise", p.v_cruise);
  p.a_min = j.value("a_min", p.a_min);
  p.a_max = j.value("a_max", p.a_max);
  p.k_p = j.value("k_p", p.k_p);
  p.freshness = j.value("freshness", p.freshness);
  p.r_max = j.value("r_max", p.r_max);
  p.v_max = j.value("v_max", p.v_max);
  p.validate();
  return p;
}

} // namespace

json TwinConfig::to_json() const {
  json units_j = json::array();
  for (const auto& u : units) units_j.push_back({{"id", u.id}, {"type", u.type}});
  json faults_j = json::array();
  for (const auto& f : faults) {
    faults_j.push_back({{"twin", std::string(link::to_string(f.twin))}, {"unit", f.unit}, {"at", f.at}});
  }
  return {{"twin", std::string(link::to_string(twin))},
          {"engine", engine_name(engine)},
          {"order", order},
          {"dt", dt},
          {"period", period},
          {"miss_threshold", miss_threshold},
          {"resync_steps", resync_steps},
          {"acc_config", std::string(rover::to_string(acc_config))},
          {"fallback_available", fallback_available},
          {"params", params_json(params)},
          {"units", units_j},
          {"wiring", wiring},
          {"link", link.to_json()},
          {"faults", faults_j}};
}

TwinConfig TwinConfig::from_json(const json& j) {
  TwinConfig c;
  c.twin = link::twin_from_string(j.at("twin").get<std::string>());
  c.engine = engine_from(j.at("engine").get<std::string>());
  c.order = j.value("order", std::vector<std::string>{});
  c.dt = j.value("dt", c.dt);
  c.period = j.value("period", c.dt);
  c.miss_threshold = j.value("miss_threshold", c.miss_threshold);
  c.resync_steps = j.value("resync_steps", c.resync_steps);
  c.acc_config = rover::acc_config_from_string(j.value("acc_config", std::string("augmentation")));
  c.fallback_available = j.value("fallback_available", true);
  c.params = params_from(j.value("params", json::object()));
  for (const auto& u : j.at("units")) c.units.push_back({u.at("id").get<std::string>(), u.at("type").get<std::string>()});
  c.wiring = j.value("wiring", std::vector<std::string>{});
  c.link = link::LinkConfig::from_json(j.at("link"));
  for (const auto& f : j.value("faults", json::array())) {
    c.faults.push_back({link::twin_from_string(f.at("twin").get<std::string>()), f.at("unit").get<std::string>(),
                        f.at("at").get<std::int64_t>()});
  }
  if (!(c.dt > 0.0) || !(c.period > 0.0)) throw std::invalid_argument("dt and period must be positive");
  return c;
}

TwinConfig load_twin_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open twin config " + path.string());
  return TwinConfig::from_json(json::parse(in));
}

void save_twin_config(const TwinConfig& config, const std::filesystem::path& path) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write " + path.string());
  out << config.to_json().dump(2) << '\n';
}

sim::UnitId local_acc_id(rover::AccConfig config) {
  return config == rover::AccConfig::Augmentation ? "AccFallback" : "AccMain";
}

namespace {

std::string acc_type(rover::AccVariant v) { return v == rover::AccVariant::Basic ? "acc_basic" : "acc_advanced"; }

TwinConfig common(const Scenario& s, link::TwinId twin) {
  TwinConfig c;
  c.twin = twin;
  c.dt = s.dt;
  c.period = s.period;
  c.miss_threshold = s.miss_threshold;
  c.resync_steps = s.resync_steps;
  c.acc_config = s.config;
  c.fallback_available = s.fallback_available;
  c.params = s.params;
  c.faults = fault::for_twin(s.faults(), twin);
  return c;
}

} // namespace

TwinConfig default_pt_config(const Scenario& s) {
  auto c = common(s, link::TwinId::PT);
  const auto acc = local_acc_id(s.config);
  c.engine = orch::EngineKind::SequentialImmediate;
  c.units = {{"Sensors", "sensors"},       {acc, acc_type(s.pt_acc)}, {"Bridge", "bridge"},
             {"AccMonitor", "acc_monitor"}, {"Plant", "plant"},        {"Heartbeat", "heartbeat"}};
  for (const auto& u : c.units) c.order.push_back(u.id);

  for (const char* sig : {"laser_front", "us_left", "us_right", "user_cmd"}) {
    c.wiring.push_back(std::string("Sensors.") + sig + " -> " + acc + "." + sig);
    c.wiring.push_back(std::string("Sensors.") + sig + " -> Bridge." + sig);
  }
  c.wiring.push_back("Plant.velocity -> " + acc + ".velocity");
  c.wiring.push_back("Plant.velocity -> Bridge.velocity");
  c.wiring.push_back(acc + ".target_accel -> Bridge.pt_target_accel");
  c.wiring.push_back(acc + ".target_vel -> Bridge.pt_target_vel");
  c.wiring.push_back(acc + ".target_accel -> AccMonitor.local_accel");
  c.wiring.push_back(acc + ".target_vel -> AccMonitor.local_vel");
  c.wiring.push_back(acc + ".tick -> AccMonitor.local_tick");
  c.wiring.push_back("Bridge.dt_target_accel -> AccMonitor.remote_accel");
  c.wiring.push_back("Bridge.dt_target_vel -> AccMonitor.remote_vel");
  c.wiring.push_back("Bridge.dt_target_accel_age -> AccMonitor.remote_age");
  c.wiring.push_back("AccMonitor.applied_accel -> Plant.target_accel");
  c.wiring.push_back("AccMonitor.applied_vel -> Plant.target_vel");

  const auto& out = link::topics::pt_out;
  c.link.outgoing = {{"laser_front", Kind::Real, out},    {"us_left", Kind::Real, out},
                     {"us_right", Kind::Real, out},       {"user_cmd", Kind::Boolean, out},
                     {"velocity", Kind::Real, out},       {"pt_target_accel", Kind::Real, out},
                     {"pt_target_vel", Kind::Real, out}};
  const auto& in = link::topics::dt_out;
  c.link.incoming = {{in, "dt_target_accel", "dt_target_accel", Kind::Real},
                     {in, "dt_target_vel", "dt_target_vel", Kind::Real},
                     {in, "env_step", "dt_env_step", Kind::Integer}};
  return c;
}

TwinConfig default_dt_config(const Scenario& s) {
  auto c = common(s, link::TwinId::DT);
  c.engine = orch::EngineKind::ParallelExchange;
  c.units = {{"Bridge", "bridge"}, {"Mirror", "mirror"}, {"AccRemote", acc_type(s.dt_acc)}, {"Heartbeat", "heartbeat"}};

  for (const char* sig : {"laser_front", "us_left", "us_right", "user_cmd", "velocity"}) {
    c.wiring.push_back(std::string("Bridge.") + sig + " -> Mirror." + sig);
    c.wiring.push_back(std::string("Mirror.") + sig + " -> AccRemote." + sig);
  }
  c.wiring.push_back("Bridge.pt_step -> Mirror.env_step");
  c.wiring.push_back("Bridge.pt_step_age -> Mirror.env_step_age");
  for (const char* sig : {"position", "velocity", "laser_front", "us_left", "us_right", "user_cmd", "step"}) {
    c.wiring.push_back(std::string("Bridge.snap_") + sig + " -> Mirror.snap_" + sig);
  }
  c.wiring.push_back("Bridge.snap_step_age -> Mirror.snap_step_age");
  c.wiring.push_back("Mirror.env_step -> AccRemote.env_step");
  c.wiring.push_back("AccRemote.target_accel -> Bridge.dt_target_accel");
  c.wiring.push_back("AccRemote.target_vel -> Bridge.dt_target_vel");
  c.wiring.push_back("AccRemote.env_step -> Bridge.env_step");
  c.wiring.push_back("AccRemote.target_accel -> Mirror.cmd_accel");
  c.wiring.push_back("AccRemote.target_vel -> Mirror.cmd_vel");

  const auto& out = link::topics::dt_out;
  c.link.outgoing = {{"dt_target_accel", Kind::Real, out},
                     {"dt_target_vel", Kind::Real, out},
                     {"env_step", Kind::Integer, out}};
  const auto& in = link::topics::pt_out;
  const auto& snap = link::topics::pt_snapshot;
  c.link.incoming = {{in, "laser_front", "laser_front", Kind::Real},
                     {in, "us_left", "us_left", Kind::Real},
                     {in, "us_right", "us_right", Kind::Real},
                     {in, "user_cmd", "user_cmd", Kind::Boolean},
                     {in, "velocity", "velocity", Kind::Real},
                     {in, link::kSimStepField, "pt_step", Kind::Integer},
                     {snap, "position", "snap_position", Kind::Real},
                     {snap, "velocity", "snap_velocity", Kind::Real},
                     {snap, "laser_front", "snap_laser_front", Kind::Real},
                     {snap, "us_left", "snap_us_left", Kind::Real},
                     {snap, "us_right", "snap_us_right", Kind::Real},
                     {snap, "user_cmd", "snap_user_cmd", Kind::Boolean},
                     {snap, link::kSimStepField, "snap_step", Kind::Integer}};
  return c;
}

std::unique_ptr<TwinAssembly> assemble(const TwinConfig& config, link::Transport& transport,
                                       link::Outbox::WallclockFn wallclock) {
  auto a = std::make_unique<TwinAssembly>();
  a->config = config;
  a->outbox = std::make_unique<link::Outbox>(transport, config.twin, std::move(wallclock));
  for (const auto& u : config.units) {
    if (u.type == "sensors") {
      a->units.emplace<rover::SensorsUnit>(u.id, config.params.r_max);
    } else if (u.type == "acc_basic") {
      a->units.emplace<rover::AccUnit>(u.id, rover::AccVariant::Basic, config.params);
    } else if (u.type == "acc_advanced") {
      a->units.emplace<rover::AccUnit>(u.id, rover::AccVariant::Advanced, config.params);
    } else if (u.type == "acc_monitor") {
      a->units.emplace<rover::AccMonitorUnit>(u.id, config.acc_config, config.params);
    } else if (u.type == "plant") {
      a->units.emplace<rover::PlantUnit>(u.id, config.params.v_max);
    } else if (u.type == "bridge") {
      if (a->bridge != nullptr) throw std::invalid_argument("a twin has at most one bridge");
      a->bridge = &a->units.emplace<link::BridgeUnit>(u.id, config.link, *a->outbox);
    } else if (u.type == "heartbeat") {
      a->units.emplace<hb::HeartbeatUnit>(u.id, *a->outbox);
    } else if (u.type == "mirror") {
      a->units.emplace<rover::MirrorUnit>(u.id, config.params);
    } else {
      throw std::invalid_argument("unknown unit type '" + u.type + "' for " + u.id);
    }
  }
  std::vector<sim::Connection> connections;
  for (const auto& w : config.wiring) connections.push_back(sim::parse_connection(w));
  a->plan = sim::validate_wiring(a->units, connections);
  if (config.engine == orch::EngineKind::ParallelExchange) {
    a->engine = std::make_unique<orch::JacobiEngine>();
  } else {
    a->engine = std::make_unique<orch::SequentialEngine>(config.order, a->units);
  }
  return a;
}

} // namespace twinrt::scenario
