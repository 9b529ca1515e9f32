#include "twinrt/scenario/runtime.hpp"

#include "twinrt/log.hpp"

#include <chrono>
#include <ctime>
#include <fstream>

namespace twinrt::scenario {

using nlohmann::json;
using orch::Micros;

void EventLog::add(json entry) { entries_.push_back(std::move(entry)); }

void EventLog::write_jsonl(std::ostream& out) const {
  for (const auto& e : entries_) out << e.dump() << '\n';
}

void EventLog::write_jsonl(const std::filesystem::path& path) const {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write event log " + path.string());
  write_jsonl(out);
}

std::string iso_now() {
  using namespace std::chrono;
  auto now = system_clock::now();
  auto secs = system_clock::to_time_t(now);
  auto ms = duration_cast<milliseconds>(now.time_since_epoch()).count() % 1000;
  std::tm tm{};
  gmtime_r(&secs, &tm);
  char buf[64];
  std::snprintf(buf, sizeof buf, "%04d-%02d-%02dT%02d:%02d:%02d.%03dZ", tm.tm_year + 1900, tm.tm_mon + 1,
                tm.tm_mday, tm.tm_hour, tm.tm_min, tm.tm_sec, static_cast<int>(ms));
  return buf;
}

void subscribe_pt(link::Transport& t) {
  t.subscribe(link::topics::dt_heartbeat);
  t.subscribe(link::topics::dt_out);
}

void subscribe_dt(link::Transport& t) {
  for (const auto* topic : {&link::topics::pt_heartbeat, &link::topics::pt_out, &link::topics::pt_snapshot,
                            &link::topics::pt_ready, &link::topics::pt_stop}) {
    t.subscribe(*topic);
  }
}

namespace {

Micros deadline_for(const TwinConfig& c) { return 2 * orch::seconds_to_micros(c.period); }

double seconds(Micros t) { return static_cast<double>(t.count()) / 1e6; }

} // namespace

// ---------------------------------------------------------------------------
// PT

PtTwin::PtTwin(const TwinConfig& config, const Scenario& scenario, link::Transport& transport, PtOptions options,
               Micros start)
    : scenario_(scenario), transport_(transport), options_(std::move(options)),
      assembly_(assemble(config, transport, iso_now)), period_(orch::seconds_to_micros(config.period)),
      watch_(config.miss_threshold, deadline_for(config), start + options_.startup_grace),
      resync_(config.resync_steps),
      loop_([this](const orch::StepClock& c, orch::TriggerSource) { step(c); }, orch::RemoteDriven{}, config.dt),
      next_ready_(start) {
  if (config.twin != link::TwinId::PT) throw std::invalid_argument("PT runtime given a " + std::string(link::to_string(config.twin)) + " config");
  sensors_ = assembly_->first<rover::SensorsUnit>();
  acc_ = assembly_->find<rover::AccUnit>(local_acc_id(config.acc_config));
  monitor_ = assembly_->first<rover::AccMonitorUnit>();
  plant_ = assembly_->first<rover::PlantUnit>();
  if (!sensors_ || !acc_ || !monitor_ || !plant_ || !assembly_->bridge) {
    throw std::invalid_argument("PT config lacks sensors, " + local_acc_id(config.acc_config) +
                                ", monitor, plant or bridge");
  }
  injector_.emplace(link::TwinId::PT, config.faults, assembly_->units);
  if (!options_.clock_text) {
    int base = parse_clock(scenario_.start_clock);
    options_.clock_text = [base](Micros t) { return format_clock(base + t.count() / 1000000); };
  }
}

bool PtTwin::finished() const {
  return static_cast<std::int64_t>(loop_.summary().steps) >= scenario_.duration_steps;
}

bool PtTwin::poll(Micros now) {
  now_ = now;
  for (const auto& d : transport_.drain()) handle(d, now);
  if (!dt_seen_ && !finished() && now >= next_ready_) {
    assembly_->outbox->publish(link::topics::pt_ready, {});
    next_ready_ = now + watch_.deadline();
  }
  if (watch_.poll(now) > 0) update_mode(now, "deadline");
  if (finished()) return false;
  return loop_.poll(now);
}

std::optional<Micros> PtTwin::next_wakeup() const {
  if (finished()) return std::nullopt;
  std::optional<Micros> t = watch_.next_deadline();
  auto consider = [&](Micros c) {
    if (!t || c < *t) t = c;
  };
  if (auto w = loop_.next_wakeup()) consider(*w);
  if (!dt_seen_) consider(next_ready_);
  return t;
}

void PtTwin::handle(const link::Delivery& d, Micros now) {
  if (d.topic == link::topics::dt_heartbeat) {
    auto counter = hb::heartbeat_counter(d.envelope);
    if (!counter) {
      log()->warn("PT: heartbeat without counter ignored");
      return;
    }
    dt_seen_ = true;
    if (!watch_.on_heartbeat(*counter, now)) {
      update_mode(now, "regression");
      return;
    }
    update_mode(now, "heartbeat");
    if (mode_ == hb::TwinMode::DtSynced && !finished()) {
      loop_.push_remote_trigger();
      ++synced_heartbeats_;
    }
  } else if (d.topic == link::topics::dt_out) {
    assembly_->bridge->ingest(d);
    recorder_.on_dt_out(d.envelope);
  }
}

void PtTwin::update_mode(Micros now, const char* cause) {
  const auto& live = watch_.state();
  if (live.status != status_) {
    events_.add({{"twin", "PT"},
                 {"t", seconds(now)},
                 {"step", loop_.step_index()},
                 {"kind", "liveness"},
                 {"from", std::string(hb::to_string(status_))},
                 {"to", std::string(hb::to_string(live.status))},
                 {"misses", live.consecutive_misses},
                 {"cause", cause}});
    resync_.on_status(status_, live.status);
    status_ = live.status;
  }
  auto next = hb::decide_mode(mode_, live, assembly_->config.fallback_available);
  if (next == mode_) return;
  events_.add({{"twin", "PT"},
               {"t", seconds(now)},
               {"step", loop_.step_index()},
               {"kind", "mode"},
               {"from", std::string(hb::to_string(mode_))},
               {"to", std::string(hb::to_string(next))},
               {"misses", live.consecutive_misses},
               {"last_counter", live.last_counter}});
  mode_ = next;
  loop_.set_trigger_mode(hb::trigger_mode_for(mode_, period_), now);
}

void PtTwin::apply_event(const ScenarioEvent& e) {
  struct Apply {
    rover::SensorsUnit& s;
    void operator()(const action::ActivateAcc&) const { s.set_acc_active(true); }
    void operator()(const action::DeactivateAcc&) const { s.set_acc_active(false); }
    void operator()(const action::PlaceObstacle& p) const { s.environment().place(p.zone, p.distance); }
    void operator()(const action::RemoveObstacle& r) const { s.environment().remove(r.zone); }
    void operator()(const action::InjectFault&) const {} // the injector owns these
    void operator()(const action::Label&) const {}
  };
  std::visit(Apply{*sensors_}, e.action);
  json entry{{"twin", "PT"}, {"t", seconds(now_)}, {"step", e.at}, {"kind", "scenario"}, {"action", action_name(e.action)}};
  if (!e.id.empty()) entry["id"] = e.id;
  events_.add(std::move(entry));
}

void PtTwin::step(const orch::StepClock& clock) {
  const auto k = static_cast<std::int64_t>(clock.step_index);
  if (options_.before_step) options_.before_step(k);
  while (next_event_ < scenario_.events.size() && scenario_.events[next_event_].at <= k) {
    apply_event(scenario_.events[next_event_++]);
  }
  for (const auto& f : injector_->on_step(k)) {
    events_.add({{"twin", "PT"},
                 {"t", seconds(now_)},
                 {"step", k},
                 {"kind", "fault"},
                 {"unit", f.spec.unit},
                 {"outcome", f.outcome == fault::FireOutcome::Halted ? "halted" : "already_halted"}});
  }
  monitor_->set_mode(mode_);
  auto& outbox = *assembly_->outbox;
  outbox.set_step(k);
  if (resync_.take()) {
    auto r = rover::sense(sensors_->environment());
    hb::TwinSnapshot snap{k, plant_->state().position, plant_->state().velocity, r.laser_front, r.us_left,
                          r.us_right, sensors_->acc_active()};
    outbox.publish(link::topics::pt_snapshot, hb::to_payload(snap));
    events_.add({{"twin", "PT"}, {"t", seconds(now_)}, {"step", k}, {"kind", "resync"}});
  }
  auto report = assembly_->engine->step(assembly_->units, assembly_->plan, clock.dt);
  for (const auto& f : report.failures) {
    events_.add({{"twin", "PT"}, {"step", k}, {"kind", "unit_failure"}, {"unit", f.unit}, {"error", f.what}});
  }

  TraceRow row;
  row.time = options_.clock_text(now_);
  row.heartbeat = watch_.state().last_counter;
  row.pt_target_velocity = acc_->output("target_vel").as_real();
  row.pt_target_acceleration = acc_->output("target_accel").as_real();
  row.step = k;
  row.twin_mode = std::string(hb::to_string(mode_));
  row.acc_source = monitor_->output("source").as_text();
  row.pt_velocity = plant_->output("velocity").as_real();
  row.applied_target_acceleration = monitor_->output("applied_accel").as_real();
  row.applied_target_velocity = monitor_->output("applied_vel").as_real();
  recorder_.record(std::move(row));

  if (k + 1 >= scenario_.duration_steps && !stop_sent_) {
    outbox.publish(link::topics::pt_stop, {});
    stop_sent_ = true;
  }
}

// ---------------------------------------------------------------------------
// DT

DtTwin::DtTwin(const TwinConfig& config, link::Transport& transport, Micros start)
    : transport_(transport), assembly_(assemble(config, transport, iso_now)),
      watch_(config.miss_threshold, deadline_for(config), start),
      loop_([this](const orch::StepClock& c, orch::TriggerSource) { step(c); }, orch::RemoteDriven{}, config.dt,
            orch::seconds_to_micros(config.period)),
      last_activity_(start) {
  if (config.twin != link::TwinId::DT) throw std::invalid_argument("DT runtime given a " + std::string(link::to_string(config.twin)) + " config");
  if (!assembly_->bridge) throw std::invalid_argument("DT config lacks a bridge");
  injector_.emplace(link::TwinId::DT, config.faults, assembly_->units);
}

bool DtTwin::poll(Micros now) {
  for (const auto& d : transport_.drain()) {
    last_activity_ = now;
    if (d.topic == link::topics::pt_ready) {
      if (!started_) {
        started_ = true;
        loop_.push_remote_trigger();
      }
    } else if (d.topic == link::topics::pt_heartbeat) {
      auto counter = hb::heartbeat_counter(d.envelope);
      if (counter && watch_.on_heartbeat(*counter, now)) {
        started_ = true;
        loop_.push_remote_trigger();
      }
    } else if (d.topic == link::topics::pt_stop) {
      stopped_ = true;
    } else {
      assembly_->bridge->ingest(d);
    }
  }
  if (started_) watch_.poll(now);
  if (watch_.state().status != status_) {
    events_.add({{"twin", "DT"},
                 {"t", seconds(now)},
                 {"step", loop_.step_index()},
                 {"kind", "liveness"},
                 {"from", std::string(hb::to_string(status_))},
                 {"to", std::string(hb::to_string(watch_.state().status))},
                 {"misses", watch_.state().consecutive_misses}});
    status_ = watch_.state().status;
  }
  if (stopped_) return false;
  return loop_.poll(now);
}

void DtTwin::step(const orch::StepClock& clock) {
  const auto j = static_cast<std::int64_t>(clock.step_index);
  for (const auto& f : injector_->on_step(j)) {
    events_.add({{"twin", "DT"},
                 {"step", j},
                 {"kind", "fault"},
                 {"unit", f.spec.unit},
                 {"outcome", f.outcome == fault::FireOutcome::Halted ? "halted" : "already_halted"}});
  }
  assembly_->outbox->set_step(j);
  auto report = assembly_->engine->step(assembly_->units, assembly_->plan, clock.dt);
  for (const auto& f : report.failures) {
    events_.add({{"twin", "DT"}, {"step", j}, {"kind", "unit_failure"}, {"unit", f.unit}, {"error", f.what}});
  }
}

} // namespace twinrt::scenario
