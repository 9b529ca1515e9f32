#include "twinrt/heartbeat/resync.hpp"

#include <stdexcept>

namespace twinrt::hb {

link::Payload to_payload(const TwinSnapshot& s) {
  return {{"position", s.position},       {"velocity", s.velocity}, {"laser_front", s.laser_front},
          {"us_left", s.us_left},         {"us_right", s.us_right}, {"user_cmd", s.acc_active}};
}

namespace {
const sim::SignalValue& field(const link::Payload& p, const char* name, sim::Kind kind) {
  auto it = p.find(name);
  if (it == p.end() || it->second.kind() != kind) {
    throw std::invalid_argument(std::string("snapshot field '") + name + "' missing or mistyped");
  }
  return it->second;
}
} // namespace

TwinSnapshot snapshot_from(const link::Envelope& envelope) {
  const auto& p = envelope.payload;
  TwinSnapshot s;
  s.step = envelope.sim_step;
  s.position = field(p, "position", sim::Kind::Real).as_real();
  s.velocity = field(p, "velocity", sim::Kind::Real).as_real();
  s.laser_front = field(p, "laser_front", sim::Kind::Real).as_real();
  s.us_left = field(p, "us_left", sim::Kind::Real).as_real();
  s.us_right = field(p, "us_right", sim::Kind::Real).as_real();
  s.acc_active = field(p, "user_cmd", sim::Kind::Boolean).as_boolean();
  return s;
}

ResyncScheduler::ResyncScheduler(int repeat_steps) : repeat_(repeat_steps) {
  if (repeat_ < 1) throw std::invalid_argument("resync repeat count must be at least 1");
}

void ResyncScheduler::on_status(Status before, Status after) {
  if (before == Status::Down && after == Status::Alive) {
    remaining_ = repeat_;
    ++resyncs_;
  }
}

bool ResyncScheduler::take() {
  if (remaining_ == 0) return false;
  --remaining_;
  return true;
}

} // namespace twinrt::hb
