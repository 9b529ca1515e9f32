#include "twinrt/twinlink/bridge.hpp"

#include "twinrt/log.hpp"

namespace twinrt::link {

BridgeUnit::BridgeUnit(sim::UnitId id, LinkConfig config, Outbox& outbox)
    : StepUnit(std::move(id)), config_(std::move(config)), outbox_(outbox) {
  config_.validate();
  for (const auto& o : config_.outgoing) {
    if (find_port(o.signal, sim::Direction::In) == nullptr) {
      declare_input(o.signal, sim::SignalValue::default_for(o.kind));
    } else if (find_port(o.signal, sim::Direction::In)->kind != o.kind) {
      throw std::invalid_argument("signal '" + o.signal + "' declared with two kinds");
    }
  }
  for (const auto& i : config_.incoming) {
    declare_output(i.port, sim::SignalValue::default_for(i.kind));
    declare_output(age_port(i.port), kNeverReceived);
    ages_[i.port] = kNeverReceived;
  }
}

void BridgeUnit::ingest(const Delivery& delivery) {
  std::lock_guard lock(buffer_mutex_);
  auto it = latest_.find(delivery.topic);
  if (it == latest_.end()) {
    latest_.emplace(delivery.topic, delivery.envelope);
  } else if (delivery.envelope.seq > it->second.seq) {
    it->second = delivery.envelope;
  }
}

std::int64_t BridgeUnit::age(const std::string& port) const {
  auto it = ages_.find(port);
  if (it == ages_.end()) throw std::out_of_range("no incoming port '" + port + "'");
  return it->second;
}

void BridgeUnit::do_step(double) {
  bool ok = true;
  for (const auto& topic : config_.outgoing_topics()) {
    Payload payload;
    for (const auto& o : config_.outgoing) {
      if (o.topic == topic) payload.emplace(o.signal, input(o.signal));
    }
    ok = outbox_.publish(topic, std::move(payload)) && ok;
  }
  if (!ok && !link_down_) log()->warn("{}: link down, publishing failed", id());
  link_down_ = !ok;

  std::map<Topic, Envelope> fresh;
  {
    std::lock_guard lock(buffer_mutex_);
    fresh.swap(latest_);
  }
  for (const auto& i : config_.incoming) {
    auto& age = ages_[i.port];
    const sim::SignalValue* value = nullptr;
    sim::SignalValue step_value;
    if (auto it = fresh.find(i.topic); it != fresh.end()) {
      if (i.field == kSimStepField) {
        step_value = sim::SignalValue(it->second.sim_step);
        value = &step_value;
      } else if (auto p = it->second.payload.find(i.field); p != it->second.payload.end()) {
        value = &p->second;
      }
    }
    if (value != nullptr && value->kind() == i.kind) {
      set_output(i.port, *value);
      age = 0;
    } else {
      if (value != nullptr) log()->warn("{}: '{}' arrived with the wrong kind, ignored", id(), i.field);
      if (i.hold == HoldPolicy::ResetToDefault) set_output(i.port, sim::SignalValue::default_for(i.kind));
      if (age != kNeverReceived) ++age;
    }
    set_output(age_port(i.port), age);
  }
}

} // namespace twinrt::link
