#include "twinrt/twinlink/transport.hpp"

#include <algorithm>

namespace twinrt::link {

Outbox::Outbox(Transport& transport, TwinId source, WallclockFn wallclock)
    : transport_(transport), source_(source), wallclock_(std::move(wallclock)) {}

bool Outbox::publish(const Topic& topic, Payload payload) {
  Envelope e;
  e.source = source_;
  e.seq = ++next_seq_[topic];
  e.sim_step = sim_step_;
  e.wallclock = wallclock_ ? wallclock_() : std::string();
  e.payload = std::move(payload);
  return transport_.publish(topic, e);
}

InMemoryEndpoint::InMemoryEndpoint(std::shared_ptr<InMemoryBus> bus, std::string name)
    : bus_(std::move(bus)), name_(std::move(name)) {}

InMemoryEndpoint::~InMemoryEndpoint() { bus_->remove(this); }

void InMemoryEndpoint::subscribe(const Topic& topic) { bus_->add_subscription(this, topic); }

bool InMemoryEndpoint::publish(const Topic& topic, const Envelope& envelope) {
  if (!link_up()) return false;
  bus_->route(this, topic, envelope);
  return true;
}

std::vector<Delivery> InMemoryEndpoint::drain() {
  std::lock_guard lock(mutex_);
  std::vector<Delivery> out(std::make_move_iterator(inbox_.begin()), std::make_move_iterator(inbox_.end()));
  inbox_.clear();
  return out;
}

bool InMemoryEndpoint::wait_for_data(std::chrono::microseconds timeout) {
  std::unique_lock lock(mutex_);
  return cv_.wait_for(lock, timeout, [&] { return !inbox_.empty(); });
}

bool InMemoryEndpoint::link_up() const {
  std::lock_guard lock(mutex_);
  return link_up_;
}

void InMemoryEndpoint::set_link_up(bool up) {
  std::lock_guard lock(mutex_);
  link_up_ = up;
}

void InMemoryEndpoint::enqueue(const Topic& topic, const Envelope& envelope) {
  std::lock_guard lock(mutex_);
  inbox_.push_back(Delivery{topic, envelope});
  cv_.notify_all();
}

std::shared_ptr<InMemoryBus> InMemoryBus::create() { return std::shared_ptr<InMemoryBus>(new InMemoryBus()); }

std::shared_ptr<InMemoryEndpoint> InMemoryBus::connect(const std::string& name) {
  auto endpoint = std::make_shared<InMemoryEndpoint>(shared_from_this(), name);
  std::lock_guard lock(mutex_);
  endpoints_.push_back(endpoint.get());
  return endpoint;
}

void InMemoryBus::set_isolated(const std::string& name, bool isolated) {
  std::lock_guard lock(mutex_);
  if (isolated) {
    isolated_.insert(name);
  } else {
    isolated_.erase(name);
  }
}

void InMemoryBus::add_subscription(InMemoryEndpoint* endpoint, const Topic& topic) {
  std::lock_guard lock(mutex_);
  auto& subs = subscribers_[topic];
  if (std::find(subs.begin(), subs.end(), endpoint) == subs.end()) subs.push_back(endpoint);
}

void InMemoryBus::route(InMemoryEndpoint* from, const Topic& topic, const Envelope& envelope) {
  std::lock_guard lock(mutex_);
  if (isolated_.count(from->name()) != 0) return;
  auto it = subscribers_.find(topic);
  if (it == subscribers_.end()) return;
  for (auto* sub : it->second) {
    if (isolated_.count(sub->name()) != 0) continue;
    sub->enqueue(topic, envelope);
  }
}

void InMemoryBus::remove(InMemoryEndpoint* endpoint) {
  std::lock_guard lock(mutex_);
  endpoints_.erase(std::remove(endpoints_.begin(), endpoints_.end(), endpoint), endpoints_.end());
  for (auto& [_, subs] : subscribers_) subs.erase(std::remove(subs.begin(), subs.end(), endpoint), subs.end());
}

} // namespace twinrt::link
