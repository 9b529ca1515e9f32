#pragma once

#include "twinrt/twinlink/envelope.hpp"

#include <chrono>
#include <condition_variable>
#include <deque>
#include <functional>
#include <map>
#include <memory>
#include <mutex>
#include <set>
#include <vector>

namespace twinrt::link {

struct Delivery {
  Topic topic;
  Envelope envelope;
};

/// Client side of the pub/sub link. Inbound deliveries are buffered by the
/// transport and handed to the step loop through drain().
class Transport {
public:
  virtual ~Transport() = default;

  virtual void subscribe(const Topic& topic) = 0;
  /// False when the link is down; the caller keeps running.
  virtual bool publish(const Topic& topic, const Envelope& envelope) = 0;
  virtual std::vector<Delivery> drain() = 0;
  /// Blocks until a delivery is buffered or the timeout passes.
  virtual bool wait_for_data(std::chrono::microseconds timeout) = 0;
  virtual bool link_up() const = 0;
};

/// Stamps outgoing envelopes with source, per-topic seq, step and wallclock.
class Outbox {
public:
  using WallclockFn = std::function<std::string()>;

  Outbox(Transport& transport, TwinId source, WallclockFn wallclock);

  void set_step(std::int64_t sim_step) { sim_step_ = sim_step; }
  std::int64_t step() const { return sim_step_; }
  TwinId source() const { return source_; }

  bool publish(const Topic& topic, Payload payload);

private:
  Transport& transport_;
  TwinId source_;
  WallclockFn wallclock_;
  std::int64_t sim_step_ = 0;
  std::map<Topic, std::uint64_t> next_seq_;
};

class InMemoryBus;

/// Endpoint on an InMemoryBus. Publishing delivers synchronously into every
/// subscribed endpoint's inbox.
class InMemoryEndpoint final : public Transport {
public:
  InMemoryEndpoint(std::shared_ptr<InMemoryBus> bus, std::string name);
  ~InMemoryEndpoint() override;

  const std::string& name() const { return name_; }

  void subscribe(const Topic& topic) override;
  bool publish(const Topic& topic, const Envelope& envelope) override;
  std::vector<Delivery> drain() override;
  bool wait_for_data(std::chrono::microseconds timeout) override;
  bool link_up() const override;

  /// Test hook: a downed endpoint fails every publish.
  void set_link_up(bool up);

private:
  friend class InMemoryBus;
  void enqueue(const Topic& topic, const Envelope& envelope);

  std::shared_ptr<InMemoryBus> bus_;
  std::string name_;
  mutable std::mutex mutex_;
  std::condition_variable cv_;
  std::deque<Delivery> inbox_;
  bool link_up_ = true;
};

class InMemoryBus : public std::enable_shared_from_this<InMemoryBus> {
public:
  static std::shared_ptr<InMemoryBus> create();

  std::shared_ptr<InMemoryEndpoint> connect(const std::string& name);

  /// While isolated, nothing reaches or leaves the named endpoint.
  void set_isolated(const std::string& name, bool isolated);

private:
  friend class InMemoryEndpoint;
  InMemoryBus() = default;

  void add_subscription(InMemoryEndpoint* endpoint, const Topic& topic);
  void route(InMemoryEndpoint* from, const Topic& topic, const Envelope& envelope);
  void remove(InMemoryEndpoint* endpoint);

  std::recursive_mutex mutex_;
  std::vector<InMemoryEndpoint*> endpoints_;
  std::map<Topic, std::vector<InMemoryEndpoint*>> subscribers_;
  std::set<std::string> isolated_;
};

} // namespace twinrt::link
