#pragma once

#include "twinrt/simcore/unit.hpp"
#include "twinrt/twinlink/link_config.hpp"
#include "twinrt/twinlink/transport.hpp"

#include <limits>
#include <map>
#include <mutex>

namespace twinrt::link {

/// Age reported for a signal that has never been received.
inline constexpr std::int64_t kNeverReceived = std::numeric_limits<std::int64_t>::max();

/// Step unit that maps local signals onto twin-link messages.
///
/// In ports: one per outgoing signal. Out ports: one per incoming entry plus
/// an Integer "<port>_age" counting steps since the value was last refreshed
/// (0 = refreshed this step).
///
/// Each step publishes one envelope per outgoing topic, then moves the
/// newest buffered envelope per incoming topic (highest seq) into the ports.
class BridgeUnit final : public sim::StepUnit {
public:
  BridgeUnit(sim::UnitId id, LinkConfig config, Outbox& outbox);

  /// Buffers a delivery; safe to call from any thread.
  void ingest(const Delivery& delivery);

  const LinkConfig& config() const { return config_; }
  bool link_down() const { return link_down_; }
  std::int64_t age(const std::string& port) const;

  static std::string age_port(const std::string& port) { return port + "_age"; }

protected:
  void do_step(double dt) override;

private:
  LinkConfig config_;
  Outbox& outbox_;
  bool link_down_ = false;

  std::mutex buffer_mutex_;
  std::map<Topic, Envelope> latest_;
  std::map<std::string, std::int64_t> ages_;
};

} // namespace twinrt::link
