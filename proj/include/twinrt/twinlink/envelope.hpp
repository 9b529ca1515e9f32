#pragma once

#include "twinrt/simcore/signal.hpp"

#include <cstdint>
#include <map>
#include <stdexcept>
#include <string>
#include <string_view>

namespace twinrt::link {

enum class TwinId { PT, DT };

std::string_view to_string(TwinId id);
TwinId twin_from_string(std::string_view text);

/// Broker channel name, restricted to [a-z0-9._-].
class Topic {
public:
  explicit Topic(std::string name);

  const std::string& str() const { return name_; }

  auto operator<=>(const Topic&) const = default;
  bool operator==(const Topic&) const = default;

private:
  std::string name_;
};

bool valid_topic_name(std::string_view name);

namespace topics {
inline const Topic pt_out{"pt.out"};
inline const Topic dt_out{"dt.out"};
inline const Topic pt_heartbeat{"pt.heartbeat"};
inline const Topic dt_heartbeat{"dt.heartbeat"};
inline const Topic pt_snapshot{"pt.snapshot"};
inline const Topic pt_ready{"pt.ready"};
inline const Topic pt_stop{"pt.stop"};

Topic heartbeat_of(TwinId id);
} // namespace topics

using Payload = std::map<std::string, sim::SignalValue>;

struct Envelope {
  static constexpr int kVersion = 1;

  int version = kVersion;
  TwinId source = TwinId::PT;
  std::uint64_t seq = 0;
  std::int64_t sim_step = 0;
  std::string wallclock;
  Payload payload;

  bool operator==(const Envelope&) const = default;
};

} // namespace twinrt::link
