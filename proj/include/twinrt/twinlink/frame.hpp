#pragma once

#include "twinrt/twinlink/envelope.hpp"

#include <stdexcept>
#include <string>
#include <string_view>
#include <variant>

namespace twinrt::link {

namespace frame {
struct Subscribe {
  Topic topic;
  bool operator==(const Subscribe&) const = default;
};
struct Publish {
  Topic topic;
  Envelope envelope;
  bool operator==(const Publish&) const = default;
};
struct Deliver {
  Topic topic;
  Envelope envelope;
  bool operator==(const Deliver&) const = default;
};
struct Ping {
  bool operator==(const Ping&) const = default;
};
struct Pong {
  bool operator==(const Pong&) const = default;
};
} // namespace frame

using BrokerFrame = std::variant<frame::Subscribe, frame::Publish, frame::Deliver, frame::Ping, frame::Pong>;

/// Which side wrote the frame. Deliver only flows from the broker;
/// Subscribe and Publish only from clients.
enum class FrameOrigin { Client, Broker };

class MalformedFrame : public std::runtime_error {
public:
  using std::runtime_error::runtime_error;
};

/// One line of JSON terminated by '\n'.
std::string encode_frame(const BrokerFrame& frame);

/// Accepts a line with or without its terminator.
BrokerFrame parse_frame(std::string_view bytes, FrameOrigin origin);

} // namespace twinrt::link
