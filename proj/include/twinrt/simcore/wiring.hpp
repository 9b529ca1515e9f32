#pragma once

#include "twinrt/simcore/unit.hpp"

#include <stdexcept>
#include <string>
#include <vector>

namespace twinrt::sim {

struct PortRef {
  UnitId unit;
  std::string port;

  bool operator==(const PortRef&) const = default;
  auto operator<=>(const PortRef&) const = default;
};

struct Connection {
  PortRef src;
  PortRef dst;

  bool operator==(const Connection&) const = default;
};

/// Parses "srcUnit.port -> dstUnit.port".
Connection parse_connection(const std::string& text);
std::string to_string(const Connection& c);

class WiringError : public std::runtime_error {
public:
  enum class Code { UnknownUnit, UnknownPort, KindMismatch, DuplicateInput };

  WiringError(Code code, Connection connection, const std::string& detail);

  Code code() const { return code_; }
  const Connection& connection() const { return connection_; }

private:
  Code code_;
  Connection connection_;
};

/// Validated connections in propagation order.
class WiringPlan {
public:
  const std::vector<Connection>& connections() const { return connections_; }
  const std::vector<UnitId>& unit_order() const { return unit_order_; }
  bool empty() const { return connections_.empty(); }

  /// Connections whose destination is `unit`, in plan order.
  std::vector<const Connection*> incoming(const UnitId& unit) const;

  /// Canonical text form, one connection per line.
  std::string serialize() const;

private:
  friend WiringPlan validate_wiring(const UnitRegistry&, const std::vector<Connection>&);

  std::vector<Connection> connections_;
  std::vector<UnitId> unit_order_;
};

WiringPlan validate_wiring(const UnitRegistry& units, const std::vector<Connection>& connections);

/// Copies every connected source output into its destination input.
void propagate(const WiringPlan& plan, UnitRegistry& units);

/// Refreshes only the inputs of `unit` from their current source outputs.
void refresh_inputs(const WiringPlan& plan, UnitRegistry& units, const UnitId& unit);

} // namespace twinrt::sim
