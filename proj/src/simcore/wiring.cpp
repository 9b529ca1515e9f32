#include "twinrt/simcore/wiring.hpp"

#include <algorithm>
#include <map>
#include <set>
#include <sstream>

namespace twinrt::sim {

namespace {

std::string trim(const std::string& s) {
  auto b = s.find_first_not_of(" \t");
  auto e = s.find_last_not_of(" \t");
  if (b == std::string::npos) return {};
  return s.substr(b, e - b + 1);
}

PortRef parse_ref(const std::string& text, const std::string& whole) {
  auto t = trim(text);
  auto dot = t.find('.');
  if (dot == std::string::npos || dot == 0 || dot + 1 == t.size()) {
    throw std::invalid_argument("bad port reference '" + t + "' in '" + whole + "'");
  }
  return PortRef{t.substr(0, dot), t.substr(dot + 1)};
}

const char* code_name(WiringError::Code code) {
  switch (code) {
  case WiringError::Code::UnknownUnit:
    return "UnknownUnit";
  case WiringError::Code::UnknownPort:
    return "UnknownPort";
  case WiringError::Code::KindMismatch:
    return "KindMismatch";
  case WiringError::Code::DuplicateInput:
    return "DuplicateInput";
  }
  return "?";
}

} // namespace

Connection parse_connection(const std::string& text) {
  auto arrow = text.find("->");
  if (arrow == std::string::npos) {
    throw std::invalid_argument("connection '" + text + "' lacks '->'");
  }
  return Connection{parse_ref(text.substr(0, arrow), text), parse_ref(text.substr(arrow + 2), text)};
}

std::string to_string(const Connection& c) {
  return c.src.unit + "." + c.src.port + " -> " + c.dst.unit + "." + c.dst.port;
}

WiringError::WiringError(Code code, Connection connection, const std::string& detail)
    : std::runtime_error(std::string(code_name(code)) + ": " + to_string(connection) + " (" +
                         detail + ")"),
      code_(code), connection_(std::move(connection)) {}

std::vector<const Connection*> WiringPlan::incoming(const UnitId& unit) const {
  std::vector<const Connection*> out;
  for (const auto& c : connections_) {
    if (c.dst.unit == unit) out.push_back(&c);
  }
  return out;
}

std::string WiringPlan::serialize() const {
  std::ostringstream os;
  for (const auto& c : connections_) os << to_string(c) << '\n';
  return os.str();
}

WiringPlan validate_wiring(const UnitRegistry& units, const std::vector<Connection>& connections) {
  using Code = WiringError::Code;
  std::set<PortRef> driven;
  for (const auto& c : connections) {
    const StepUnit* src = units.find(c.src.unit);
    if (src == nullptr) throw WiringError(Code::UnknownUnit, c, "no unit '" + c.src.unit + "'");
    const StepUnit* dst = units.find(c.dst.unit);
    if (dst == nullptr) throw WiringError(Code::UnknownUnit, c, "no unit '" + c.dst.unit + "'");

    const PortSpec* out = src->find_port(c.src.port, Direction::Out);
    if (out == nullptr) throw WiringError(Code::UnknownPort, c, "no output '" + c.src.port + "'");
    const PortSpec* in = dst->find_port(c.dst.port, Direction::In);
    if (in == nullptr) throw WiringError(Code::UnknownPort, c, "no input '" + c.dst.port + "'");

    if (out->kind != in->kind) {
      throw WiringError(Code::KindMismatch, c,
                        std::string(to_string(out->kind)) + " into " + std::string(to_string(in->kind)));
    }
    if (!driven.insert(c.dst).second) {
      throw WiringError(Code::DuplicateInput, c, "input already connected");
    }
  }

  // Kahn's algorithm over the unit graph; ties and cycles resolved by id order.
  std::map<UnitId, std::set<UnitId>> successors;
  std::map<UnitId, int> indegree;
  for (const auto& u : units) indegree[u->id()] = 0;
  for (const auto& c : connections) {
    if (c.src.unit == c.dst.unit) continue;
    if (successors[c.src.unit].insert(c.dst.unit).second) ++indegree[c.dst.unit];
  }

  std::vector<UnitId> order;
  std::set<UnitId> remaining;
  for (const auto& [id, _] : indegree) remaining.insert(id);
  while (!remaining.empty()) {
    UnitId next;
    for (const auto& id : remaining) {
      if (indegree[id] == 0) {
        next = id;
        break;
      }
    }
    if (next.empty()) next = *remaining.begin(); // cycle
    remaining.erase(next);
    order.push_back(next);
    for (const auto& s : successors[next]) {
      if (remaining.count(s) != 0 && indegree[s] > 0) --indegree[s];
    }
  }

  std::map<UnitId, std::size_t> rank;
  for (std::size_t i = 0; i < order.size(); ++i) rank[order[i]] = i;

  WiringPlan plan;
  plan.connections_ = connections;
  std::sort(plan.connections_.begin(), plan.connections_.end(),
            [&](const Connection& a, const Connection& b) {
              return std::tie(rank[a.src.unit], a.src.port, rank[a.dst.unit], a.dst.port) <
                     std::tie(rank[b.src.unit], b.src.port, rank[b.dst.unit], b.dst.port);
            });
  plan.unit_order_ = std::move(order);
  return plan;
}

void propagate(const WiringPlan& plan, UnitRegistry& units) {
  for (const auto& c : plan.connections()) {
    units.at(c.dst.unit).set_input(c.dst.port, units.at(c.src.unit).output(c.src.port));
  }
}

void refresh_inputs(const WiringPlan& plan, UnitRegistry& units, const UnitId& unit) {
  for (const auto& c : plan.connections()) {
    if (c.dst.unit != unit) continue;
    units.at(c.dst.unit).set_input(c.dst.port, units.at(c.src.unit).output(c.src.port));
  }
}

} // namespace twinrt::sim
