#include "twinrt/simcore/unit.hpp"

#include <stdexcept>

namespace twinrt::sim {

StepUnit::StepUnit(UnitId id) : id_(std::move(id)) {
  if (id_.empty()) throw std::invalid_argument("unit id must be non-empty");
}

const PortSpec* StepUnit::find_port(const std::string& name, Direction direction) const {
  for (const auto& p : ports_) {
    if (p.name == name && p.direction == direction) return &p;
  }
  return nullptr;
}

void StepUnit::step(double dt) {
  if (!alive_) return;
  do_step(dt);
  local_time_ += dt;
}

void StepUnit::declare(const std::string& name, Direction direction, SignalValue initial) {
  if (find_port(name, direction) != nullptr) {
    throw std::logic_error(id_ + ": duplicate port '" + name + "'");
  }
  ports_.push_back(PortSpec{name, direction, initial.kind(), initial});
  auto& table = direction == Direction::In ? inputs_ : outputs_;
  table.emplace(name, std::move(initial));
}

void StepUnit::declare_input(const std::string& name, SignalValue initial) {
  declare(name, Direction::In, std::move(initial));
}

void StepUnit::declare_output(const std::string& name, SignalValue initial) {
  declare(name, Direction::Out, std::move(initial));
}

void StepUnit::set_input(const std::string& name, const SignalValue& value) {
  auto it = inputs_.find(name);
  if (it == inputs_.end()) throw std::out_of_range(id_ + ": no input port '" + name + "'");
  if (it->second.kind() != value.kind()) {
    throw KindError(id_ + "." + name + ": expected " + std::string(to_string(it->second.kind())) +
                    ", got " + std::string(to_string(value.kind())));
  }
  it->second = value;
}

const SignalValue& StepUnit::input(const std::string& name) const {
  auto it = inputs_.find(name);
  if (it == inputs_.end()) throw std::out_of_range(id_ + ": no input port '" + name + "'");
  return it->second;
}

const SignalValue& StepUnit::output(const std::string& name) const {
  auto it = outputs_.find(name);
  if (it == outputs_.end()) throw std::out_of_range(id_ + ": no output port '" + name + "'");
  return it->second;
}

void StepUnit::set_output(const std::string& name, const SignalValue& value) {
  auto it = outputs_.find(name);
  if (it == outputs_.end()) throw std::out_of_range(id_ + ": no output port '" + name + "'");
  if (it->second.kind() != value.kind()) {
    throw KindError(id_ + "." + name + ": output kind cannot change");
  }
  it->second = value;
}

StepUnit& UnitRegistry::add(std::unique_ptr<StepUnit> unit) {
  if (find(unit->id()) != nullptr) {
    throw std::invalid_argument("duplicate unit id '" + unit->id() + "'");
  }
  units_.push_back(std::move(unit));
  return *units_.back();
}

StepUnit* UnitRegistry::find(const UnitId& id) {
  for (auto& u : units_) {
    if (u->id() == id) return u.get();
  }
  return nullptr;
}

const StepUnit* UnitRegistry::find(const UnitId& id) const {
  for (const auto& u : units_) {
    if (u->id() == id) return u.get();
  }
  return nullptr;
}

StepUnit& UnitRegistry::at(const UnitId& id) {
  auto* u = find(id);
  if (u == nullptr) throw std::out_of_range("no unit '" + id + "'");
  return *u;
}

} // namespace twinrt::sim
