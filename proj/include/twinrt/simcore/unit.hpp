#pragma once

#include "twinrt/simcore/signal.hpp"

#include <map>
#include <memory>
#include <string>
#include <vector>

namespace twinrt::sim {

using UnitId = std::string;

enum class Direction { In, Out };

struct PortSpec {
  std::string name;
  Direction direction;
  Kind kind;
  SignalValue initial;
};

/// FMU-like steppable software unit. Ports are declared by subclasses in
/// their constructor and keep their kind for the unit's lifetime.
///
/// Once halted, step() is a no-op: local time stops and outputs stay frozen.
class StepUnit {
public:
  explicit StepUnit(UnitId id);
  virtual ~StepUnit() = default;

  StepUnit(const StepUnit&) = delete;
  StepUnit& operator=(const StepUnit&) = delete;

  const UnitId& id() const { return id_; }
  const std::vector<PortSpec>& ports() const { return ports_; }
  const PortSpec* find_port(const std::string& name, Direction direction) const;

  double local_time() const { return local_time_; }
  bool alive() const { return alive_; }

  void step(double dt);
  void halt() { alive_ = false; }

  void set_input(const std::string& name, const SignalValue& value);
  const SignalValue& input(const std::string& name) const;
  const SignalValue& output(const std::string& name) const;

protected:
  void declare_input(const std::string& name, SignalValue initial);
  void declare_output(const std::string& name, SignalValue initial);

  double in_real(const std::string& name) const { return input(name).as_real(); }
  std::int64_t in_integer(const std::string& name) const { return input(name).as_integer(); }
  bool in_boolean(const std::string& name) const { return input(name).as_boolean(); }

  void set_output(const std::string& name, const SignalValue& value);

  virtual void do_step(double dt) = 0;

private:
  void declare(const std::string& name, Direction direction, SignalValue initial);

  UnitId id_;
  std::vector<PortSpec> ports_;
  std::map<std::string, SignalValue> inputs_;
  std::map<std::string, SignalValue> outputs_;
  double local_time_ = 0.0;
  bool alive_ = true;
};

/// Owns the units of one twin; iteration follows insertion order.
class UnitRegistry {
public:
  StepUnit& add(std::unique_ptr<StepUnit> unit);

  template <typename T, typename... Args> T& emplace(Args&&... args) {
    auto unit = std::make_unique<T>(std::forward<Args>(args)...);
    T& ref = *unit;
    add(std::move(unit));
    return ref;
  }

  StepUnit* find(const UnitId& id);
  const StepUnit* find(const UnitId& id) const;
  StepUnit& at(const UnitId& id);

  std::size_t size() const { return units_.size(); }
  auto begin() { return units_.begin(); }
  auto end() { return units_.end(); }
  auto begin() const { return units_.begin(); }
  auto end() const { return units_.end(); }

private:
  std::vector<std::unique_ptr<StepUnit>> units_;
};

} // namespace twinrt::sim
