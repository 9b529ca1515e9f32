#pragma once

#include "twinrt/simcore/wiring.hpp"

#include <memory>
#include <stdexcept>
#include <string>
#include <vector>

namespace twinrt::orch {

enum class EngineKind { ParallelExchange, SequentialImmediate };

struct UnitStepFailure {
  sim::UnitId unit;
  std::string what;
};

struct StepReport {
  std::size_t units_stepped = 0;
  std::vector<UnitStepFailure> failures;
};

/// A co-simulation master algorithm. A unit that throws from step() is
/// reported, halted, and the remaining units still step.
class Engine {
public:
  virtual ~Engine() = default;
  virtual EngineKind kind() const = 0;
  virtual StepReport step(sim::UnitRegistry& units, const sim::WiringPlan& plan, double dt) = 0;
};

/// Jacobi: every unit steps on the inputs left by the previous exchange,
/// then all outputs are propagated at once.
class JacobiEngine final : public Engine {
public:
  EngineKind kind() const override { return EngineKind::ParallelExchange; }
  StepReport step(sim::UnitRegistry& units, const sim::WiringPlan& plan, double dt) override;
};

class EmptyOrderError : public std::invalid_argument {
public:
  EmptyOrderError() : std::invalid_argument("EmptyOrder: sequential engine needs a unit order") {}
};

/// Gauss-Seidel: units step in a fixed order, each refreshing its inputs
/// from the current outputs immediately before stepping.
class SequentialEngine final : public Engine {
public:
  SequentialEngine(std::vector<sim::UnitId> order, const sim::UnitRegistry& units);

  EngineKind kind() const override { return EngineKind::SequentialImmediate; }
  StepReport step(sim::UnitRegistry& units, const sim::WiringPlan& plan, double dt) override;

  const std::vector<sim::UnitId>& order() const { return order_; }

private:
  std::vector<sim::UnitId> order_;
};

StepReport jacobi_step(sim::UnitRegistry& units, const sim::WiringPlan& plan, double dt);
StepReport sequential_step(const std::vector<sim::UnitId>& order, sim::UnitRegistry& units,
                           const sim::WiringPlan& plan, double dt);

} // namespace twinrt::orch
