#include "twinrt/orchestrator/engine.hpp"

#include <set>

namespace twinrt::orch {

namespace {

bool step_isolated(sim::StepUnit& unit, double dt, StepReport& report) {
  if (!unit.alive()) return false;
  try {
    unit.step(dt);
    ++report.units_stepped;
    return true;
  } catch (const std::exception& e) {
    report.failures.push_back({unit.id(), e.what()});
    unit.halt();
  }
  return false;
}

} // namespace

StepReport jacobi_step(sim::UnitRegistry& units, const sim::WiringPlan& plan, double dt) {
  if (!(dt > 0.0)) throw std::invalid_argument("dt must be positive");
  StepReport report;
  for (auto& unit : units) step_isolated(*unit, dt, report);
  sim::propagate(plan, units);
  return report;
}

StepReport sequential_step(const std::vector<sim::UnitId>& order, sim::UnitRegistry& units,
                           const sim::WiringPlan& plan, double dt) {
  if (order.empty()) throw EmptyOrderError();
  if (!(dt > 0.0)) throw std::invalid_argument("dt must be positive");
  StepReport report;
  for (const auto& id : order) {
    sim::refresh_inputs(plan, units, id);
    step_isolated(units.at(id), dt, report);
  }
  return report;
}

StepReport JacobiEngine::step(sim::UnitRegistry& units, const sim::WiringPlan& plan, double dt) {
  return jacobi_step(units, plan, dt);
}

SequentialEngine::SequentialEngine(std::vector<sim::UnitId> order, const sim::UnitRegistry& units)
    : order_(std::move(order)) {
  if (order_.empty()) throw EmptyOrderError();
  std::set<sim::UnitId> seen;
  for (const auto& id : order_) {
    if (units.find(id) == nullptr) throw std::invalid_argument("order names unknown unit '" + id + "'");
    if (!seen.insert(id).second) throw std::invalid_argument("unit '" + id + "' ordered twice");
  }
}

StepReport SequentialEngine::step(sim::UnitRegistry& units, const sim::WiringPlan& plan, double dt) {
  return sequential_step(order_, units, plan, dt);
}

} // namespace twinrt::orch
