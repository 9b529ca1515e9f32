#pragma once

#include "twinrt/simcore/unit.hpp"
#include "twinrt/twinlink/envelope.hpp"

#include <cstdint>
#include <stdexcept>
#include <vector>

namespace twinrt::fault {

enum class FaultKind { LossOfSoftwareUnit };

/// Halts `unit` on `twin` at the boundary before step `at` runs.
struct FaultSpec {
  link::TwinId twin = link::TwinId::PT;
  sim::UnitId unit;
  std::int64_t at = 0;
  FaultKind kind = FaultKind::LossOfSoftwareUnit;

  bool operator==(const FaultSpec&) const = default;
};

std::string to_string(const FaultSpec& spec);

class UnknownTarget : public std::runtime_error {
public:
  explicit UnknownTarget(const FaultSpec& spec);
  FaultSpec spec;
};

enum class FireOutcome { Halted, AlreadyHalted };

/// Clears the unit's alive flag. A second firing is logged and ignored.
FireOutcome fire(const FaultSpec& spec, sim::UnitRegistry& registry);

/// Fault specs belonging to one twin, in schedule order.
std::vector<FaultSpec> for_twin(const std::vector<FaultSpec>& schedule, link::TwinId twin);

struct FiredFault {
  FaultSpec spec;
  FireOutcome outcome;
  std::int64_t step;
};

/// Per-twin injector consulted once per step before any unit steps. Each
/// spec fires at most once, in order of `at` (ties keep schedule order).
class FaultInjector {
public:
  /// Throws UnknownTarget if a spec names another twin or a missing unit.
  FaultInjector(link::TwinId twin, std::vector<FaultSpec> schedule, sim::UnitRegistry& registry);

  std::vector<FiredFault> on_step(std::int64_t step);

  std::size_t armed() const { return specs_.size(); }
  std::size_t fired() const { return next_; }

private:
  std::vector<FaultSpec> specs_;
  sim::UnitRegistry& registry_;
  std::size_t next_ = 0;
};

} // namespace twinrt::fault
