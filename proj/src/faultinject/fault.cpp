#include "twinrt/faultinject/fault.hpp"

#include "twinrt/log.hpp"

#include <algorithm>

namespace twinrt::fault {

std::string to_string(const FaultSpec& spec) {
  return std::string(link::to_string(spec.twin)) + "." + spec.unit + "@" + std::to_string(spec.at);
}

UnknownTarget::UnknownTarget(const FaultSpec& s)
    : std::runtime_error("fault target " + to_string(s) + " does not exist on this twin"), spec(s) {}

FireOutcome fire(const FaultSpec& spec, sim::UnitRegistry& registry) {
  auto* unit = registry.find(spec.unit);
  if (unit == nullptr) throw UnknownTarget(spec);
  if (!unit->alive()) {
    log()->warn("fault {}: unit already halted", to_string(spec));
    return FireOutcome::AlreadyHalted;
  }
  unit->halt();
  return FireOutcome::Halted;
}

std::vector<FaultSpec> for_twin(const std::vector<FaultSpec>& schedule, link::TwinId twin) {
  std::vector<FaultSpec> out;
  std::copy_if(schedule.begin(), schedule.end(), std::back_inserter(out),
               [&](const FaultSpec& s) { return s.twin == twin; });
  return out;
}

FaultInjector::FaultInjector(link::TwinId twin, std::vector<FaultSpec> schedule, sim::UnitRegistry& registry)
    : specs_(std::move(schedule)), registry_(registry) {
  for (const auto& s : specs_) {
    if (s.twin != twin || registry_.find(s.unit) == nullptr) throw UnknownTarget(s);
    if (s.at < 0) throw std::invalid_argument("fault " + to_string(s) + " scheduled before step 0");
  }
  std::stable_sort(specs_.begin(), specs_.end(), [](const auto& a, const auto& b) { return a.at < b.at; });
}

std::vector<FiredFault> FaultInjector::on_step(std::int64_t step) {
  std::vector<FiredFault> out;
  while (next_ < specs_.size() && specs_[next_].at <= step) {
    const auto& s = specs_[next_++];
    out.push_back({s, fire(s, registry_), step});
  }
  return out;
}

} // namespace twinrt::fault
