#pragma once

#include "twinrt/scenario/scenario.hpp"
#include "twinrt/scenario/trace.hpp"

#include <json.hpp>

namespace twinrt::scenario {

enum class Verdict { Pass, Fail, Unevaluable };
std::string_view to_string(Verdict v);

struct AssertionOutcome {
  std::string name;
  std::string type;
  Verdict verdict = Verdict::Unevaluable;
  std::string detail;
  /// Steps that decided the verdict: the satisfying row or the first violation.
  std::vector<std::int64_t> evidence;
};

struct CheckReport {
  std::string scenario;
  std::vector<AssertionOutcome> outcomes;

  /// True iff every assertion passed; Unevaluable counts as not passed.
  bool all_passed() const;
  const AssertionOutcome* find(const std::string& name) const;
  nlohmann::json to_json() const;
};

/// Windows that reach outside the trace, or are empty, make the assertion
/// Unevaluable rather than failing the whole check.
CheckReport evaluate_assertions(const Trace& trace, const Scenario& scenario);

} // namespace twinrt::scenario
