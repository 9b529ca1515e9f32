#include "twinrt/scenario/assertions.hpp"

#include <functional>

namespace twinrt::scenario {

using nlohmann::json;

std::string_view to_string(Verdict v) {
  switch (v) {
  case Verdict::Pass:
    return "pass";
  case Verdict::Fail:
    return "fail";
  case Verdict::Unevaluable:
    return "unevaluable";
  }
  return "?";
}

bool CheckReport::all_passed() const {
  for (const auto& o : outcomes) {
    if (o.verdict != Verdict::Pass) return false;
  }
  return true;
}

const AssertionOutcome* CheckReport::find(const std::string& name) const {
  for (const auto& o : outcomes) {
    if (o.name == name) return &o;
  }
  return nullptr;
}

json CheckReport::to_json() const {
  json list = json::array();
  for (const auto& o : outcomes) {
    list.push_back({{"name", o.name},
                    {"type", o.type},
                    {"verdict", std::string(to_string(o.verdict))},
                    {"detail", o.detail},
                    {"evidence", o.evidence}});
  }
  return {{"scenario", scenario}, {"passed", all_passed()}, {"assertions", list}};
}

namespace {

struct Unevaluable {
  std::string why;
};

struct Range {
  std::int64_t from; // inclusive
  std::int64_t to;   // exclusive
};

class Evaluator {
public:
  Evaluator(const Trace& trace, const Scenario& scenario) : trace_(trace), scenario_(scenario) {
    if (!trace.empty()) {
      first_ = trace.front().step;
      end_ = trace.back().step + 1;
    }
  }

  AssertionOutcome operator()(const check::VelocityZeroWithin& a) const {
    auto s = event(a.after);
    auto hit = first_where({s, s + a.steps + 1}, [](const TraceRow& r) { return r.pt_velocity == 0.0; });
    if (!hit) return fail("velocity not 0 by step " + std::to_string(s + a.steps), {s + a.steps});
    if (a.until) {
      auto bad = first_where({*hit, resolve(*a.until)}, [](const TraceRow& r) { return r.pt_velocity != 0.0; });
      if (bad) return fail("velocity 0 at step " + std::to_string(*hit) + " but moves again", {*hit, *bad});
    }
    return pass("velocity 0 at step " + std::to_string(*hit), {*hit});
  }

  AssertionOutcome operator()(const check::VelocityPositiveThroughout& a) const {
    auto w = window(a.window);
    auto bad = first_where(w, [](const TraceRow& r) { return !(r.pt_velocity > 0.0); });
    if (bad) return fail("velocity " + format_real(row(*bad).pt_velocity) + " at step " + std::to_string(*bad), {*bad});
    return pass("velocity > 0 on steps " + describe(w), {});
  }

  AssertionOutcome operator()(const check::HeartbeatFrozenAfter& a) const {
    auto s = event(a.event);
    range({s, end_});
    auto frozen = row(s).heartbeat;
    auto bad = first_where({s, end_}, [&](const TraceRow& r) { return r.heartbeat != frozen; });
    if (bad) return fail("heartbeat changes to " + std::to_string(row(*bad).heartbeat), {s, *bad});
    return pass("heartbeat stays " + std::to_string(frozen) + " on steps " + describe({s, end_}), {s});
  }

  AssertionOutcome operator()(const check::AccSourceIs& a) const {
    return all_equal(window(a.window), "acc_source", std::string(rover::to_string(a.tag)),
                     [](const TraceRow& r) { return r.acc_source; });
  }

  AssertionOutcome operator()(const check::AccSourceWithin& a) const {
    const std::string tag(rover::to_string(a.tag));
    auto s = event(a.after);
    auto hit = first_where({s, s + a.steps + 1}, [&](const TraceRow& r) { return r.acc_source == tag; });
    if (!hit) return fail(tag + " not reached by step " + std::to_string(s + a.steps), {s + a.steps});
    if (a.until) {
      auto bad = first_where({*hit, resolve(*a.until)}, [&](const TraceRow& r) { return r.acc_source != tag; });
      if (bad) return fail(tag + " from step " + std::to_string(*hit) + " but " + row(*bad).acc_source, {*hit, *bad});
    }
    return pass(tag + " at step " + std::to_string(*hit) + ", " + std::to_string(*hit - s) + " steps after",
                {*hit});
  }

  AssertionOutcome operator()(const check::AccSourceNever& a) const {
    const std::string tag(rover::to_string(a.tag));
    auto w = window(a.window);
    auto bad = first_where(w, [&](const TraceRow& r) { return r.acc_source == tag; });
    if (bad) return fail(tag + " at step " + std::to_string(*bad), {*bad});
    return pass("no " + tag + " on steps " + describe(w), {});
  }

  AssertionOutcome operator()(const check::ModeIs& a) const {
    return all_equal(window(a.window), "twin_mode", std::string(hb::to_string(a.mode)),
                     [](const TraceRow& r) { return r.twin_mode; });
  }

  AssertionOutcome operator()(const check::AppliedCommandWithin& a) const {
    auto s = event(a.after);
    auto hit = first_where({s, s + a.steps + 1}, [&](const TraceRow& r) {
      return r.applied_target_acceleration == a.accel && r.applied_target_velocity == a.velocity;
    });
    auto want = "(" + format_real(a.accel) + ", " + format_real(a.velocity) + ")";
    if (!hit) return fail("applied command never " + want + " by step " + std::to_string(s + a.steps), {s + a.steps});
    return pass("applied " + want + " at step " + std::to_string(*hit), {*hit});
  }

private:
  static AssertionOutcome pass(std::string detail, std::vector<std::int64_t> evidence) {
    return {"", "", Verdict::Pass, std::move(detail), std::move(evidence)};
  }
  static AssertionOutcome fail(std::string detail, std::vector<std::int64_t> evidence) {
    return {"", "", Verdict::Fail, std::move(detail), std::move(evidence)};
  }

  std::int64_t event(const std::string& id) const {
    try {
      return scenario_.event_step(id);
    } catch (const std::out_of_range&) {
      throw Unevaluable{"no event '" + id + "'"};
    }
  }

  std::int64_t resolve(const StepRef& ref) const {
    if (auto* s = std::get_if<std::int64_t>(&ref)) return *s;
    return event(std::get<std::string>(ref));
  }

  /// Checks the range is non-empty and covered by the trace.
  void range(Range r) const {
    if (r.from >= r.to) throw Unevaluable{"empty window " + describe(r)};
    if (r.from < first_ || r.to > end_) {
      throw Unevaluable{"window " + describe(r) + " outside trace steps " + describe({first_, end_})};
    }
  }

  Range window(const Window& w) const {
    Range r{resolve(w.from), w.to ? resolve(*w.to) : end_};
    range(r);
    return r;
  }

  const TraceRow& row(std::int64_t step) const { return trace_[static_cast<std::size_t>(step - first_)]; }

  std::optional<std::int64_t> first_where(Range r, const std::function<bool(const TraceRow&)>& pred) const {
    range(r);
    for (auto k = r.from; k < r.to; ++k) {
      if (pred(row(k))) return k;
    }
    return std::nullopt;
  }

  AssertionOutcome all_equal(Range w, const std::string& column, const std::string& want,
                             const std::function<std::string(const TraceRow&)>& get) const {
    auto bad = first_where(w, [&](const TraceRow& r) { return get(r) != want; });
    if (bad) return fail(column + " is " + get(row(*bad)) + " at step " + std::to_string(*bad), {*bad});
    return pass(column + " is " + want + " on steps " + describe(w), {});
  }

  static std::string describe(Range r) { return "[" + std::to_string(r.from) + ", " + std::to_string(r.to) + ")"; }

  const Trace& trace_;
  const Scenario& scenario_;
  std::int64_t first_ = 0;
  std::int64_t end_ = 0;
};

/// Row lookup by step assumes a gap-free, increasing step column.
std::optional<std::string> gap_in(const Trace& trace) {
  for (std::size_t i = 1; i < trace.size(); ++i) {
    if (trace[i].step != trace[i - 1].step + 1) {
      return "trace steps jump from " + std::to_string(trace[i - 1].step) + " to " + std::to_string(trace[i].step);
    }
  }
  return std::nullopt;
}

} // namespace

CheckReport evaluate_assertions(const Trace& trace, const Scenario& scenario) {
  CheckReport report;
  report.scenario = scenario.name;
  auto gap = gap_in(trace);
  Evaluator eval(trace, scenario);
  for (const auto& a : scenario.assertions) {
    AssertionOutcome o;
    if (gap) {
      o.verdict = Verdict::Unevaluable;
      o.detail = *gap;
    } else {
      try {
        o = std::visit(eval, a.kind);
      } catch (const Unevaluable& u) {
        o.verdict = Verdict::Unevaluable;
        o.detail = u.why;
      }
    }
    o.name = a.name;
    o.type = assertion_type(a.kind);
    report.outcomes.push_back(std::move(o));
  }
  return report;
}

} // namespace twinrt::scenario
