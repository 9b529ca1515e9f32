#include "twinrt/scenario/report.hpp"

#include <algorithm>
#include <sstream>

namespace twinrt::scenario {

using nlohmann::json;

namespace {

struct NumericColumn {
  const char* name;
  double (*get)(const TraceRow&);
};

const NumericColumn kNumeric[] = {
    {"heartbeat", [](const TraceRow& r) { return static_cast<double>(r.heartbeat); }},
    {"pt_target_velocity", [](const TraceRow& r) { return r.pt_target_velocity; }},
    {"pt_target_acceleration", [](const TraceRow& r) { return r.pt_target_acceleration; }},
    {"dt_target_velocity", [](const TraceRow& r) { return r.dt_target_velocity; }},
    {"dt_target_acceleration", [](const TraceRow& r) { return r.dt_target_acceleration; }},
    {"step", [](const TraceRow& r) { return static_cast<double>(r.step); }},
    {"pt_velocity", [](const TraceRow& r) { return r.pt_velocity; }},
    {"applied_target_acceleration", [](const TraceRow& r) { return r.applied_target_acceleration; }},
    {"applied_target_velocity", [](const TraceRow& r) { return r.applied_target_velocity; }},
};

std::vector<Segment> segments(const Trace& trace, const std::string TraceRow::*column) {
  std::vector<Segment> out;
  for (const auto& r : trace) {
    if (!out.empty() && out.back().value == r.*column) {
      out.back().to = r.step;
    } else {
      out.push_back({r.step, r.step, r.*column});
    }
  }
  return out;
}

json segments_json(const std::vector<Segment>& segs) {
  json out = json::array();
  for (const auto& s : segs) out.push_back({{"from", s.from}, {"to", s.to}, {"value", s.value}});
  return out;
}

} // namespace

TraceSummary summarize(const Trace& trace) {
  TraceSummary s;
  s.rows = trace.size();
  if (trace.empty()) return s;
  for (const auto& col : kNumeric) {
    auto [lo, hi] = std::minmax_element(trace.begin(), trace.end(),
                                        [&](const TraceRow& a, const TraceRow& b) { return col.get(a) < col.get(b); });
    s.columns.push_back({col.name, col.get(*lo), col.get(*hi)});
  }
  s.modes = segments(trace, &TraceRow::twin_mode);
  s.sources = segments(trace, &TraceRow::acc_source);
  double accel = trace.front().pt_target_acceleration;
  double vel = trace.front().pt_target_velocity;
  for (const auto& r : trace) {
    accel = std::min({accel, r.pt_target_acceleration, r.dt_target_acceleration});
    vel = std::min({vel, r.pt_target_velocity, r.dt_target_velocity});
  }
  s.min_target_acceleration = accel;
  s.min_target_velocity = vel;
  return s;
}

json TraceSummary::to_json() const {
  json cols = json::object();
  for (const auto& c : columns) cols[c.column] = {{"min", c.min}, {"max", c.max}};
  json j{{"rows", rows}, {"columns", cols}, {"modes", segments_json(modes)}, {"sources", segments_json(sources)}};
  j["min_target_acceleration"] = min_target_acceleration ? json(*min_target_acceleration) : json();
  j["min_target_velocity"] = min_target_velocity ? json(*min_target_velocity) : json();
  return j;
}

std::string render_report(const Trace& trace) {
  auto s = summarize(trace);
  std::ostringstream out;
  out << "rows: " << s.rows << '\n';
  if (s.rows == 0) return out.str();
  out << "steps: " << trace.front().step << ".." << trace.back().step << " (" << trace.front().time << " to "
      << trace.back().time << ")\n\n";

  std::size_t width = 0;
  for (const auto& c : s.columns) width = std::max(width, c.column.size());
  out << "column ranges:\n";
  for (const auto& c : s.columns) {
    out << "  " << c.column << std::string(width - c.column.size(), ' ') << "  min " << format_real(c.min)
        << "  max " << format_real(c.max) << '\n';
  }
  auto timeline = [&](const char* title, const std::vector<Segment>& segs) {
    out << '\n' << title << ":\n";
    for (const auto& seg : segs) out << "  " << seg.from << ".." << seg.to << "  " << seg.value << '\n';
  };
  timeline("mode timeline", s.modes);
  timeline("acc source timeline", s.sources);
  out << "\nminimum target acceleration: " << format_real(*s.min_target_acceleration) << '\n';
  out << "minimum target velocity: " << format_real(*s.min_target_velocity) << '\n';
  return out.str();
}

} // namespace twinrt::scenario
