#include "twinrt/scenario/trace.hpp"

#include <charconv>
#include <fstream>
#include <sstream>
#include <stdexcept>

namespace twinrt::scenario {

const std::vector<std::string> kTraceColumns = {
    "time",       "heartbeat",   "pt_target_velocity", "pt_target_acceleration",      "dt_target_velocity",
    "dt_target_acceleration", "step", "twin_mode",     "acc_source",                  "pt_velocity",
    "applied_target_acceleration", "applied_target_velocity", "dt_env_step"};

std::string format_real(double v) {
  char buf[64];
  auto r = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, r.ptr);
}

void write_trace_csv(const Trace& trace, std::ostream& out) {
  for (std::size_t i = 0; i < kTraceColumns.size(); ++i) out << (i ? "," : "") << kTraceColumns[i];
  out << '\n';
  for (const auto& r : trace) {
    out << r.time << ',' << r.heartbeat << ',' << format_real(r.pt_target_velocity) << ','
        << format_real(r.pt_target_acceleration) << ',' << format_real(r.dt_target_velocity) << ','
        << format_real(r.dt_target_acceleration) << ',' << r.step << ',' << r.twin_mode << ',' << r.acc_source << ','
        << format_real(r.pt_velocity) << ',' << format_real(r.applied_target_acceleration) << ','
        << format_real(r.applied_target_velocity) << ',' << r.dt_env_step << '\n';
  }
}

void write_trace_csv(const Trace& trace, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write trace " + path.string());
  write_trace_csv(trace, out);
}

namespace {

template <typename T> T parse_number(const std::string& cell, std::size_t line, const std::string& column) {
  T v{};
  auto r = std::from_chars(cell.data(), cell.data() + cell.size(), v);
  if (r.ec != std::errc() || r.ptr != cell.data() + cell.size()) {
    throw std::runtime_error("trace line " + std::to_string(line) + ": bad " + column + " '" + cell + "'");
  }
  return v;
}

std::vector<std::string> split(const std::string& line) {
  std::vector<std::string> cells;
  std::string cell;
  std::istringstream in(line);
  while (std::getline(in, cell, ',')) cells.push_back(cell);
  if (!line.empty() && line.back() == ',') cells.emplace_back();
  return cells;
}

} // namespace

Trace parse_trace_csv(std::istream& in) {
  std::string line;
  if (!std::getline(in, line)) throw std::runtime_error("trace is empty");
  if (!line.empty() && line.back() == '\r') line.pop_back();
  auto header = split(line);
  if (header.size() < kTraceColumns.size() ||
      !std::equal(kTraceColumns.begin(), kTraceColumns.end(), header.begin())) {
    throw std::runtime_error("trace header does not match the expected columns");
  }
  Trace trace;
  std::size_t n = 1;
  while (std::getline(in, line)) {
    ++n;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    auto c = split(line);
    if (c.size() != header.size()) throw std::runtime_error("trace line " + std::to_string(n) + ": wrong cell count");
    TraceRow r;
    r.time = c[0];
    r.heartbeat = parse_number<std::int64_t>(c[1], n, kTraceColumns[1]);
    r.pt_target_velocity = parse_number<double>(c[2], n, kTraceColumns[2]);
    r.pt_target_acceleration = parse_number<double>(c[3], n, kTraceColumns[3]);
    r.dt_target_velocity = parse_number<double>(c[4], n, kTraceColumns[4]);
    r.dt_target_acceleration = parse_number<double>(c[5], n, kTraceColumns[5]);
    r.step = parse_number<std::int64_t>(c[6], n, kTraceColumns[6]);
    r.twin_mode = c[7];
    r.acc_source = c[8];
    r.pt_velocity = parse_number<double>(c[9], n, kTraceColumns[9]);
    r.applied_target_acceleration = parse_number<double>(c[10], n, kTraceColumns[10]);
    r.applied_target_velocity = parse_number<double>(c[11], n, kTraceColumns[11]);
    r.dt_env_step = parse_number<std::int64_t>(c[12], n, kTraceColumns[12]);
    trace.push_back(std::move(r));
  }
  return trace;
}

Trace load_trace_csv(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open trace " + path.string());
  return parse_trace_csv(in);
}

void TraceRecorder::record(TraceRow row) { rows_.push_back(std::move(row)); }

void TraceRecorder::on_dt_out(const link::Envelope& e) {
  auto step = e.payload.find("env_step");
  auto accel = e.payload.find("dt_target_accel");
  auto vel = e.payload.find("dt_target_vel");
  if (step == e.payload.end() || accel == e.payload.end() || vel == e.payload.end()) return;
  if (step->second.kind() != sim::Kind::Integer || accel->second.kind() != sim::Kind::Real ||
      vel->second.kind() != sim::Kind::Real) {
    return;
  }
  std::int64_t k = step->second.as_integer();
  if (k < 0) return; // dead-reckoned, not tied to a PT step
  dt_by_env_step_.try_emplace(k, DtCommand{accel->second.as_real(), vel->second.as_real()});
}

Trace TraceRecorder::finish() const {
  Trace out = rows_;
  double accel = 0.0, vel = 0.0;
  std::int64_t env = -1;
  for (auto& r : out) {
    if (auto it = dt_by_env_step_.find(r.step); it != dt_by_env_step_.end()) {
      accel = it->second.accel;
      vel = it->second.vel;
      env = r.step;
    }
    r.dt_target_acceleration = accel;
    r.dt_target_velocity = vel;
    r.dt_env_step = env;
  }
  return out;
}

} // namespace twinrt::scenario
