// twin: broker, twin roles, experiment runner, trace checker and reporter.
//
// Exit status: 0 when every assertion passes, 1 when one does not, 2 on
// usage or runtime errors.

#include "twinrt/log.hpp"
#include "twinrt/scenario/assertions.hpp"
#include "twinrt/scenario/experiment.hpp"
#include "twinrt/scenario/report.hpp"

#include <CLI11.hpp>

#include <csignal>
#include <iostream>
#include <thread>

#include <unistd.h>

namespace fs = std::filesystem;
using namespace twinrt;
using namespace twinrt::scenario;

namespace {

constexpr int kAssertionsFailed = 1;
constexpr int kError = 2;

orch::Micros secs(double s) { return orch::seconds_to_micros(s); }

fs::path events_path_for(const fs::path& trace) {
  auto p = trace;
  p += ".events.jsonl";
  return p;
}

void write_events(const RunResult& r, const fs::path& path) {
  EventLog merged = r.pt_events;
  for (const auto& e : r.dt_events.entries()) merged.add(e);
  merged.write_jsonl(path);
}

int print_check(const CheckReport& report, bool as_json) {
  if (as_json) {
    std::cout << report.to_json().dump(2) << '\n';
  } else {
    for (const auto& o : report.outcomes) {
      std::string verdict(to_string(o.verdict));
      for (auto& c : verdict) c = static_cast<char>(std::toupper(c));
      std::cout << verdict << "  " << o.name << "  " << o.detail << '\n';
    }
    std::cout << (report.all_passed() ? "all assertions passed" : "assertions not all passed") << '\n';
  }
  return report.all_passed() ? 0 : kAssertionsFailed;
}

int cmd_broker(const std::string& listen) {
  // SIGTERM and SIGINT are taken by a waiting thread so the broker can shut
  // down cleanly instead of dying inside a lock.
  sigset_t set;
  sigemptyset(&set);
  sigaddset(&set, SIGTERM);
  sigaddset(&set, SIGINT);
  pthread_sigmask(SIG_BLOCK, &set, nullptr);

  link::Broker broker(link::parse_endpoint(listen));
  broker.start();
  std::cout << "listening " << broker.endpoint().str() << std::endl;
  std::thread waiter([&] {
    int sig = 0;
    sigwait(&set, &sig);
    log()->info("broker: signal {}, stopping", sig);
    broker.stop();
  });
  broker.serve();
  if (waiter.joinable()) {
    pthread_kill(waiter.native_handle(), SIGTERM); // no-op when the waiter already returned
    waiter.join();
  }
  return 0;
}

int cmd_dt(const fs::path& config, const std::string& broker, double idle_timeout, const fs::path& events) {
  auto cfg = load_twin_config(config);
  auto r = run_dt_role(cfg, link::parse_endpoint(broker), secs(idle_timeout));
  if (!events.empty()) r.dt_events.write_jsonl(events);
  log()->info("DT: {} steps", r.dt_summary ? r.dt_summary->steps : 0);
  return 0;
}

int cmd_pt(const fs::path& config, const std::string& broker, const fs::path& scenario_file, const fs::path& out,
           double startup_grace) {
  auto cfg = load_twin_config(config);
  auto sc = load_scenario(scenario_file);
  auto r = run_pt_role(cfg, sc, link::parse_endpoint(broker), secs(startup_grace));
  write_trace_csv(r.trace, out);
  r.pt_events.write_jsonl(events_path_for(out));
  log()->info("PT: {} steps ({} remote, {} local)", r.pt_summary.steps, r.pt_summary.remote_steps,
              r.pt_summary.local_steps);
  return 0;
}

int cmd_run(const fs::path& scenario_file, const std::string& topology, const fs::path& out,
            std::optional<double> period, fs::path workdir, bool as_json) {
  auto sc = load_scenario(scenario_file);
  if (topology == "in-process") {
    if (period) sc.period = *period;
    auto r = run_in_process(sc);
    write_trace_csv(r.trace, out);
    write_events(r, events_path_for(out));
  } else {
    if (workdir.empty()) workdir = fs::path(out).replace_extension(".roles");
    char self[4096];
    auto n = ::readlink("/proc/self/exe", self, sizeof self - 1);
    if (n <= 0) throw std::runtime_error("cannot locate own executable");
    self[n] = '\0';
    run_processes(scenario_file, out, {fs::path(self), workdir, period});
  }
  return print_check(evaluate_assertions(load_trace_csv(out), sc), as_json);
}

} // namespace

int main(int argc, char** argv) {
  CLI::App app{"Digital twin pair runtime: broker, PT and DT roles, experiment runner and trace tools"};
  app.require_subcommand(1);

  std::string listen = "127.0.0.1:5672";
  auto* broker = app.add_subcommand("broker", "Run the topic broker");
  broker->add_option("--listen", listen, "HOST:PORT to listen on (port 0 picks a free one)");

  fs::path config, scenario_file, out, events, workdir, trace;
  std::string broker_addr = "127.0.0.1:5672";
  double idle_timeout = 10.0;
  double startup_grace = 10.0;
  std::optional<double> period;
  std::string topology = "in-process";
  bool as_json = false;

  auto* dt = app.add_subcommand("dt", "Run the digital twin");
  dt->add_option("--config", config, "DT twin config (JSON)")->required()->check(CLI::ExistingFile);
  dt->add_option("--broker", broker_addr, "Broker HOST:PORT")->required();
  dt->add_option("--idle-timeout", idle_timeout, "Exit after this many seconds without traffic");
  dt->add_option("--events", events, "Write the DT event log (JSON lines)");

  auto* pt = app.add_subcommand("pt", "Run the physical twin");
  pt->add_option("--config", config, "PT twin config (JSON)")->required()->check(CLI::ExistingFile);
  pt->add_option("--broker", broker_addr, "Broker HOST:PORT")->required();
  pt->add_option("--scenario", scenario_file, "Scenario file")->required()->check(CLI::ExistingFile);
  pt->add_option("--out", out, "Trace CSV to write")->required();
  pt->add_option("--startup-grace", startup_grace, "Seconds to wait for the DT before counting misses");

  auto* run = app.add_subcommand("run", "Run a scenario with both twins and check its assertions");
  run->add_option("--scenario", scenario_file, "Scenario file")->required()->check(CLI::ExistingFile);
  run->add_option("--topology", topology, "in-process or processes")
      ->check(CLI::IsMember({"in-process", "processes"}));
  run->add_option("--out", out, "Trace CSV to write")->required();
  run->add_option("--period", period, "Wall-clock seconds per step (overrides the scenario)");
  run->add_option("--workdir", workdir, "Directory for role configs and logs (processes topology)");
  run->add_flag("--json", as_json, "Print the assertion report as JSON");

  std::string role = "pt";
  auto* config_cmd = app.add_subcommand("config", "Write the default twin config for a scenario");
  config_cmd->add_option("--scenario", scenario_file, "Scenario file")->required()->check(CLI::ExistingFile);
  config_cmd->add_option("--role", role, "pt or dt")->required()->check(CLI::IsMember({"pt", "dt"}));
  config_cmd->add_option("--out", out, "Config file to write")->required();

  auto* check = app.add_subcommand("check", "Evaluate a scenario's assertions against a trace");
  check->add_option("trace", trace, "Trace CSV")->required()->check(CLI::ExistingFile);
  check->add_option("--scenario", scenario_file, "Scenario file")->required()->check(CLI::ExistingFile);
  check->add_flag("--json", as_json, "Print the report as JSON");

  auto* report = app.add_subcommand("report", "Summarize a trace");
  report->add_option("trace", trace, "Trace CSV")->required()->check(CLI::ExistingFile);
  report->add_flag("--json", as_json, "Print the summary as JSON");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    int rc = app.exit(e);
    return rc == 0 ? 0 : kError;
  }

  try {
    if (*broker) return cmd_broker(listen);
    if (*dt) return cmd_dt(config, broker_addr, idle_timeout, events);
    if (*pt) return cmd_pt(config, broker_addr, scenario_file, out, startup_grace);
    if (*run) return cmd_run(scenario_file, topology, out, period, workdir, as_json);
    if (*config_cmd) {
      auto sc = load_scenario(scenario_file);
      save_twin_config(role == "pt" ? default_pt_config(sc) : default_dt_config(sc), out);
      return 0;
    }
    if (*check) return print_check(evaluate_assertions(load_trace_csv(trace), load_scenario(scenario_file)), as_json);
    if (*report) {
      auto t = load_trace_csv(trace);
      if (as_json) {
        std::cout << summarize(t).to_json().dump(2) << '\n';
      } else {
        std::cout << render_report(t);
      }
      return 0;
    }
  } catch (const ParseError& e) {
    std::cerr << "twin: scenario parse error at " << e.where() << ": " << e.what() << '\n';
  } catch (const InvariantViolation& e) {
    std::cerr << "twin: scenario rule '" << e.rule() << "' violated: " << e.what() << '\n';
  } catch (const std::exception& e) {
    std::cerr << "twin: " << e.what() << '\n';
  }
  return kError;
}
