#include "twinrt/scenario/experiment.hpp"

#include "twinrt/log.hpp"

#include <poll.h>
#include <signal.h>
#include <spawn.h>
#include <sys/wait.h>
#include <unistd.h>
#include <fcntl.h>

#include <cstring>
#include <ctime>
#include <thread>

extern char** environ;

namespace twinrt::scenario {

using orch::Micros;
using namespace std::chrono_literals;

InProcessRun::InProcessRun(const Scenario& scenario, StepHook before_pt_step)
    : scenario_(scenario), bus_(link::InMemoryBus::create()), hook_(std::move(before_pt_step)) {
  pt_link_ = bus_->connect(kPtEndpoint);
  subscribe_pt(*pt_link_);
  if (scenario_.dt_enabled) {
    dt_link_ = bus_->connect(kDtEndpoint);
    subscribe_dt(*dt_link_);
    dt_ = std::make_unique<DtTwin>(default_dt_config(scenario_), *dt_link_, now_);
  }
  PtOptions options;
  if (hook_) options.before_step = [this](std::int64_t k) { hook_(k, *this); };
  pt_ = std::make_unique<PtTwin>(default_pt_config(scenario_), scenario_, *pt_link_, std::move(options), now_);
}

RunResult InProcessRun::run() {
  constexpr int kMaxSpins = 100000;
  while (!pt_->finished()) {
    for (int spin = 0;; ++spin) {
      bool progress = pt_->poll(now_);
      if (dt_ && !dt_->stopped()) progress = dt_->poll(now_) || progress;
      if (!progress) break;
      if (spin > kMaxSpins) throw std::runtime_error("in-process run livelocked");
    }
    if (pt_->finished()) break;
    std::optional<Micros> next = pt_->next_wakeup();
    if (dt_ && !dt_->stopped()) {
      if (auto w = dt_->next_wakeup(); w && (!next || *w < *next)) next = w;
    }
    if (!next) throw std::runtime_error("in-process run stalled at step " + std::to_string(pt_->summary().steps));
    now_ = std::max(*next, now_ + Micros{1});
  }
  if (dt_) dt_->poll(now_); // consumes pt.stop

  RunResult r;
  r.trace = pt_->trace();
  r.pt_events = pt_->events();
  r.pt_summary = pt_->summary();
  r.synced_heartbeats = pt_->synced_heartbeats();
  if (dt_) {
    r.dt_events = dt_->events();
    r.dt_summary = dt_->summary();
  }
  return r;
}

RunResult run_in_process(const Scenario& scenario) { return InProcessRun(scenario).run(); }

namespace {

struct SteadyClock {
  std::chrono::steady_clock::time_point t0 = std::chrono::steady_clock::now();
  Micros operator()() const {
    return std::chrono::duration_cast<Micros>(std::chrono::steady_clock::now() - t0);
  }
};

std::string local_clock_text(Micros) {
  auto secs = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
  std::tm tm{};
  localtime_r(&secs, &tm);
  return format_clock(tm.tm_hour * 3600 + tm.tm_min * 60 + tm.tm_sec);
}

Micros bounded_wait(std::optional<Micros> wake, Micros now) {
  constexpr Micros kMaxWait = 50ms;
  if (!wake) return kMaxWait;
  return std::clamp(*wake - now, Micros{0}, kMaxWait);
}

std::unique_ptr<link::TcpTransport> connect_role(const link::NetEndpoint& broker,
                                                 void (*subscribe)(link::Transport&)) {
  auto t = link::TcpTransport::connect(broker);
  subscribe(*t);
  // the broker has registered the subscriptions once the pong is back
  if (!t->ping(2000ms)) throw std::runtime_error("broker at " + broker.str() + " did not answer");
  return t;
}

} // namespace

RunResult run_pt_role(const TwinConfig& config, const Scenario& scenario, const link::NetEndpoint& broker,
                      Micros startup_grace) {
  auto transport = connect_role(broker, subscribe_pt);
  SteadyClock clock;
  PtOptions options;
  options.startup_grace = startup_grace;
  options.clock_text = local_clock_text;
  PtTwin pt(config, scenario, *transport, std::move(options), clock());
  while (!pt.finished()) {
    pt.poll(clock());
    if (pt.finished()) break;
    auto wait = bounded_wait(pt.next_wakeup(), clock());
    if (wait > Micros{0}) transport->wait_for_data(wait);
  }
  transport->ping(2000ms); // let pt.stop reach the broker before closing

  RunResult r;
  r.trace = pt.trace();
  r.pt_events = pt.events();
  r.pt_summary = pt.summary();
  r.synced_heartbeats = pt.synced_heartbeats();
  return r;
}

RunResult run_dt_role(const TwinConfig& config, const link::NetEndpoint& broker, Micros idle_timeout) {
  auto transport = connect_role(broker, subscribe_dt);
  SteadyClock clock;
  DtTwin dt(config, *transport, clock());
  for (;;) {
    auto now = clock();
    dt.poll(now);
    if (dt.stopped()) break;
    if (now - dt.last_activity() > idle_timeout) {
      log()->warn("DT: nothing received for {} ms, exiting", idle_timeout.count() / 1000);
      break;
    }
    auto wait = bounded_wait(dt.next_wakeup(), clock());
    if (wait > Micros{0}) transport->wait_for_data(wait);
  }
  RunResult r;
  r.dt_events = dt.events();
  r.dt_summary = dt.summary();
  return r;
}

// ---------------------------------------------------------------------------
// three-process topology

namespace {

class Child {
public:
  Child(const std::filesystem::path& exe, const std::vector<std::string>& args, const std::filesystem::path& log,
        bool capture_stdout) {
    int pipefd[2] = {-1, -1};
    if (capture_stdout && ::pipe(pipefd) != 0) throw std::runtime_error("pipe failed");
    posix_spawn_file_actions_t fa;
    posix_spawn_file_actions_init(&fa);
    posix_spawn_file_actions_addopen(&fa, STDERR_FILENO, log.c_str(), O_WRONLY | O_CREAT | O_TRUNC, 0644);
    if (capture_stdout) {
      posix_spawn_file_actions_adddup2(&fa, pipefd[1], STDOUT_FILENO);
      posix_spawn_file_actions_addclose(&fa, pipefd[0]);
      posix_spawn_file_actions_addclose(&fa, pipefd[1]);
    } else {
      posix_spawn_file_actions_adddup2(&fa, STDERR_FILENO, STDOUT_FILENO);
    }
    std::vector<std::string> argv_s{exe.string()};
    argv_s.insert(argv_s.end(), args.begin(), args.end());
    std::vector<char*> argv;
    for (auto& a : argv_s) argv.push_back(a.data());
    argv.push_back(nullptr);
    int rc = posix_spawn(&pid_, exe.c_str(), &fa, nullptr, argv.data(), environ);
    posix_spawn_file_actions_destroy(&fa);
    if (capture_stdout) {
      ::close(pipefd[1]);
      out_fd_ = pipefd[0];
    }
    if (rc != 0) throw std::runtime_error("cannot spawn " + exe.string() + ": " + std::strerror(rc));
    name_ = args.empty() ? exe.string() : args.front();
  }
  ~Child() {
    if (pid_ > 0 && !exited_) {
      ::kill(pid_, SIGKILL);
      ::waitpid(pid_, nullptr, 0);
    }
    if (out_fd_ >= 0) ::close(out_fd_);
  }

  /// Reads one stdout line, waiting at most `timeout`.
  std::optional<std::string> read_line(Micros timeout) {
    SteadyClock clock;
    std::string line;
    while (clock() < timeout) {
      pollfd p{out_fd_, POLLIN, 0};
      if (::poll(&p, 1, 50) <= 0) continue;
      char c;
      if (::read(out_fd_, &c, 1) != 1) return std::nullopt;
      if (c == '\n') return line;
      line.push_back(c);
    }
    return std::nullopt;
  }

  /// Exit status once the child is gone, polling up to `timeout`.
  std::optional<int> wait(Micros timeout) {
    SteadyClock clock;
    for (;;) {
      int status = 0;
      pid_t r = ::waitpid(pid_, &status, WNOHANG);
      if (r == pid_) {
        exited_ = true;
        return WIFEXITED(status) ? WEXITSTATUS(status) : 128 + WTERMSIG(status);
      }
      if (clock() >= timeout) return std::nullopt;
      std::this_thread::sleep_for(20ms);
    }
  }

  void terminate() {
    if (!exited_) ::kill(pid_, SIGTERM);
  }
  const std::string& name() const { return name_; }

private:
  pid_t pid_ = -1;
  int out_fd_ = -1;
  bool exited_ = false;
  std::string name_;
};

} // namespace

void run_processes(const std::filesystem::path& scenario_file, const std::filesystem::path& trace_out,
                   const ProcessesOptions& options) {
  Scenario scenario = load_scenario(scenario_file);
  if (options.period) scenario.period = *options.period;
  std::filesystem::create_directories(options.workdir);
  const auto pt_cfg = options.workdir / "pt.json";
  const auto dt_cfg = options.workdir / "dt.json";
  save_twin_config(default_pt_config(scenario), pt_cfg);
  save_twin_config(default_dt_config(scenario), dt_cfg);

  Child broker(options.exe, {"broker", "--listen", "127.0.0.1:0"}, options.workdir / "broker.log", true);
  auto banner = broker.read_line(5s);
  const std::string prefix = "listening ";
  if (!banner || banner->rfind(prefix, 0) != 0) {
    throw std::runtime_error("broker did not start; see " + (options.workdir / "broker.log").string());
  }
  const std::string addr = banner->substr(prefix.size());
  log()->info("broker listening on {}", addr);

  std::optional<Child> dt;
  if (scenario.dt_enabled) {
    dt.emplace(options.exe, std::vector<std::string>{"dt", "--config", dt_cfg.string(), "--broker", addr},
               options.workdir / "dt.log", false);
  }
  Child pt(options.exe,
           {"pt", "--config", pt_cfg.string(), "--broker", addr, "--scenario", scenario_file.string(), "--out",
            trace_out.string()},
           options.workdir / "pt.log", false);

  // A DT that dies during startup is a harness failure; once the run is
  // under way a DT crash is just another fault the PT has to survive.
  SteadyClock clock;
  std::optional<int> pt_status;
  bool dt_done = !dt;
  while (clock() < options.timeout) {
    if ((pt_status = pt.wait(Micros{0}))) break;
    if (!dt_done) {
      if (auto status = dt->wait(Micros{0})) {
        dt_done = true;
        if (*status != 0 && clock() < options.startup_window) {
          pt.terminate();
          pt.wait(5s);
          broker.terminate();
          broker.wait(5s);
          throw std::runtime_error("DT failed to start (status " + std::to_string(*status) + "); see " +
                                   (options.workdir / "dt.log").string());
        }
        if (*status != 0) log()->warn("DT exited with status {} mid-run; the PT carries on", *status);
      }
    }
    std::this_thread::sleep_for(20ms);
  }
  if (!pt_status) pt.terminate();
  if (dt && !dt_done && !dt->wait(10s)) {
    log()->warn("DT still running after the PT finished; terminating it");
    dt->terminate();
    dt->wait(5s);
  }
  broker.terminate();
  broker.wait(5s);

  if (!pt_status) throw std::runtime_error("PT did not finish in time; see " + (options.workdir / "pt.log").string());
  if (*pt_status != 0) {
    throw std::runtime_error("PT exited with status " + std::to_string(*pt_status) + "; see " +
                             (options.workdir / "pt.log").string());
  }
}

} // namespace twinrt::scenario
