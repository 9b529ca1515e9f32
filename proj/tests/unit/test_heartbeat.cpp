#include <doctest.h>

#include "twinrt/heartbeat/heartbeat.hpp"
#include "twinrt/heartbeat/resync.hpp"

#include <deque>
#include <random>

using namespace twinrt;
using namespace twinrt::hb;
using orch::Micros;

namespace {

struct Fixture {
  std::shared_ptr<link::InMemoryBus> bus = link::InMemoryBus::create();
  std::shared_ptr<link::InMemoryEndpoint> dt = bus->connect("dt");
  std::shared_ptr<link::InMemoryEndpoint> pt = bus->connect("pt");
  link::Outbox outbox{*dt, link::TwinId::DT, {}};

  Fixture() { pt->subscribe(link::topics::dt_heartbeat); }

  std::vector<std::int64_t> received() {
    std::vector<std::int64_t> out;
    for (const auto& d : pt->drain()) out.push_back(*heartbeat_counter(d.envelope));
    return out;
  }
};

} // namespace

TEST_CASE("first heartbeat carries counter 1") {
  Fixture f;
  HeartbeatUnit unit("Heartbeat", f.outbox);
  CHECK(unit.output(kCounterField).as_integer() == 0);
  unit.step(0.1);
  CHECK(f.received() == std::vector<std::int64_t>{1});
}

TEST_CASE("ten steps publish counters 1..10 in order") {
  Fixture f;
  HeartbeatUnit unit("Heartbeat", f.outbox);
  for (int i = 0; i < 10; ++i) unit.step(0.1);
  CHECK(f.received() == std::vector<std::int64_t>{1, 2, 3, 4, 5, 6, 7, 8, 9, 10});
  CHECK(unit.counter() == 10);
}

TEST_CASE("halted heartbeat never exceeds the halt step") {
  Fixture f;
  HeartbeatUnit unit("Heartbeat", f.outbox);
  const int k = 4;
  for (int i = 0; i < 20; ++i) {
    if (i == k) unit.halt();
    unit.step(0.1);
  }
  auto got = f.received();
  REQUIRE_FALSE(got.empty());
  for (auto c : got) CHECK(c <= k);
  CHECK(unit.output(kCounterField).as_integer() == k);
}

TEST_CASE("heartbeat payload parsing") {
  link::Envelope e;
  CHECK_FALSE(heartbeat_counter(e).has_value());
  e.payload["counter"] = 2.0;
  CHECK_FALSE(heartbeat_counter(e).has_value());
  e.payload["counter"] = std::int64_t{7};
  CHECK(heartbeat_counter(e) == 7);
}

TEST_CASE("monitor thresholds and re-instatement") {
  HeartbeatMonitor m(3);
  CHECK(m.observe(Received{1}));
  CHECK(m.state().consecutive_misses == 0);
  CHECK(m.state().status == Status::Alive);

  m.observe(DeadlineElapsed{});
  m.observe(DeadlineElapsed{});
  CHECK(m.state().status == Status::Alive);
  m.observe(DeadlineElapsed{});
  CHECK(m.state().status == Status::Down);
  CHECK(m.state().consecutive_misses == 3);

  CHECK(m.observe(Received{2}));
  CHECK(m.state().status == Status::Alive);
  CHECK(m.state().consecutive_misses == 0);
}

TEST_CASE("counter regression counts as a miss") {
  HeartbeatMonitor m(2);
  m.observe(Received{5});
  CHECK_FALSE(m.observe(Received{5}));
  CHECK(m.state().consecutive_misses == 1);
  CHECK_FALSE(m.observe(Received{3}));
  CHECK(m.state().status == Status::Down);
  CHECK(m.state().last_counter == 5);
}

TEST_CASE("monitor rejects a zero threshold") { CHECK_THROWS(HeartbeatMonitor(0)); }

TEST_CASE("decide_mode table") {
  LivenessState alive;
  LivenessState down;
  down.status = Status::Down;
  down.consecutive_misses = 3;
  CHECK(decide_mode(TwinMode::DtSynced, down, true) == TwinMode::LocalFallback);
  CHECK(decide_mode(TwinMode::DtSynced, down, false) == TwinMode::SafeMode);
  CHECK(decide_mode(TwinMode::LocalFallback, alive, true) == TwinMode::DtSynced);
  CHECK(decide_mode(TwinMode::SafeMode, alive, false) == TwinMode::DtSynced);
  CHECK(decide_mode(TwinMode::DtSynced, alive, true) == TwinMode::DtSynced);

  CHECK(std::holds_alternative<orch::RemoteDriven>(trigger_mode_for(TwinMode::DtSynced, Micros{100000})));
  auto local = trigger_mode_for(TwinMode::SafeMode, Micros{100000});
  REQUIRE(std::holds_alternative<orch::LocalFixedRate>(local));
  CHECK(std::get<orch::LocalFixedRate>(local).period == Micros{100000});
  CHECK(twin_mode_from_string("LocalFallback") == TwinMode::LocalFallback);
  CHECK_THROWS(twin_mode_from_string("Panic"));
}

TEST_CASE("random miss/receive sequences match the window oracle") {
  std::mt19937 rng(2024);
  for (int k = 1; k <= 5; ++k) {
    for (int run = 0; run < 200; ++run) {
      HeartbeatMonitor m(k);
      TwinMode mode = TwinMode::DtSynced;
      bool fallback = (run % 2) == 0;
      std::deque<bool> window; // true = miss, newest at back
      std::int64_t best = 0;
      std::int64_t counter = 0;
      std::uniform_int_distribution<int> pick(0, 9);
      for (int i = 0; i < 60; ++i) {
        int r = pick(rng);
        bool miss;
        Status before = m.state().status;
        if (r < 4) {
          m.observe(DeadlineElapsed{});
          miss = true;
        } else if (r < 8) {
          counter += 1 + r % 2;
          m.observe(Received{counter});
          miss = counter <= best;
          best = std::max(best, counter);
        } else {
          // stale or repeated counter
          std::int64_t stale = std::max<std::int64_t>(0, counter - (r - 8));
          m.observe(Received{stale});
          miss = stale <= best;
          best = std::max(best, stale);
        }
        window.push_back(miss);
        if (static_cast<int>(window.size()) > k) window.pop_front();
        bool last_k_missed = static_cast<int>(window.size()) == k &&
                             std::all_of(window.begin(), window.end(), [](bool b) { return b; });
        REQUIRE((m.state().status == Status::Down) == last_k_missed);

        TwinMode next = decide_mode(mode, m.state(), fallback);
        if (before == Status::Down && m.state().status == Status::Alive) {
          CHECK(next == TwinMode::DtSynced);
        }
        if (m.state().status == Status::Down) {
          CHECK(next == (fallback ? TwinMode::LocalFallback : TwinMode::SafeMode));
        }
        mode = next;
      }
    }
  }
}

TEST_CASE("watch counts one miss per elapsed deadline") {
  HeartbeatWatch w(3, Micros{200}, Micros{0});
  CHECK(w.poll(Micros{199}) == 0);
  CHECK(w.poll(Micros{200}) == 1);
  CHECK(w.on_heartbeat(1, Micros{250}));
  CHECK(w.state().consecutive_misses == 0);
  CHECK(w.next_deadline() == Micros{450});
  CHECK(w.poll(Micros{449}) == 0);
  CHECK(w.poll(Micros{1049}) == 3); // expiries at 450, 650, 850
  CHECK(w.state().status == Status::Down);
  CHECK_FALSE(w.on_heartbeat(1, Micros{1100}));
  CHECK(w.on_heartbeat(2, Micros{1100}));
  CHECK(w.state().status == Status::Alive);
}

TEST_CASE("resync fires only on Down to Alive and repeats R times") {
  ResyncScheduler r(3);
  r.on_status(Status::Alive, Status::Alive);
  r.on_status(Status::Alive, Status::Down);
  r.on_status(Status::Down, Status::Down);
  CHECK_FALSE(r.take());
  CHECK(r.resyncs() == 0);

  r.on_status(Status::Down, Status::Alive);
  CHECK(r.take());
  CHECK(r.take());
  CHECK(r.take());
  CHECK_FALSE(r.take());
  CHECK(r.resyncs() == 1);
}

TEST_CASE("snapshot payload round-trips") {
  TwinSnapshot s{42, 3.25, 0.4, 4.0, 0.3, 4.0, true};
  link::Envelope e;
  e.sim_step = 42;
  e.payload = to_payload(s);
  CHECK(snapshot_from(e) == s);
  e.payload.erase("velocity");
  CHECK_THROWS_AS(snapshot_from(e), std::invalid_argument);
}
