#include "doctest.h"
#include "test_units.hpp"

#include "twinrt/orchestrator/engine.hpp"
#include "twinrt/orchestrator/run_loop.hpp"

#include <map>
#include <random>
#include <thread>

using namespace twinrt;
using namespace twinrt::orch;
using sim::parse_connection;
using twinrt::testing::CounterUnit;
using twinrt::testing::EchoUnit;
using twinrt::testing::FailingUnit;

namespace {

struct CounterEcho {
  sim::UnitRegistry units;
  sim::WiringPlan plan;
  CounterEcho() {
    units.emplace<CounterUnit>("counter");
    units.emplace<EchoUnit>("echo");
    plan = sim::validate_wiring(units, {parse_connection("counter.out -> echo.in")});
  }
  std::int64_t echo() const { return units.find("echo")->output("out").as_integer(); }
};

// Hand-written table for the counter -> echo network: step k (1-based).
// Jacobi: echo saw the counter value exchanged after step k-1.
// Sequential: echo saw the counter value produced earlier in step k.
constexpr std::int64_t kJacobiEcho[10] = {0, 1, 2, 3, 4, 5, 6, 7, 8, 9};
constexpr std::int64_t kSequentialEcho[10] = {1, 2, 3, 4, 5, 6, 7, 8, 9, 10};

} // namespace

TEST_CASE("jacobi_step on counter->echo matches the oracle table") {
  CounterEcho net;
  for (int k = 0; k < 10; ++k) {
    auto report = jacobi_step(net.units, net.plan, 0.1);
    CHECK(report.units_stepped == 2);
    CHECK(net.echo() == kJacobiEcho[k]);
  }
}

TEST_CASE("sequential_step on counter->echo matches the oracle table") {
  CounterEcho net;
  for (int k = 0; k < 10; ++k) {
    sequential_step({"counter", "echo"}, net.units, net.plan, 0.1);
    CHECK(net.echo() == kSequentialEcho[k]);
  }
}

TEST_CASE("engines coincide for a single unit") {
  sim::UnitRegistry a, b;
  a.emplace<CounterUnit>("c");
  b.emplace<CounterUnit>("c");
  auto pa = sim::validate_wiring(a, {});
  auto pb = sim::validate_wiring(b, {});
  for (int k = 0; k < 5; ++k) {
    jacobi_step(a, pa, 0.1);
    sequential_step({"c"}, b, pb, 0.1);
    CHECK(a.find("c")->output("out") == b.find("c")->output("out"));
  }
}

TEST_CASE("zero units and empty orders") {
  sim::UnitRegistry units;
  auto plan = sim::validate_wiring(units, {});
  auto report = jacobi_step(units, plan, 0.1);
  CHECK(report.units_stepped == 0);
  CHECK(report.failures.empty());
  CHECK_THROWS_AS(sequential_step({}, units, plan, 0.1), EmptyOrderError);
  CHECK_THROWS_AS(SequentialEngine({}, units), EmptyOrderError);
}

TEST_CASE("halted unit among three does not advance") {
  sim::UnitRegistry units;
  units.emplace<CounterUnit>("a");
  units.emplace<CounterUnit>("b");
  units.emplace<CounterUnit>("c");
  auto plan = sim::validate_wiring(units, {});
  units.at("b").halt();
  auto report = jacobi_step(units, plan, 0.1);
  CHECK(report.units_stepped == 2);
  CHECK(units.at("a").local_time() == doctest::Approx(0.1));
  CHECK(units.at("b").local_time() == 0.0);
  CHECK(units.at("c").local_time() == doctest::Approx(0.1));
}

TEST_CASE("a failing unit is reported and halted, the rest keep stepping") {
  sim::UnitRegistry units;
  units.emplace<FailingUnit>("bad");
  units.emplace<CounterUnit>("good");
  auto plan = sim::validate_wiring(units, {});
  for (auto* engine_name : {"jacobi", "sequential"}) {
    CAPTURE(engine_name);
    auto report = std::string(engine_name) == "jacobi" ? jacobi_step(units, plan, 0.1)
                                                       : sequential_step({"bad", "good"}, units, plan, 0.1);
    CHECK(report.units_stepped == 1);
    if (std::string(engine_name) == "jacobi") {
      REQUIRE(report.failures.size() == 1);
      CHECK(report.failures[0].unit == "bad");
    } else {
      CHECK(report.failures.empty()); // already halted by the first engine
    }
    CHECK_FALSE(units.at("bad").alive());
  }
  CHECK(units.at("good").output("out").as_integer() == 2);
}

TEST_CASE("engine equivalence on random echo trees") {
  // Every echo copies its input, so sequential stepping in topological order
  // gives k everywhere after k steps, while Jacobi lags one step per edge.
  std::mt19937 rng(2024);
  for (int trial = 0; trial < 40; ++trial) {
    int n = std::uniform_int_distribution<int>(1, 8)(rng);
    std::vector<int> parent(n), depth(n);
    std::vector<sim::Connection> cs;
    auto id = [](int i) { return "e" + std::to_string(i); };
    sim::UnitRegistry seq_units, par_units;
    seq_units.emplace<CounterUnit>("root");
    par_units.emplace<CounterUnit>("root");
    std::vector<sim::UnitId> order = {"root"};
    for (int i = 0; i < n; ++i) {
      parent[i] = std::uniform_int_distribution<int>(-1, i - 1)(rng);
      depth[i] = parent[i] < 0 ? 1 : depth[parent[i]] + 1;
      seq_units.emplace<EchoUnit>(id(i));
      par_units.emplace<EchoUnit>(id(i));
      order.push_back(id(i));
      std::string src = parent[i] < 0 ? "root" : id(parent[i]);
      cs.push_back(parse_connection(src + ".out -> " + id(i) + ".in"));
    }
    auto seq_plan = sim::validate_wiring(seq_units, cs);
    auto par_plan = sim::validate_wiring(par_units, cs);
    std::vector<std::vector<std::int64_t>> seq_hist(n);
    int steps = 12;
    for (int k = 1; k <= steps; ++k) {
      sequential_step(order, seq_units, seq_plan, 0.1);
      jacobi_step(par_units, par_plan, 0.1);
      for (int i = 0; i < n; ++i) {
        auto seq_out = seq_units.at(id(i)).output("out").as_integer();
        seq_hist[i].push_back(seq_out);
        CHECK(seq_out == k);
        auto par_out = par_units.at(id(i)).output("out").as_integer();
        // an echo at depth d lags the sequential value by d steps
        int lag = depth[i];
        std::int64_t expected = k - lag >= 1 ? seq_hist[i][k - lag - 1] : 0;
        CHECK(par_out == expected);
      }
    }
  }
}

TEST_CASE("run loop: remote triggers step exactly once each") {
  std::vector<TriggerSource> sources;
  RunLoop loop([&](const StepClock&, TriggerSource s) { sources.push_back(s); }, RemoteDriven{}, 0.1);
  CHECK_FALSE(loop.poll(Micros{0}));
  for (int i = 0; i < 5; ++i) loop.push_remote_trigger();
  Micros t{0};
  while (loop.poll(t)) t += Micros{1};
  CHECK(loop.step_index() == 5);
  CHECK(loop.summary().remote_steps == 5);
  CHECK(loop.summary().local_steps == 0);
}

TEST_CASE("run loop: local fixed rate counts local steps") {
  RunLoop loop([](const StepClock&, TriggerSource) {}, local_fixed_rate(0.1), 0.1);
  Micros t{0};
  while (loop.summary().steps < 10) {
    loop.poll(t);
    t += Micros{10'000};
  }
  CHECK(loop.summary().local_steps == 10);
  CHECK(t >= Micros{900'000});
}

TEST_CASE("run loop: trigger mode switches at step boundaries") {
  std::vector<std::uint64_t> indices;
  RunLoop loop([&](const StepClock& c, TriggerSource) { indices.push_back(c.step_index); }, RemoteDriven{},
               0.1);
  for (int i = 0; i < 3; ++i) loop.push_remote_trigger();
  Micros t{0};
  while (loop.poll(t)) {
  }
  REQUIRE(loop.summary().remote_steps == 3);

  SUBCASE("remote -> local: no step lost or duplicated") {
    loop.set_trigger_mode(local_fixed_rate(0.1), t);
    for (int i = 0; i < 4; ++i) {
      CHECK(loop.poll(t));
      t += Micros{100'000};
    }
    CHECK(loop.summary().local_steps == 4);
    for (std::size_t i = 0; i < indices.size(); ++i) CHECK(indices[i] == i);
  }
  SUBCASE("switching to the current mode changes nothing") {
    loop.set_trigger_mode(local_fixed_rate(0.1), t);
    CHECK(loop.poll(t));
    auto wake = loop.next_wakeup();
    loop.set_trigger_mode(local_fixed_rate(0.1), t + Micros{50'000});
    CHECK(loop.next_wakeup() == wake);
    loop.set_trigger_mode(RemoteDriven{}, t);
    loop.set_trigger_mode(RemoteDriven{}, t);
    CHECK_FALSE(loop.poll(t + Micros{1'000'000}));
  }
  SUBCASE("local -> remote waits for the next trigger") {
    loop.set_trigger_mode(local_fixed_rate(0.1), t);
    CHECK(loop.poll(t));
    loop.set_trigger_mode(RemoteDriven{}, t);
    CHECK_FALSE(loop.poll(t + Micros{500'000}));
    loop.push_remote_trigger();
    CHECK(loop.poll(t + Micros{500'000}));
    CHECK(loop.summary().steps == 5);
  }
}

TEST_CASE("run loop: pacing spaces remote steps") {
  RunLoop loop([](const StepClock&, TriggerSource) {}, RemoteDriven{}, 0.1, Micros{100});
  loop.push_remote_trigger();
  loop.push_remote_trigger();
  CHECK(loop.poll(Micros{0}));
  CHECK_FALSE(loop.poll(Micros{50}));
  CHECK(loop.next_wakeup() == Micros{100});
  CHECK(loop.poll(Micros{100}));
}

TEST_CASE("run loop: blocking driver consumes triggers from another thread") {
  RunLoop loop([](const StepClock&, TriggerSource) {}, RemoteDriven{}, 0.1);
  std::thread feeder([&] {
    for (int i = 0; i < 5; ++i) {
      std::this_thread::sleep_for(std::chrono::milliseconds(2));
      loop.push_remote_trigger();
    }
  });
  auto summary = loop.run([](const RunSummary& s) { return s.steps >= 5; });
  feeder.join();
  CHECK(summary.remote_steps == 5);
}

TEST_CASE("run loop rejects non-positive periods") {
  CHECK_THROWS(local_fixed_rate(0.0));
  CHECK_THROWS(RunLoop([](const StepClock&, TriggerSource) {}, LocalFixedRate{Micros{0}}, 0.1));
}
