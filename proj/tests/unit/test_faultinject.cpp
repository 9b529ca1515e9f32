#include <doctest.h>

#include "test_units.hpp"
#include "twinrt/faultinject/fault.hpp"
#include "twinrt/heartbeat/heartbeat.hpp"
#include "twinrt/orchestrator/engine.hpp"

using namespace twinrt;
using namespace twinrt::fault;
using link::TwinId;

TEST_CASE("empty schedule is a no-op") {
  sim::UnitRegistry reg;
  reg.emplace<testing::CounterUnit>("A");
  FaultInjector inj(TwinId::PT, {}, reg);
  for (int s = 0; s < 10; ++s) CHECK(inj.on_step(s).empty());
  CHECK(reg.at("A").alive());
}

TEST_CASE("two specs fire exactly once each, in order") {
  sim::UnitRegistry reg;
  reg.emplace<testing::CounterUnit>("A");
  reg.emplace<testing::CounterUnit>("B");
  FaultInjector inj(TwinId::DT, {{TwinId::DT, "B", 9}, {TwinId::DT, "A", 5}}, reg);
  std::vector<std::pair<std::string, std::int64_t>> fired;
  for (int s = 0; s < 20; ++s) {
    for (const auto& f : inj.on_step(s)) {
      CHECK(f.outcome == FireOutcome::Halted);
      fired.emplace_back(f.spec.unit, f.step);
    }
  }
  CHECK(fired == std::vector<std::pair<std::string, std::int64_t>>{{"A", 5}, {"B", 9}});
  CHECK(inj.fired() == 2);
}

TEST_CASE("targets on the other twin are rejected at arm time") {
  sim::UnitRegistry reg;
  reg.emplace<testing::CounterUnit>("Heartbeat");
  CHECK_THROWS_AS(FaultInjector(TwinId::PT, {{TwinId::DT, "Heartbeat", 3}}, reg), UnknownTarget);
  CHECK_THROWS_AS(FaultInjector(TwinId::PT, {{TwinId::PT, "AccMain", 3}}, reg), UnknownTarget);

  std::vector<FaultSpec> schedule{{TwinId::DT, "Heartbeat", 3}, {TwinId::PT, "AccMain", 5}};
  CHECK(for_twin(schedule, TwinId::DT) == std::vector<FaultSpec>{{TwinId::DT, "Heartbeat", 3}});
}

TEST_CASE("second firing on one unit is AlreadyHalted") {
  sim::UnitRegistry reg;
  reg.emplace<testing::CounterUnit>("A");
  FaultSpec spec{TwinId::PT, "A", 0};
  CHECK(fire(spec, reg) == FireOutcome::Halted);
  CHECK(fire(spec, reg) == FireOutcome::AlreadyHalted);
  CHECK_FALSE(reg.at("A").alive());
}

TEST_CASE("halted unit freezes its outputs from the firing step") {
  sim::UnitRegistry reg;
  reg.emplace<testing::CounterUnit>("C");
  reg.emplace<testing::EchoUnit>("E");
  auto plan = sim::validate_wiring(reg, {sim::parse_connection("C.out -> E.in")});
  orch::SequentialEngine engine(plan.unit_order(), reg);
  FaultInjector inj(TwinId::PT, {{TwinId::PT, "C", 3}}, reg);
  std::vector<std::int64_t> echo;
  for (int s = 0; s < 8; ++s) {
    inj.on_step(s);
    engine.step(reg, plan, 0.1);
    echo.push_back(reg.at("E").output("out").as_integer());
  }
  // steps 0..2 run the counter, afterwards it stays at 3
  CHECK(echo == std::vector<std::int64_t>{1, 2, 3, 3, 3, 3, 3, 3});
}

TEST_CASE("halted heartbeat publishes nothing from the firing step") {
  auto bus = link::InMemoryBus::create();
  auto dt = bus->connect("dt");
  auto pt = bus->connect("pt");
  pt->subscribe(link::topics::dt_heartbeat);
  link::Outbox outbox(*dt, TwinId::DT, {});
  sim::UnitRegistry reg;
  reg.emplace<hb::HeartbeatUnit>("Heartbeat", outbox);
  FaultInjector inj(TwinId::DT, {{TwinId::DT, "Heartbeat", 150}}, reg);
  for (std::int64_t s = 0; s < 200; ++s) {
    outbox.set_step(s);
    inj.on_step(s);
    reg.at("Heartbeat").step(0.1);
  }
  auto got = pt->drain();
  REQUIRE(got.size() == 150);
  for (const auto& d : got) CHECK(d.envelope.sim_step < 150);
  CHECK(hb::heartbeat_counter(got.back().envelope) == 150);
}

TEST_CASE("armed schedule that never fires leaves the run untouched") {
  auto run = [](bool armed) {
    sim::UnitRegistry reg;
    reg.emplace<testing::CounterUnit>("C");
    reg.emplace<testing::EchoUnit>("E");
    auto plan = sim::validate_wiring(reg, {sim::parse_connection("C.out -> E.in")});
    orch::JacobiEngine engine;
    std::optional<FaultInjector> inj;
    if (armed) inj.emplace(TwinId::PT, std::vector<FaultSpec>{{TwinId::PT, "C", 1000}}, reg);
    std::vector<std::int64_t> out;
    for (int s = 0; s < 30; ++s) {
      if (inj) inj->on_step(s);
      engine.step(reg, plan, 0.1);
      out.push_back(reg.at("E").output("out").as_integer());
    }
    return out;
  };
  CHECK(run(true) == run(false));
}
