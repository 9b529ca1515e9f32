#include "doctest.h"
#include "test_units.hpp"

#include "twinrt/orchestrator/engine.hpp"
#include "twinrt/simcore/wiring.hpp"

#include <cmath>
#include <limits>
#include <random>

using namespace twinrt;
using namespace twinrt::sim;
using twinrt::testing::BoolSink;
using twinrt::testing::CounterUnit;
using twinrt::testing::EchoUnit;
using twinrt::testing::RealSource;

namespace {

WiringError::Code wiring_code(const UnitRegistry& units, const std::vector<Connection>& cs) {
  try {
    validate_wiring(units, cs);
  } catch (const WiringError& e) {
    return e.code();
  }
  FAIL("expected a wiring error");
  return WiringError::Code::UnknownUnit;
}

} // namespace

TEST_CASE("signal values keep their tag") {
  SignalValue v(2.5);
  CHECK(v.kind() == Kind::Real);
  CHECK_THROWS_AS(v.as_integer(), KindError);
  CHECK(SignalValue(std::int64_t{7}).kind() == Kind::Integer);
  CHECK(SignalValue(true).kind() == Kind::Boolean);
  CHECK(SignalValue("x").kind() == Kind::Text);
  CHECK_FALSE(SignalValue(0.0) == SignalValue(-0.0));
  CHECK_FALSE(SignalValue(1.0) == SignalValue(std::int64_t{1}));
  double nan = std::numeric_limits<double>::quiet_NaN();
  CHECK(SignalValue(nan) == SignalValue(nan));
}

TEST_CASE("input assignment never changes a port's kind") {
  EchoUnit echo("B");
  CHECK_THROWS_AS(echo.set_input("in", SignalValue(1.0)), KindError);
  echo.set_input("in", SignalValue(std::int64_t{3}));
  CHECK(echo.input("in").as_integer() == 3);
}

TEST_CASE("connection text parsing") {
  auto c = parse_connection(" Sensors.laser_front ->  AccMain.laser_front ");
  CHECK(c.src == PortRef{"Sensors", "laser_front"});
  CHECK(c.dst == PortRef{"AccMain", "laser_front"});
  CHECK(to_string(c) == "Sensors.laser_front -> AccMain.laser_front");
  CHECK_THROWS(parse_connection("A.x B.y"));
  CHECK_THROWS(parse_connection("A -> B.y"));
}

TEST_CASE("validate_wiring") {
  SUBCASE("empty registry, no connections gives an empty plan") {
    UnitRegistry units;
    auto plan = validate_wiring(units, {});
    CHECK(plan.empty());
    CHECK(plan.serialize().empty());
  }

  UnitRegistry units;
  units.emplace<CounterUnit>("A");
  units.emplace<CounterUnit>("A2");
  units.emplace<EchoUnit>("B");
  units.emplace<RealSource>("R", 1.0);
  units.emplace<BoolSink>("S");

  SUBCASE("two connections into one input") {
    CHECK(wiring_code(units, {parse_connection("A.out -> B.in"), parse_connection("A2.out -> B.in")}) ==
          WiringError::Code::DuplicateInput);
  }
  SUBCASE("real into boolean") {
    CHECK(wiring_code(units, {parse_connection("R.out -> S.in")}) == WiringError::Code::KindMismatch);
  }
  SUBCASE("unknown unit and port") {
    CHECK(wiring_code(units, {parse_connection("Z.out -> B.in")}) == WiringError::Code::UnknownUnit);
    CHECK(wiring_code(units, {parse_connection("A.nope -> B.in")}) == WiringError::Code::UnknownPort);
    // direction matters: "in" is not an output
    CHECK(wiring_code(units, {parse_connection("B.in -> B.in")}) == WiringError::Code::UnknownPort);
  }
  SUBCASE("error names the offending connection") {
    try {
      validate_wiring(units, {parse_connection("A.out -> B.in"), parse_connection("R.out -> S.in")});
      FAIL("expected KindMismatch");
    } catch (const WiringError& e) {
      CHECK(e.connection() == parse_connection("R.out -> S.in"));
      CHECK(std::string(e.what()).find("R.out -> S.in") != std::string::npos);
    }
  }
}

TEST_CASE("plans are deterministic and topologically ordered, cycles included") {
  auto build = [] {
    auto units = std::make_unique<UnitRegistry>();
    units->emplace<EchoUnit>("c");
    units->emplace<EchoUnit>("a");
    units->emplace<EchoUnit>("b");
    units->emplace<CounterUnit>("src");
    return units;
  };
  std::vector<Connection> cs = {parse_connection("b.out -> c.in"), parse_connection("src.out -> a.in"),
                                parse_connection("a.out -> b.in")};
  auto u1 = build();
  auto u2 = build();
  auto p1 = validate_wiring(*u1, cs);
  auto p2 = validate_wiring(*u2, cs);
  CHECK(p1.serialize() == p2.serialize());
  CHECK(p1.serialize() == "src.out -> a.in\na.out -> b.in\nb.out -> c.in\n");

  // a <-> b cycle: broken at the lexicographically smallest id
  std::vector<Connection> cyc = {parse_connection("b.out -> a.in"), parse_connection("a.out -> b.in")};
  auto pc = validate_wiring(*u1, cyc);
  CHECK(pc.serialize() == "a.out -> b.in\nb.out -> a.in\n");
  CHECK(pc.serialize() == validate_wiring(*u2, cyc).serialize());
}

TEST_CASE("propagate") {
  UnitRegistry units;
  auto& a = units.emplace<CounterUnit>("A");
  auto& b = units.emplace<EchoUnit>("B");

  SUBCASE("no connections leaves inputs alone") {
    b.set_input("in", SignalValue(std::int64_t{5}));
    propagate(validate_wiring(units, {}), units);
    CHECK(b.input("in").as_integer() == 5);
  }
  SUBCASE("single copy") {
    auto plan = validate_wiring(units, {parse_connection("A.out -> B.in")});
    for (int i = 0; i < 7; ++i) a.step(0.1);
    propagate(plan, units);
    CHECK(b.input("in").as_integer() == 7);
  }
  SUBCASE("idempotent without an intervening step") {
    auto plan = validate_wiring(units, {parse_connection("A.out -> B.in")});
    a.step(0.1);
    propagate(plan, units);
    auto first = b.input("in");
    propagate(plan, units);
    CHECK(b.input("in") == first);
  }
}

TEST_CASE("three-unit chain reads outputs from before propagation") {
  // Hand trace of Jacobi stepping on A(counter) -> B(echo) -> C(echo):
  //   step 1: A.out=1, B.out=0, C.out=0; exchange -> B.in=1, C.in=0
  //   step 2: A.out=2, B.out=1, C.out=0; exchange -> B.in=2, C.in=1
  UnitRegistry units;
  auto& a = units.emplace<CounterUnit>("A");
  auto& b = units.emplace<EchoUnit>("B");
  auto& c = units.emplace<EchoUnit>("C");
  auto plan = validate_wiring(units, {parse_connection("A.out -> B.in"), parse_connection("B.out -> C.in")});

  for (auto* u : std::initializer_list<StepUnit*>{&a, &b, &c}) u->step(0.1);
  propagate(plan, units);
  CHECK(b.input("in").as_integer() == 1);
  CHECK(c.input("in").as_integer() == 0);

  for (auto* u : std::initializer_list<StepUnit*>{&a, &b, &c}) u->step(0.1);
  propagate(plan, units);
  CHECK(b.input("in").as_integer() == 2);
  CHECK(c.input("in").as_integer() == 1);
}

TEST_CASE("halted units freeze outputs and local time") {
  std::mt19937 rng(7);
  for (int trial = 0; trial < 50; ++trial) {
    CounterUnit a("A");
    int before = std::uniform_int_distribution<int>(0, 20)(rng);
    for (int i = 0; i < before; ++i) a.step(0.1);
    a.halt();
    auto frozen = a.output("out");
    double t = a.local_time();
    int after = std::uniform_int_distribution<int>(1, 20)(rng);
    for (int i = 0; i < after; ++i) {
      a.step(0.1);
      CHECK(a.output("out") == frozen);
      CHECK(a.local_time() == t);
    }
  }
}

TEST_CASE("a step advances local time by exactly dt") {
  CounterUnit a("A");
  a.step(0.25);
  CHECK(a.local_time() == 0.25);
  a.step(0.5);
  CHECK(a.local_time() == 0.75);
}
