#include <doctest.h>

#include "twinrt/twinlink/bridge.hpp"
#include "twinrt/twinlink/frame.hpp"
#include "twinrt/twinlink/tcp.hpp"

#include <arpa/inet.h>
#include <netinet/in.h>
#include <sys/socket.h>
#include <unistd.h>

#include <bit>
#include <cmath>
#include <limits>
#include <random>
#include <thread>

using namespace twinrt;
using namespace twinrt::link;
using namespace std::chrono_literals;

namespace {

Envelope make_envelope(std::uint64_t seq, Payload payload = {}) {
  Envelope e;
  e.source = TwinId::PT;
  e.seq = seq;
  e.sim_step = static_cast<std::int64_t>(seq) - 1;
  e.wallclock = "2024-01-01T08:36:00.000Z";
  e.payload = std::move(payload);
  return e;
}

// Collects deliveries until `count` have arrived or the deadline passes.
std::vector<Delivery> collect(Transport& t, std::size_t count, std::chrono::milliseconds limit = 5000ms) {
  std::vector<Delivery> out;
  auto deadline = std::chrono::steady_clock::now() + limit;
  while (out.size() < count && std::chrono::steady_clock::now() < deadline) {
    t.wait_for_data(20ms);
    for (auto& d : t.drain()) out.push_back(std::move(d));
  }
  return out;
}

LinkConfig sensor_link() {
  LinkConfig cfg;
  for (const char* s : {"laser_front", "us_left", "us_right"}) {
    cfg.outgoing.push_back({s, sim::Kind::Real, topics::pt_out});
  }
  cfg.outgoing.push_back({"user_cmd", sim::Kind::Boolean, topics::pt_out});
  cfg.incoming.push_back({topics::dt_out, "dt_target_accel", "dt_target_accel", sim::Kind::Real});
  cfg.incoming.push_back({topics::dt_out, "dt_target_vel", "dt_target_vel", sim::Kind::Real, HoldPolicy::ResetToDefault});
  cfg.incoming.push_back({topics::dt_out, kSimStepField, "dt_step", sim::Kind::Integer});
  return cfg;
}

} // namespace

TEST_CASE("ping encodes to the smallest frame") {
  CHECK(encode_frame(frame::Ping{}) == "{\"type\":\"ping\"}\n");
  CHECK(std::holds_alternative<frame::Ping>(parse_frame("{\"type\":\"ping\"}\n", FrameOrigin::Client)));
  CHECK(std::holds_alternative<frame::Pong>(parse_frame("{\"type\":\"pong\"}", FrameOrigin::Broker)));
}

TEST_CASE("publish with four payload entries round-trips") {
  frame::Publish p{topics::pt_out, make_envelope(7, {{"laser_front", 2.5},
                                                     {"count", std::int64_t{-3}},
                                                     {"user_cmd", true},
                                                     {"label", std::string("front \"x\"")}})};
  auto bytes = encode_frame(p);
  CHECK(bytes.back() == '\n');
  CHECK(bytes.find('\n') == bytes.size() - 1);
  auto back = parse_frame(bytes, FrameOrigin::Client);
  REQUIRE(std::holds_alternative<frame::Publish>(back));
  CHECK(std::get<frame::Publish>(back) == p);
  CHECK(std::get<frame::Publish>(back).envelope.payload.at("count").kind() == sim::Kind::Integer);
}

TEST_CASE("reals keep their decimal point and exact bits") {
  auto bytes = encode_frame(frame::Deliver{topics::dt_out, make_envelope(1, {{"v", 2.0}, {"w", 2.5}})});
  CHECK(bytes.find("\"v\":2.0") != std::string::npos);
  CHECK(bytes.find("\"w\":2.5") != std::string::npos);

  std::mt19937_64 rng(12345);
  std::vector<double> samples = {0.0, -0.0, 1.0, 0.1, 1e308, 5e-324, -2.2250738585072014e-308,
                                 std::numeric_limits<double>::max(), std::numeric_limits<double>::lowest(),
                                 std::numeric_limits<double>::infinity(),
                                 -std::numeric_limits<double>::infinity()};
  for (int i = 0; i < 5000; ++i) {
    double d = std::bit_cast<double>(rng());
    if (!std::isnan(d)) samples.push_back(d);
  }
  for (double d : samples) {
    auto back = parse_frame(encode_frame(frame::Deliver{topics::dt_out, make_envelope(1, {{"x", d}})}),
                            FrameOrigin::Broker);
    const auto& got = std::get<frame::Deliver>(back).envelope.payload.at("x");
    REQUIRE(got.kind() == sim::Kind::Real);
    CHECK(std::bit_cast<std::uint64_t>(got.as_real()) == std::bit_cast<std::uint64_t>(d));
  }
  auto nan_back = parse_frame(
      encode_frame(frame::Deliver{topics::dt_out, make_envelope(1, {{"x", std::nan("")}})}), FrameOrigin::Broker);
  CHECK(std::isnan(std::get<frame::Deliver>(nan_back).envelope.payload.at("x").as_real()));
}

TEST_CASE("malformed frames are rejected") {
  CHECK_THROWS_AS(parse_frame("\x01\x02garbage", FrameOrigin::Client), MalformedFrame);
  CHECK_THROWS_AS(parse_frame("{\"type\":\"shout\"}", FrameOrigin::Client), MalformedFrame);
  CHECK_THROWS_AS(parse_frame("[1,2]", FrameOrigin::Client), MalformedFrame);
  CHECK_THROWS_AS(parse_frame("{\"type\":\"subscribe\",\"topic\":\"Bad Topic\"}", FrameOrigin::Client), MalformedFrame);
  CHECK_THROWS_AS(parse_frame("{\"type\":\"ping\",\"type\":\"pong\"}", FrameOrigin::Client), MalformedFrame);

  auto deliver = encode_frame(frame::Deliver{topics::pt_out, make_envelope(1)});
  CHECK_THROWS_AS(parse_frame(deliver, FrameOrigin::Client), MalformedFrame);
  CHECK_NOTHROW(parse_frame(deliver, FrameOrigin::Broker));
  auto publish = encode_frame(frame::Publish{topics::pt_out, make_envelope(1)});
  CHECK_THROWS_AS(parse_frame(publish, FrameOrigin::Broker), MalformedFrame);
  auto sub = encode_frame(frame::Subscribe{topics::pt_out});
  CHECK_THROWS_AS(parse_frame(sub, FrameOrigin::Broker), MalformedFrame);

  // duplicate payload names
  CHECK_THROWS_AS(parse_frame("{\"type\":\"publish\",\"topic\":\"pt.out\",\"envelope\":{\"version\":1,"
                              "\"source\":\"PT\",\"seq\":1,\"sim_step\":0,\"wallclock\":\"\","
                              "\"payload\":{\"a\":1.0,\"a\":2.0}}}",
                              FrameOrigin::Client),
                  MalformedFrame);
}

TEST_CASE("topic names are restricted") {
  CHECK(valid_topic_name("pt.heartbeat"));
  CHECK(valid_topic_name("a-b_c.9"));
  CHECK_FALSE(valid_topic_name(""));
  CHECK_FALSE(valid_topic_name("PT.out"));
  CHECK_FALSE(valid_topic_name("pt out"));
  CHECK_THROWS(Topic(""));
}

TEST_CASE("in-memory bus routes to subscribers only") {
  auto bus = InMemoryBus::create();
  auto a = bus->connect("a");
  auto b = bus->connect("b");
  auto c = bus->connect("c");
  b->subscribe(topics::pt_out);
  c->subscribe(topics::dt_out);
  Outbox out(*a, TwinId::PT, {});
  CHECK(out.publish(topics::pt_out, {{"x", 1.0}}));
  CHECK(out.publish(topics::pt_out, {{"x", 2.0}}));
  auto got = b->drain();
  REQUIRE(got.size() == 2);
  CHECK(got[0].envelope.seq == 1);
  CHECK(got[1].envelope.seq == 2);
  CHECK(c->drain().empty());

  bus->set_isolated("b", true);
  out.publish(topics::pt_out, {{"x", 3.0}});
  CHECK(b->drain().empty());
  bus->set_isolated("b", false);
  out.publish(topics::pt_out, {{"x", 4.0}});
  CHECK(b->drain().size() == 1);

  a->set_link_up(false);
  CHECK_FALSE(out.publish(topics::pt_out, {}));
}

TEST_CASE("broker delivers in order to every subscriber") {
  Broker broker(NetEndpoint{"127.0.0.1", 0});
  broker.start();
  auto pub = TcpTransport::connect(broker.endpoint());
  auto s1 = TcpTransport::connect(broker.endpoint());
  auto s2 = TcpTransport::connect(broker.endpoint());
  s1->subscribe(topics::pt_out);
  s2->subscribe(topics::pt_out);
  REQUIRE(s1->ping(2000ms));
  REQUIRE(s2->ping(2000ms));

  for (std::uint64_t i = 1; i <= 100; ++i) REQUIRE(pub->publish(topics::pt_out, make_envelope(i)));
  for (auto* s : {s1.get(), s2.get()}) {
    auto got = collect(*s, 100);
    REQUIRE(got.size() == 100);
    for (std::size_t i = 0; i < got.size(); ++i) CHECK(got[i].envelope.seq == i + 1);
  }
}

TEST_CASE("broker keeps per-topic FIFO under load") {
  Broker broker(NetEndpoint{"127.0.0.1", 0});
  broker.start();
  auto pub = TcpTransport::connect(broker.endpoint());
  auto sub = TcpTransport::connect(broker.endpoint());
  sub->subscribe(topics::pt_out);
  sub->subscribe(topics::pt_heartbeat);
  REQUIRE(sub->ping(2000ms));
  for (std::uint64_t i = 1; i <= 1000; ++i) {
    pub->publish(topics::pt_out, make_envelope(i, {{"laser_front", 0.001 * static_cast<double>(i)}}));
    if (i % 3 == 0) pub->publish(topics::pt_heartbeat, make_envelope(i / 3));
  }
  auto got = collect(*sub, 1333);
  REQUIRE(got.size() == 1333);
  std::map<Topic, std::uint64_t> last;
  for (const auto& d : got) {
    CHECK(d.envelope.seq > last[d.topic]);
    last[d.topic] = d.envelope.seq;
  }
}

TEST_CASE("late subscriber only sees later messages") {
  Broker broker(NetEndpoint{"127.0.0.1", 0});
  broker.start();
  auto pub = TcpTransport::connect(broker.endpoint());
  auto late = TcpTransport::connect(broker.endpoint());
  for (std::uint64_t i = 1; i <= 50; ++i) pub->publish(topics::pt_out, make_envelope(i));
  REQUIRE(pub->ping(2000ms));
  late->subscribe(topics::pt_out);
  REQUIRE(late->ping(2000ms));
  for (std::uint64_t i = 51; i <= 100; ++i) pub->publish(topics::pt_out, make_envelope(i));
  auto got = collect(*late, 50);
  REQUIRE(got.size() == 50);
  CHECK(got.front().envelope.seq == 51);
  CHECK(got.back().envelope.seq == 100);
  std::this_thread::sleep_for(50ms);
  CHECK(late->drain().empty());
}

TEST_CASE("publishing without subscribers is harmless") {
  Broker broker(NetEndpoint{"127.0.0.1", 0});
  broker.start();
  auto pub = TcpTransport::connect(broker.endpoint());
  for (std::uint64_t i = 1; i <= 10; ++i) CHECK(pub->publish(topics::dt_out, make_envelope(i)));
  CHECK(pub->ping(2000ms));
  CHECK(pub->link_up());
}

TEST_CASE("broker survives malformed input and drops closed clients") {
  Broker broker(NetEndpoint{"127.0.0.1", 0});
  broker.start();

  int fd = ::socket(AF_INET, SOCK_STREAM, 0);
  sockaddr_in addr{};
  addr.sin_family = AF_INET;
  addr.sin_port = htons(broker.port());
  ::inet_pton(AF_INET, "127.0.0.1", &addr.sin_addr);
  REQUIRE(::connect(fd, reinterpret_cast<sockaddr*>(&addr), sizeof addr) == 0);
  std::string junk = "this is not json\n{\"type\":\"deliver\"}\n{\"type\":\"ping\"}\n";
  REQUIRE(::write(fd, junk.data(), junk.size()) == static_cast<ssize_t>(junk.size()));
  char buf[64] = {};
  auto n = ::read(fd, buf, sizeof buf - 1);
  CHECK(std::string(buf, n > 0 ? n : 0) == "{\"type\":\"pong\"}\n");
  CHECK(broker.malformed_frames() == 2);

  auto sub = TcpTransport::connect(broker.endpoint());
  sub->subscribe(topics::pt_out);
  REQUIRE(sub->ping(2000ms));
  sub->close();
  ::close(fd);

  auto pub = TcpTransport::connect(broker.endpoint());
  REQUIRE(pub->ping(2000ms));
  auto deadline = std::chrono::steady_clock::now() + 2s;
  while (broker.connection_count() > 1 && std::chrono::steady_clock::now() < deadline) {
    pub->publish(topics::pt_out, make_envelope(1));
    std::this_thread::sleep_for(10ms);
  }
  CHECK(broker.connection_count() == 1);
  CHECK(pub->ping(2000ms));
}

TEST_CASE("stalled peer bounds publish by the write timeout") {
  // A listener that accepts and never reads.
  int srv = ::socket(AF_INET, SOCK_STREAM, 0);
  sockaddr_in addr{};
  addr.sin_family = AF_INET;
  addr.sin_port = 0;
  ::inet_pton(AF_INET, "127.0.0.1", &addr.sin_addr);
  REQUIRE(::bind(srv, reinterpret_cast<sockaddr*>(&addr), sizeof addr) == 0);
  REQUIRE(::listen(srv, 1) == 0);
  socklen_t len = sizeof addr;
  ::getsockname(srv, reinterpret_cast<sockaddr*>(&addr), &len);

  TcpTransport::Options opts;
  opts.write_timeout = 100ms;
  auto t = TcpTransport::connect(NetEndpoint{"127.0.0.1", ntohs(addr.sin_port)}, opts);
  int peer = ::accept(srv, nullptr, nullptr);

  Payload big{{"blob", std::string(64 * 1024, 'x')}};
  bool failed = false;
  std::chrono::steady_clock::duration worst{};
  for (int i = 0; i < 400 && !failed; ++i) {
    auto t0 = std::chrono::steady_clock::now();
    failed = !t->publish(topics::pt_out, make_envelope(static_cast<std::uint64_t>(i + 1), big));
    worst = std::max(worst, std::chrono::steady_clock::now() - t0);
  }
  CHECK(failed);
  CHECK_FALSE(t->link_up());
  CHECK(worst < 1s);
  auto t0 = std::chrono::steady_clock::now();
  CHECK_FALSE(t->publish(topics::pt_out, make_envelope(999)));
  CHECK(std::chrono::steady_clock::now() - t0 < 50ms);
  ::close(peer);
  ::close(srv);
}

TEST_CASE("endpoint parsing") {
  auto e = parse_endpoint("127.0.0.1:5672");
  CHECK(e.host == "127.0.0.1");
  CHECK(e.port == 5672);
  CHECK(parse_endpoint("localhost:0").port == 0);
  CHECK_THROWS(parse_endpoint("nohost"));
  CHECK_THROWS(parse_endpoint("h:70000"));
  CHECK_THROWS(parse_endpoint("h:abc"));
}

TEST_CASE("link config round-trips and rejects shared in-ports") {
  auto cfg = sensor_link();
  auto back = LinkConfig::from_json(cfg.to_json());
  CHECK(back.to_json() == cfg.to_json());
  CHECK(back.incoming[1].hold == HoldPolicy::ResetToDefault);
  cfg.incoming.push_back({topics::dt_heartbeat, "counter", "dt_target_accel", sim::Kind::Real});
  CHECK_THROWS_AS(cfg.validate(), std::invalid_argument);
}

TEST_CASE("bridge publishes one envelope with exactly the configured names") {
  auto bus = InMemoryBus::create();
  auto pt = bus->connect("pt");
  auto dt = bus->connect("dt");
  dt->subscribe(topics::pt_out);
  Outbox outbox(*pt, TwinId::PT, [] { return std::string("t"); });
  BridgeUnit bridge("Bridge", sensor_link(), outbox);

  bridge.set_input("laser_front", 0.3);
  bridge.set_input("user_cmd", true);
  outbox.set_step(4);
  bridge.step(0.1);
  auto got = dt->drain();
  REQUIRE(got.size() == 1);
  CHECK(got[0].topic == topics::pt_out);
  CHECK(got[0].envelope.sim_step == 4);
  std::vector<std::string> names;
  for (const auto& [k, v] : got[0].envelope.payload) names.push_back(k);
  CHECK(names == std::vector<std::string>{"laser_front", "us_left", "us_right", "user_cmd"});
  CHECK(got[0].envelope.payload.at("laser_front").as_real() == 0.3);
  CHECK(got[0].envelope.payload.at("user_cmd").as_boolean());
}

TEST_CASE("bridge holds values and tracks age") {
  auto bus = InMemoryBus::create();
  auto pt = bus->connect("pt");
  Outbox outbox(*pt, TwinId::PT, {});
  BridgeUnit bridge("Bridge", sensor_link(), outbox);

  bridge.step(0.1);
  CHECK(bridge.output("dt_target_accel_age").as_integer() == kNeverReceived);
  CHECK(bridge.output("dt_target_accel").as_real() == 0.0);

  Envelope e = make_envelope(1, {{"dt_target_accel", -1.5}, {"dt_target_vel", 0.5}});
  e.sim_step = 17;
  bridge.ingest({topics::dt_out, e});
  bridge.step(0.1);
  CHECK(bridge.output("dt_target_accel").as_real() == -1.5);
  CHECK(bridge.output("dt_step").as_integer() == 17);
  CHECK(bridge.output("dt_target_accel_age").as_integer() == 0);

  for (int i = 1; i <= 3; ++i) {
    bridge.step(0.1);
    CHECK(bridge.output("dt_target_accel").as_real() == -1.5);
    CHECK(bridge.output("dt_step").as_integer() == 17);
    CHECK(bridge.output("dt_target_accel_age").as_integer() == i);
    CHECK(bridge.output("dt_target_vel").as_real() == 0.0); // reset policy
  }
}

TEST_CASE("bridge keeps the higher seq within one step window") {
  auto bus = InMemoryBus::create();
  auto pt = bus->connect("pt");
  Outbox outbox(*pt, TwinId::PT, {});
  BridgeUnit bridge("Bridge", sensor_link(), outbox);

  bridge.ingest({topics::dt_out, make_envelope(5, {{"dt_target_accel", 5.0}})});
  bridge.ingest({topics::dt_out, make_envelope(3, {{"dt_target_accel", 3.0}})});
  bridge.step(0.1);
  CHECK(bridge.output("dt_target_accel").as_real() == 5.0);

  bridge.ingest({topics::dt_out, make_envelope(6, {{"dt_target_accel", 6.0}})});
  bridge.ingest({topics::dt_out, make_envelope(7, {{"dt_target_accel", 7.0}})});
  bridge.step(0.1);
  CHECK(bridge.output("dt_target_accel").as_real() == 7.0);
}

TEST_CASE("bridge reports link down and keeps stepping") {
  auto bus = InMemoryBus::create();
  auto pt = bus->connect("pt");
  Outbox outbox(*pt, TwinId::PT, {});
  BridgeUnit bridge("Bridge", sensor_link(), outbox);
  pt->set_link_up(false);
  bridge.step(0.1);
  CHECK(bridge.link_down());
  CHECK(bridge.local_time() == doctest::Approx(0.1));
  pt->set_link_up(true);
  bridge.step(0.1);
  CHECK_FALSE(bridge.link_down());
}

TEST_CASE("in-memory and tcp transports carry identical envelopes") {
  Broker broker(NetEndpoint{"127.0.0.1", 0});
  broker.start();
  auto tcp_pub = TcpTransport::connect(broker.endpoint());
  auto tcp_sub = TcpTransport::connect(broker.endpoint());
  tcp_sub->subscribe(topics::pt_out);
  REQUIRE(tcp_sub->ping(2000ms));

  auto bus = InMemoryBus::create();
  auto mem_pub = bus->connect("p");
  auto mem_sub = bus->connect("s");
  mem_sub->subscribe(topics::pt_out);

  Outbox a(*tcp_pub, TwinId::PT, [] { return std::string("w"); });
  Outbox b(*mem_pub, TwinId::PT, [] { return std::string("w"); });
  std::mt19937_64 rng(7);
  std::uniform_real_distribution<double> u(-10, 10);
  for (int i = 0; i < 200; ++i) {
    Payload p{{"laser_front", u(rng)}, {"us_left", u(rng)}, {"user_cmd", i % 2 == 0}};
    a.set_step(i);
    b.set_step(i);
    a.publish(topics::pt_out, p);
    b.publish(topics::pt_out, p);
  }
  auto via_tcp = collect(*tcp_sub, 200);
  auto via_mem = mem_sub->drain();
  REQUIRE(via_tcp.size() == 200);
  REQUIRE(via_mem.size() == 200);
  for (std::size_t i = 0; i < 200; ++i) {
    CHECK(via_tcp[i].envelope == via_mem[i].envelope);
  }
}
