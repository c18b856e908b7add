#include <doctest.h>

#include <chrono>
#include <random>
#include <set>

#include "plantbot/bus.hpp"
#include "plantbot/osc_bridge.hpp"
#include "support.hpp"

using namespace plantbot;
using namespace std::chrono_literals;

namespace {

std::shared_ptr<Inbox> join(MessageBus& bus, const std::string& id, const std::string& pattern) {
  bus.register_agent(id);
  return bus.subscribe(id, pattern);
}

}  // namespace

TEST_CASE("topic grammar") {
  CHECK(topic::valid("/plantbot/sensor/out"));
  CHECK(topic::valid("/plantbot/action_1/in"));
  CHECK_FALSE(topic::valid("/plantbot/Sensor/out"));
  CHECK_FALSE(topic::valid("/plantbot/sensor/up"));
  CHECK_FALSE(topic::valid("/plantbot/sensor"));
  CHECK_FALSE(topic::valid("/other/sensor/out"));
  CHECK(topic::name_of("/plantbot/vision/out") == "vision");
  CHECK(topic::name_of("junk").empty());
}

TEST_CASE("wildcard pattern /plantbot/*/out matches exactly the out topics") {
  const std::vector<std::string> names = {"sensor", "vision", "chat", "action1", "action2", "human"};
  for (const auto& n : names) {
    CHECK(topic::matches("/plantbot/*/out", topic::out(n)));
    CHECK_FALSE(topic::matches("/plantbot/*/out", topic::in(n)));
  }
  CHECK(topic::matches("/plantbot/*/*", "/plantbot/chat/in"));
  CHECK_FALSE(topic::matches("/plantbot/*", "/plantbot/chat/in"));
  CHECK_FALSE(topic::valid_pattern("/plantbot/s*/out"));
}

TEST_CASE("standard route table") {
  const auto rt = RouteTable::standard();
  CHECK(rt.allows("/plantbot/sensor/out", "chat"));
  CHECK(rt.allows("/plantbot/vision/out", "chat"));
  CHECK(rt.allows("/plantbot/human/in", "chat"));
  CHECK(rt.allows("/plantbot/chat/out", "action1"));
  CHECK(rt.allows("/plantbot/chat/out", "action2"));
  CHECK(rt.allows("/plantbot/chat/out", "speaker"));
  CHECK(rt.allows("/plantbot/action1/out", "action2"));
  CHECK(rt.allows("/plantbot/action2/out", "world"));
  CHECK_FALSE(rt.allows("/plantbot/sensor/out", "action1"));
  CHECK_FALSE(rt.allows("/plantbot/vision/out", "action2"));
}

TEST_CASE("publish delivery counts") {
  MessageBus bus(RouteTable::standard());
  auto chat = join(bus, "chat", topic::out("sensor"));

  SUBCASE("sensor output reaches chat only") {
    CHECK(bus.publish("sensor", topic::out("sensor"), "The soil is dry.", 0) == 1);
    const auto env = chat->try_pop();
    REQUIRE(env);
    CHECK(env->payload == "The soil is dry.");
    CHECK(env->source == "sensor");
  }
  SUBCASE("no subscribers") { CHECK(bus.publish("vision", topic::out("vision"), "x", 0) == 0); }
  SUBCASE("three publishes arrive in seq order") {
    for (int i = 0; i < 3; ++i) bus.publish("sensor", topic::out("sensor"), std::to_string(i), i);
    std::uint64_t last = 0;
    for (int i = 0; i < 3; ++i) {
      const auto env = chat->try_pop();
      REQUIRE(env);
      CHECK(env->payload == std::to_string(i));
      CHECK(env->seq > last);
      last = env->seq;
    }
  }
  SUBCASE("unsubscribe") {
    bus.unsubscribe("chat", topic::out("sensor"));
    CHECK(bus.publish("sensor", topic::out("sensor"), "x", 0) == 0);
    CHECK_FALSE(chat->try_pop());
  }
  SUBCASE("invalid topic and stale seq are rejected") {
    CHECK_THROWS_AS(bus.publish("sensor", "/nope", "x", 0), BusError);
    Envelope e{5, 0, "sensor", topic::out("sensor"), "x", false};
    bus.publish(e);
    CHECK_THROWS_AS(bus.publish(e), BusError);
  }
}

TEST_CASE("route table filters subscriptions it does not list") {
  MessageBus bus(RouteTable::standard());
  auto a1 = join(bus, "action1", "/plantbot/*/out");
  bus.publish("sensor", topic::out("sensor"), "x", 0);
  CHECK_FALSE(a1->try_pop());
  bus.publish("chat", topic::out("chat"), "y", 0);
  CHECK(a1->try_pop());
}

TEST_CASE("queue bound is never exceeded; drops are counted") {
  MessageBus bus(RouteTable::standard(), 4);
  auto chat = join(bus, "chat", topic::out("sensor"));
  for (int i = 0; i < 10; ++i) bus.publish("sensor", topic::out("sensor"), std::to_string(i), i);
  CHECK(chat->size() == 4);
  CHECK(chat->high_water() == 4);
  CHECK(bus.dropped() == 6);
  CHECK(bus.dropped_for("chat") == 6);
  CHECK(chat->try_pop()->payload == "6");  // drop-oldest keeps the freshest
}

TEST_CASE("per-source order holds under concurrent publishers") {
  MessageBus bus(RouteTable::standard(), 100000);
  auto chat = bus.register_agent("chat", 100000);
  bus.subscribe("chat", "/plantbot/*/out");
  constexpr int kPerSource = 2000;
  {
    std::jthread a([&] {
      for (int i = 0; i < kPerSource; ++i) bus.publish("sensor", topic::out("sensor"), std::to_string(i), i);
    });
    std::jthread b([&] {
      for (int i = 0; i < kPerSource; ++i) bus.publish("vision", topic::out("vision"), std::to_string(i), i);
    });
  }
  std::map<std::string, int> next;
  int total = 0;
  while (auto env = chat->try_pop()) {
    CHECK(std::stoi(env->payload) == next[env->source]++);
    ++total;
  }
  CHECK(total == 2 * kPerSource);
}

TEST_CASE("delivery observer only sees route-table edges") {
  MessageBus bus(RouteTable::standard());
  for (const char* id : {"sensor", "vision", "chat", "action1", "action2", "speaker", "world"})
    join(bus, id, "/plantbot/*/*");
  std::vector<std::pair<std::string, std::string>> seen;
  bus.set_delivery_observer([&](const Envelope& e, const std::string& agent) { seen.emplace_back(e.topic, agent); });
  std::mt19937_64 rng(3);
  const std::vector<std::string> names = {"sensor", "vision", "chat", "action1", "action2", "human", "soil", "camera"};
  for (int i = 0; i < 500; ++i) {
    const auto& n = names[rng() % names.size()];
    bus.publish(n, rng() % 2 ? topic::out(n) : topic::in(n), "x", i);
  }
  REQUIRE_FALSE(seen.empty());
  for (const auto& [t, agent] : seen) CHECK(bus.routes().allows(t, agent));
}

TEST_CASE("OSC bridge") {
  osc::Endpoint far({"127.0.0.1", 0, {}});
  osc::Endpoint near({"127.0.0.1", 0, {{"127.0.0.1", far.local_port()}}});

  SUBCASE("outbound carries the payload as one string argument") {
    MessageBus bus(RouteTable::standard());
    OscBridge bridge(bus, near, BridgeDirection::outbound);
    bus.publish("sensor", topic::out("sensor"), "The soil is dry.", 0);
    const auto got = far.receive(2000ms);
    REQUIRE(got);
    CHECK(got->address == "/plantbot/sensor/out");
    REQUIRE(got->args.size() == 1);
    CHECK(std::get<std::string>(got->args[0]) == "The soil is dry.");
    CHECK(bridge.sent() == 1);
  }

  SUBCASE("inbound publishes on the bus") {
    MessageBus bus(RouteTable::standard());
    auto chat = join(bus, "chat", topic::in("human"));
    osc::Endpoint listener({"127.0.0.1", 0, {}});
    OscBridge bridge(bus, listener, BridgeDirection::inbound);
    osc::Endpoint sender({"127.0.0.1", 0, {{"127.0.0.1", listener.local_port()}}});
    sender.broadcast({"/plantbot/human/in", {std::string("hello")}});
    std::optional<Envelope> env;
    for (int i = 0; i < 200 && !env; ++i) {
      env = chat->pop_wait(10ms);
    }
    REQUIRE(env);
    CHECK(env->payload == "hello");
    CHECK(env->topic == "/plantbot/human/in");
    CHECK(env->source == "human");
    CHECK(env->relayed);
  }

  SUBCASE("bus to OSC to bus preserves UTF-8 byte for byte") {
    MessageBus a(RouteTable::standard());
    MessageBus b(RouteTable::standard());
    osc::Endpoint b_end({"127.0.0.1", 0, {}});
    osc::Endpoint a_end({"127.0.0.1", 0, {{"127.0.0.1", b_end.local_port()}}});
    OscBridge out(a, a_end, BridgeDirection::outbound);
    OscBridge in(b, b_end, BridgeDirection::inbound);
    auto chat = join(b, "chat", topic::out("sensor"));
    const std::string text = "\xE5\x9C\x9F\xE3\x81\x8C\xE4\xB9\xBE\xE3\x81\x84\xE3\x81\xA6\xE3\x81\x84\xE3\x82\x8B\xE3\x80\x82";
    a.publish("sensor", topic::out("sensor"), text, 0);
    std::optional<Envelope> env;
    for (int i = 0; i < 200 && !env; ++i) env = chat->pop_wait(10ms);
    REQUIRE(env);
    CHECK(env->payload == text);
  }
}
