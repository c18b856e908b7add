#include <doctest.h>

#include <random>
#include <set>

#include "plantbot/bus.hpp"
#include "plantbot/llm.hpp"
#include "plantbot/roles.hpp"
#include "plantbot/telemetry.hpp"
#include "support.hpp"

using namespace plantbot;
using namespace plantbot::roles;

namespace {

RolePromptSet shipped_prompts() { return load_prompts(testing_support::source_dir() / "prompts"); }

llm::ScriptedBackend shipped_backend() {
  return llm::ScriptedBackend(
      llm::parse_script(testing_support::read_file(testing_support::source_dir() / "scripts/default.script")));
}

struct Harness {
  MessageBus bus{RouteTable::standard()};
  llm::ScriptedBackend backend = shipped_backend();
  telemetry::LogSink sink{"", "roles", true};
  AgentSystem sys;
  std::shared_ptr<BoundedQueue<Envelope>> motor;

  Harness() {
    sys = wire_agents(shipped_prompts(), bus, {{"*", &backend}}, {}, {&sink, [] { return 0; }, nullptr});
    bus.register_agent("world");
    motor = bus.subscribe("world", topic::out("action2"));
  }

  std::vector<std::string> utterances(const std::string& agent) const {
    std::vector<std::string> out;
    for (const auto& r : sink.records())
      if (r.agent == agent && (r.kind == telemetry::Kind::utterance || r.kind == telemetry::Kind::decision))
        out.push_back(r.text);
    return out;
  }
};

}  // namespace

TEST_CASE("sensor formatting") {
  world::SoilState s;
  s.moisture = 12;
  const auto dry = format_sensor_input(s);
  CHECK(dry.rfind("moisture=12.0%", 0) == 0);
  CHECK(dry.find("status=dry") != std::string::npos);
  s.moisture = 55;
  CHECK(format_sensor_input(s).find("status=ok") != std::string::npos);
  s.moisture = 80;
  CHECK(format_sensor_input(s).find("status=wet") != std::string::npos);
  s.moisture = -0.01;
  CHECK(format_sensor_input(s).rfind("moisture=0.0%", 0) == 0);
}

TEST_CASE("sensor formatting distinguishes readings that differ at one decimal") {
  std::mt19937_64 rng(5);
  std::uniform_int_distribution<int> tenth(0, 1000);
  std::set<std::string> seen;
  std::set<std::tuple<int, int, int>> keys;
  for (int i = 0; i < 2000; ++i) {
    world::SoilState s;
    const int m = tenth(rng), t = tenth(rng) % 400, n = tenth(rng);
    s.moisture = m / 10.0;
    s.temperature = t / 10.0;
    s.n = n / 10.0;
    const bool fresh_key = keys.insert({m, t, n}).second;
    const bool fresh_text = seen.insert(format_sensor_input(s)).second;
    REQUIRE(fresh_key == fresh_text);
  }
}

TEST_CASE("vision formatting") {
  SUBCASE("two people") {
    world::SceneObservation obs;
    obs.entities = {{world::EntityClass::person, "", 10, 2.0}, {world::EntityClass::person, "", -10, 2.1}};
    const auto text = format_vision_input(obs);
    CHECK(text.find("two people") != std::string::npos);
  }
  SUBCASE("empty scene") {
    CHECK(format_vision_input({}).find("no objects visible") != std::string::npos);
  }
  SUBCASE("obstacle straight ahead at 1 m") {
    world::WorldState w;
    w.obstacles.push_back({{1.0, 0.0}, 0.2});
    const auto text = format_vision_input(world::observe_scene(w, {}));
    CHECK(text.find("one obstacle") != std::string::npos);
    CHECK(text.find("bearing 0 deg, 1.0 m") != std::string::npos);
    CHECK(text.find("front blocked") != std::string::npos);
  }
}

TEST_CASE("input tags") {
  CHECK(format_chat_input("sensor", "dry") == "[sensor] dry");
  CHECK(format_chat_input("vision", "x") == "[vision] x");
  CHECK(format_chat_input("human", "hi") == "[human] hi");
  CHECK_THROWS_AS(format_chat_input("action1", "x"), std::invalid_argument);
  CHECK(format_action2_input("action1", "[1] go") == "[action1] [1] go");
  CHECK(format_action2_input("chat", "hey") == "[chat] hey");
  CHECK_THROWS_AS(format_action2_input("human", "x"), std::invalid_argument);
}

TEST_CASE("prompt validation") {
  auto p = shipped_prompts();
  CHECK_NOTHROW(p.validate());
  CHECK(p.at("chat").find(kHybridClause) != std::string::npos);
  auto bad = p;
  bad.prompts["chat"] = "You are a robot.";
  CHECK_THROWS_AS(bad.validate(), std::invalid_argument);
  bad = p;
  bad.prompts.erase("vision");
  CHECK_THROWS_AS(bad.validate(), std::invalid_argument);
  bad = p;
  bad.prompts["action2"] = "Say what to do.";
  CHECK_THROWS_AS(bad.validate(), std::invalid_argument);
  CHECK_THROWS_WITH_AS(load_prompts(std::filesystem::path("/nonexistent/prompts")),
                       doctest::Contains("/nonexistent/prompts/"), std::invalid_argument);
}

TEST_CASE("default specs") {
  const auto p = shipped_prompts();
  CHECK(default_spec("vision", p).history_capacity == 0);
  CHECK(default_spec("chat", p).history_capacity == 10);
  CHECK(default_spec("action1", p).postprocessor == agent::Postprocessor::decision);
  CHECK(default_spec("action2", p).postprocessor == agent::Postprocessor::motor);
  CHECK_THROWS(default_spec("speaker", p));
}

TEST_CASE("wiring") {
  SUBCASE("quiescent without inputs") {
    Harness h;
    CHECK(h.sys.run_until_quiescent() == 0);
    CHECK(h.sink.records().empty());
  }
  SUBCASE("missing backend") {
    MessageBus bus(RouteTable::standard());
    auto b = shipped_backend();
    CHECK_THROWS_AS(wire_agents(shipped_prompts(), bus, {{"chat", &b}}, {}, {}), std::invalid_argument);
  }
  SUBCASE("route table missing an edge") {
    MessageBus bus(RouteTable({{topic::in("soil"), "sensor"}}));
    auto b = shipped_backend();
    CHECK_THROWS_AS(wire_agents(shipped_prompts(), bus, {{"*", &b}}, {}, {}), std::invalid_argument);
  }
}

TEST_CASE("dry soil cascade") {
  Harness h;
  world::SoilState s;
  s.moisture = 25;
  h.bus.publish("soil", topic::in("soil"), format_sensor_input(s), 0);
  h.sys.run_until_quiescent();
  CHECK(h.utterances("sensor") == std::vector<std::string>{"The soil is dry."});
  const auto chat = h.utterances("chat");
  REQUIRE(chat.size() == 1);
  CHECK(chat[0].find("water") != std::string::npos);
  const auto a1 = h.utterances("action1");
  REQUIRE_FALSE(a1.empty());
  CHECK(a1.back().rfind("[1]", 0) == 0);
  std::vector<std::string> cmds;
  while (auto e = h.motor->try_pop()) cmds.push_back(e->payload);
  REQUIRE_FALSE(cmds.empty());
  CHECK(cmds.back() == "CMD: forward 0.5");
}

TEST_CASE("two people cascade") {
  Harness h;
  world::WorldState w;
  std::vector<world::Entity> ents{{world::EntityClass::landmark, "building", {7, 0}},
                                  {world::EntityClass::person, "", {4, 0.6}},
                                  {world::EntityClass::person, "", {4, -0.6}}};
  h.bus.publish("camera", topic::in("camera"), format_vision_input(world::observe_scene(w, ents)), 0);
  h.sys.run_until_quiescent();
  const auto vision = h.utterances("vision");
  REQUIRE(vision.size() == 1);
  CHECK(vision[0].find("two people") != std::string::npos);
  const auto chat = h.utterances("chat");
  REQUIRE(chat.size() == 1);
  CHECK(chat[0].find("Hello") != std::string::npos);
  const auto a1 = h.utterances("action1");
  REQUIRE_FALSE(a1.empty());
  CHECK(a1.back().rfind("[1]", 0) == 0);
}
