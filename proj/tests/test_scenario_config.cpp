#include <doctest.h>

#include <numbers>

#include "plantbot/config.hpp"
#include "plantbot/scenario.hpp"
#include "support.hpp"

using namespace plantbot;
using testing_support::source_dir;

namespace {

std::string minimal_config(const std::string& extra = "") {
  const auto root = source_dir().string();
  return R"({"scenario": ")" + root + R"(/scenarios/thirsty.scn", "prompts": ")" + root +
         R"(/prompts", "backend": {"kind": "scripted", "script": ")" + root + R"(/scripts/default.script"})" +
         extra + "}";
}

int error_line(const std::string& text) {
  try {
    scenario::parse(text);
  } catch (const scenario::ScenarioError& e) {
    return e.line();
  }
  return 0;
}

}  // namespace

TEST_CASE("scenario parsing") {
  const auto s = scenario::parse(R"(# comment
seed 7
bounds -4 -3 4 3
robot 1 2 90
track_width 0.5
soil moisture=33 temp=18
soil_model decay_per_min=0.05 water_gain=10
obstacle 2 0 0.3
wall 0 -3 0 -2
person 3 0 from=5 to=9
landmark building 7 0

at 4 say hello there
at 2 water 0.5
at 4 set_moisture 12
at 6 add_obstacle 1 1 0.2
at 7 pause 2
at 8 pause
at 9 resume
end 60
)");
  CHECK(s.seed == 7u);
  REQUIRE(s.world.bounds);
  CHECK(s.world.bounds->xmin == -4);
  CHECK(s.world.pose.x == 1);
  CHECK(s.world.pose.heading == doctest::Approx(std::numbers::pi / 2));
  CHECK(s.world.track_width == 0.5);
  CHECK(s.world.soil.moisture == 33);
  CHECK(s.world.soil.temperature == 18);
  CHECK(s.world.soil.ph == 6.5);
  CHECK(s.soil_params.decay_per_min == 0.05);
  CHECK(s.soil_params.water_gain == 10);
  CHECK(s.world.obstacles.size() == 1);
  CHECK(s.world.walls.size() == 1);
  REQUIRE(s.entities.size() == 2);
  CHECK(s.entities[0].appear == 5);
  CHECK(s.entities[0].vanish == 9);
  CHECK(s.entities[1].label == "building");
  CHECK(s.end == 60.0);

  REQUIRE(s.events.size() == 7);
  CHECK(s.events[0].kind == scenario::EventKind::water);
  // equal times keep file order
  CHECK(s.events[1].kind == scenario::EventKind::say);
  CHECK(s.events[1].text == "hello there");
  CHECK(s.events[2].kind == scenario::EventKind::set_moisture);
  CHECK(s.events[3].obstacle.radius == 0.2);
  CHECK(s.events[4].value == 2);
  CHECK(s.events[5].kind == scenario::EventKind::pause);
  CHECK(s.events[6].kind == scenario::EventKind::resume);
}

TEST_CASE("scenario errors carry line numbers") {
  CHECK(error_line("seed 1\nfly 3\n") == 2);
  CHECK(error_line("robot 0 0\n") == 1);
  CHECK(error_line("\n\nsoil moist=3\n") == 3);
  CHECK(error_line("obstacle 0 0 -1\n") == 1);
  CHECK(error_line("at 1 dance\n") == 1);
  CHECK(error_line("at -1 say hi\n") == 1);
  CHECK(error_line("at 1 water 0\n") == 1);
  CHECK(error_line("person 1 1 when=3\n") == 1);
  CHECK(error_line("seed abc\n") == 1);
  // robot placed inside an obstacle
  CHECK_THROWS_WITH_AS(scenario::parse("obstacle 0 0 0.5\nrobot 0 0 0\n"), doctest::Contains("inside an obstacle"),
                       scenario::ScenarioError);
  CHECK(error_line("") == 0);
  CHECK_THROWS(scenario::load("/nonexistent.scn"));
}

TEST_CASE("shipped scenarios parse") {
  for (const char* name : {"default", "thirsty", "introduction", "visitors", "soil_cycle"}) {
    CAPTURE(name);
    const auto s = scenario::load(source_dir() / "scenarios" / (std::string(name) + ".scn"));
    CHECK(s.seed.has_value());
    // the default room is open-ended for console use
    CHECK(s.end.has_value() == (std::string(name) != "default"));
  }
}

TEST_CASE("durations and addresses") {
  CHECK(config::parse_duration("10s") == 10);
  CHECK(config::parse_duration("2m") == 120);
  CHECK(config::parse_duration("600") == 600);
  CHECK(config::parse_duration("1.5h") == 5400);
  for (const char* bad : {"", "s", "-5", "0", "10x", "ten"}) CHECK_THROWS_AS(config::parse_duration(bad), std::invalid_argument);

  CHECK(config::parse_host_port("127.0.0.1:8765") == std::pair<std::string, std::uint16_t>{"127.0.0.1", 8765});
  CHECK(config::parse_host_port("localhost:0").second == 0);
  for (const char* bad : {"8765", ":80", "host:", "host:99999", "host:x"})
    CHECK_THROWS_AS(config::parse_host_port(bad), std::invalid_argument);
}

TEST_CASE("config parsing") {
  const auto c = config::parse(minimal_config(R"(, "seed": 5, "duration": "2m", "ticks": {"sensor_ms": 1000},
      "reflex": {"d_safe": 0.4}, "console": "127.0.0.1:0", "clock": "wall", "history": {"chat": 4})"));
  CHECK(c.seed == 5u);
  CHECK(c.duration_s == 120.0);
  CHECK(c.sensor_tick_ms == 1000);
  CHECK(c.world_tick_ms == 100);
  CHECK(c.reflex.d_safe == 0.4);
  CHECK(c.console_bind == "127.0.0.1:0");
  CHECK(c.clock == config::ClockMode::wall);
  CHECK(c.history.at("chat") == 4);
  CHECK(c.prompts.size() == 5);
  CHECK(c.backend.temperature == 0.7);
  CHECK(c.routes.contains_all(RouteTable::standard()));
  CHECK_NOTHROW(c.validate_files());
}

TEST_CASE("config errors name the config subsystem") {
  auto subsystem_of = [](const std::string& text) -> std::string {
    try {
      config::parse(text);
    } catch (const config::StartupError& e) {
      return e.subsystem();
    }
    return "";
  };
  CHECK(subsystem_of("{") == "config");
  CHECK(subsystem_of(minimal_config(R"(, "colour": "green")")) == "config");
  CHECK(subsystem_of(minimal_config(R"(, "ticks": {"world_ms": 0})")) == "config");
  CHECK(subsystem_of(minimal_config(R"(, "seed": -1)")) == "config");
  CHECK(subsystem_of(minimal_config(R"(, "clock": "sundial")")) == "config");
  CHECK(subsystem_of(minimal_config(R"(, "duration": "forever")")) == "config");
  CHECK(subsystem_of(minimal_config(R"(, "console": "nowhere")")) == "config");
  CHECK(subsystem_of(minimal_config(R"(, "reflex": {"sector_deg": 200})")) == "config");
  CHECK(subsystem_of(minimal_config(R"(, "routes": [{"pattern": "/plantbot/chat/out", "subscriber": "action1"}])")) ==
        "config");
  CHECK(subsystem_of(R"({"prompts": "/tmp"})") == "config");
}

TEST_CASE("file checks name the missing file's subsystem") {
  auto c = config::parse(minimal_config());
  c.prompts["chat"] = "/nonexistent/chat.txt";
  try {
    c.validate_files();
    FAIL("expected a startup error");
  } catch (const config::StartupError& e) {
    CHECK(e.subsystem() == "prompts");
    CHECK(std::string(e.what()).find("/nonexistent/chat.txt") != std::string::npos);
  }
}

TEST_CASE("shipped configs load") {
  for (const char* name : {"default", "thirsty", "introduction", "visitors", "soil_cycle", "live"}) {
    CAPTURE(name);
    const auto c = config::load(source_dir() / "configs" / (std::string(name) + ".json"));
    CHECK_NOTHROW(c.validate_files());
    CHECK(c.source.filename() == std::string(name) + ".json");
  }
}
