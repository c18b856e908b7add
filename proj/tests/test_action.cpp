#include <doctest.h>

#include <cmath>
#include <numbers>
#include <random>

#include "plantbot/action.hpp"
#include "plantbot/drive.hpp"
#include "support.hpp"

using namespace plantbot;
using namespace plantbot::action;

namespace {

// Synthetic scan: everything at `far`, with the rays nearest the given
// relative angles (degrees) replaced by the given ranges.
world::LidarScan scan_with(std::vector<std::pair<double, double>> hits, double far = 8.0, int rays = 72) {
  world::LidarScan s;
  s.max_range = 8.0;
  s.ranges.assign(static_cast<std::size_t>(rays), far);
  for (auto [deg, r] : hits) {
    int i = static_cast<int>(std::lround(deg / 360.0 * rays));
    i = ((i % rays) + rays) % rays;
    s.ranges[static_cast<std::size_t>(i)] = r;
  }
  return s;
}

const MotorCommand kForward{0.3, 0.3, 1.0};

}  // namespace

TEST_CASE("decision parsing") {
  CHECK(parse_decision("[1] I think I'd like to move.") == Decision{true, "I think I'd like to move."});
  CHECK(parse_decision("  [0] Reason: still talking") == Decision{false, "Reason: still talking"});
  CHECK(parse_decision("[0]") == Decision{false, ""});
  CHECK_THROWS_AS(parse_decision("I would like to move"), ParseError);
  CHECK_THROWS_AS(parse_decision("[2] maybe"), ParseError);
  CHECK_THROWS_AS(parse_decision(""), ParseError);

  bool malformed = false;
  CHECK(parse_decision_or_stop("hmm", &malformed) == Decision{false, "hmm"});
  CHECK(malformed);
  parse_decision_or_stop("[1] go", &malformed);
  CHECK_FALSE(malformed);
}

TEST_CASE("decision render round-trips") {
  std::mt19937_64 rng(3);
  for (int i = 0; i < 2000; ++i) {
    Decision d{rng() % 2 == 0, testing_support::random_text(rng, 40, true)};
    // Reasons are stored trimmed.
    while (!d.reason.empty() && std::isspace(static_cast<unsigned char>(d.reason.back()))) d.reason.pop_back();
    while (!d.reason.empty() && std::isspace(static_cast<unsigned char>(d.reason.front()))) d.reason.erase(0, 1);
    REQUIRE(parse_decision(render(d)) == d);
  }
}

TEST_CASE("motor command parsing") {
  CHECK(parse_motor_command("CMD: forward 0.5") == VerbCommand{Verb::forward, 0.5});
  CHECK(parse_motor_command("Let's see.\nCMD: stop") == VerbCommand{Verb::stop, std::nullopt});
  CHECK(parse_motor_command("cmd: turn_left 45") == VerbCommand{Verb::turn_left, 45.0});
  CHECK(parse_motor_command("moving ahead slowly") == VerbCommand{Verb::forward, std::nullopt});
  CHECK(parse_motor_command("I'd rather stay and move later") == VerbCommand{Verb::stop, std::nullopt});
  CHECK(parse_motor_command("please turn left now") == VerbCommand{Verb::turn_left, std::nullopt});
  CHECK_THROWS_AS(parse_motor_command("lovely weather"), ParseError);
  CHECK_THROWS_AS(parse_motor_command("CMD: forward -1"), ParseError);
  CHECK_THROWS_AS(parse_motor_command("CMD: forward abc"), ParseError);
  CHECK_THROWS_AS(parse_motor_command("CMD: stop 3"), ParseError);
  // "go" inside a word is not a keyword
  CHECK_THROWS_AS(parse_motor_command("a good day"), ParseError);
}

TEST_CASE("motor command render round-trips") {
  std::mt19937_64 rng(8);
  std::uniform_real_distribution<double> mag(0.01, 500);
  for (int i = 0; i < 1000; ++i) {
    const auto verb = static_cast<Verb>(rng() % 5);
    VerbCommand c{verb, verb == Verb::stop || rng() % 3 == 0 ? std::nullopt : std::optional<double>(mag(rng))};
    REQUIRE(parse_motor_command(render(c)) == c);
  }
}

TEST_CASE("verb to track speeds") {
  MotionParams p;
  SUBCASE("forward 1 m") {
    const auto m = to_motor({Verb::forward, 1.0}, p);
    CHECK(m.left == doctest::Approx(0.3));
    CHECK(m.right == doctest::Approx(0.3));
    CHECK(m.duration == doctest::Approx(1.0 / 0.3));
  }
  SUBCASE("backward default distance") {
    const auto m = to_motor({Verb::backward, std::nullopt}, p);
    CHECK(m.left == doctest::Approx(-0.3));
    CHECK(m.duration == doctest::Approx(1.0));
  }
  SUBCASE("turn_left 90 degrees") {
    const auto m = to_motor({Verb::turn_left, 90.0}, p);
    CHECK(m.left == doctest::Approx(-0.1));
    CHECK(m.right == doctest::Approx(0.1));
    // omega = 2 * 0.1 / 0.4 = 0.5 rad/s, angle pi/2
    CHECK(m.duration == doctest::Approx(std::numbers::pi));
  }
  SUBCASE("turn_right is the mirror") {
    const auto m = to_motor({Verb::turn_right, 90.0}, p);
    CHECK(m.left == doctest::Approx(0.1));
    CHECK(m.right == doctest::Approx(-0.1));
  }
  SUBCASE("stop") {
    const auto m = to_motor({Verb::stop, std::nullopt}, p);
    CHECK(m.is_stop());
    CHECK(m.duration == doctest::Approx(p.min_duration));
  }
}

TEST_CASE("track speeds and durations stay in bounds") {
  std::mt19937_64 rng(21);
  std::uniform_real_distribution<double> u(0, 1);
  for (int i = 0; i < 5000; ++i) {
    MotionParams p;
    p.speed = u(rng) * 2;
    p.turn_speed = u(rng) * 2;
    p.v_max = 0.05 + u(rng);
    p.track_width = 0.1 + u(rng);
    const auto verb = static_cast<Verb>(rng() % 5);
    VerbCommand c{verb, verb == Verb::stop ? std::nullopt : std::optional<double>(1e-6 + u(rng) * 1e4)};
    const auto m = to_motor(c, p);
    REQUIRE(std::abs(m.left) <= p.v_max + 1e-12);
    REQUIRE(std::abs(m.right) <= p.v_max + 1e-12);
    REQUIRE(m.duration >= p.min_duration);
    REQUIRE(m.duration <= p.max_duration);
  }
}

TEST_CASE("redundancy suppression table") {
  const Decision stop{false, "a"}, move{true, "b"};
  CHECK(suppress_redundant(stop, std::nullopt, 0));
  CHECK(suppress_redundant(move, stop, 10));
  CHECK_FALSE(suppress_redundant(stop, stop, 10));
  CHECK_FALSE(suppress_redundant(Decision{false, "different reason"}, stop, 29999));
  CHECK(suppress_redundant(stop, stop, 30000));
  CHECK(suppress_redundant(stop, stop, 500, 400));

  RedundancyFilter f(1000);
  CHECK(f.admit(stop, 0));
  CHECK_FALSE(f.admit(stop, 999));
  CHECK(f.admit(stop, 1000));
  CHECK(f.admit(move, 1001));
  CHECK_FALSE(f.admit(move, 1500));
  REQUIRE(f.last());
  CHECK(f.last()->move);
}

TEST_CASE("reflex override") {
  ReflexParams p;
  p.sector_deg = 30;

  SUBCASE("clear path passes through") {
    CHECK(reflex_avoid(kForward, scan_with({}), p) == kForward);
  }
  SUBCASE("close return inside the sector rotates away from it") {
    const auto out = reflex_avoid(kForward, scan_with({{20, 0.3}, {60, 0.4}, {70, 0.4}}), p);
    CHECK(out.linear() == doctest::Approx(0));
    CHECK(out.left > 0);  // turning right, the left side is cluttered
    CHECK(out.right < 0);
    CHECK(out.duration == kForward.duration);
  }
  SUBCASE("close return outside the sector is ignored") {
    CHECK(reflex_avoid(kForward, scan_with({{40, 0.3}}), p) == kForward);
  }
  SUBCASE("threshold looks one step ahead") {
    // 0.3 m/s over a 0.1 s horizon adds 0.03 m
    CHECK(reflex_avoid(kForward, scan_with({{0, 0.53}}), p) == kForward);
    CHECK_FALSE(reflex_avoid(kForward, scan_with({{0, 0.52}}), p) == kForward);
    p.horizon_s = 0;
    CHECK(reflex_avoid(kForward, scan_with({{0, 0.5}}), p) == kForward);
    CHECK_FALSE(reflex_avoid(kForward, scan_with({{0, 0.49}}), p) == kForward);
  }
  SUBCASE("non-forward commands pass through") {
    const MotorCommand back{-0.3, -0.3, 1}, spin{-0.1, 0.1, 1}, stop{0, 0, 0.1};
    const auto s = scan_with({{0, 0.1}});
    CHECK(reflex_avoid(back, s, p) == back);
    CHECK(reflex_avoid(spin, s, p) == spin);
    CHECK(reflex_avoid(stop, s, p) == stop);
  }
  SUBCASE("disabled") {
    p.enabled = false;
    CHECK(reflex_avoid(kForward, scan_with({{0, 0.1}}), p) == kForward);
  }
  SUBCASE("ties turn left") {
    const auto out = reflex_avoid(kForward, scan_with({{0, 0.2}}), p);
    CHECK(out.right > 0);
    CHECK(out.left < 0);
  }
}

TEST_CASE("always-move trials keep clearance with the reflex") {
  drive::TrialConfig cfg;
  cfg.seconds = 30;
  std::vector<world::WorldState> rooms;
  for (std::uint64_t s = 0; s < 12; ++s) rooms.push_back(drive::random_room(s));
  const auto omp = drive::run_batch(rooms, cfg);
  const auto serial = drive::run_batch_serial(rooms, cfg);
  REQUIRE(omp.size() == rooms.size());
  const double bound = cfg.reflex.d_safe - cfg.motion.v_max * cfg.dt;
  for (std::size_t i = 0; i < rooms.size(); ++i) {
    CHECK(omp[i].min_clearance == serial[i].min_clearance);
    CHECK(omp[i].overrides == serial[i].overrides);
    CHECK(omp[i].min_clearance >= bound - 1e-9);
  }
}

TEST_CASE("random rooms are deterministic and start clear") {
  for (std::uint64_t s = 0; s < 50; ++s) {
    const auto a = drive::random_room(s), b = drive::random_room(s);
    REQUIRE(a.pose == b.pose);
    REQUIRE(a.obstacles.size() == b.obstacles.size());
    CHECK(world::clearance_to_obstacles(a) >= 0.6);
  }
}
