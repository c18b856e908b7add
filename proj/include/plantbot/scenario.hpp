#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "plantbot/world.hpp"

namespace plantbot::scenario {

class ScenarioError : public std::runtime_error {
 public:
  ScenarioError(int line, const std::string& what)
      : std::runtime_error("scenario line " + std::to_string(line) + ": " + what), line_(line) {}
  int line() const noexcept { return line_; }

 private:
  int line_;
};

enum class EventKind { say, set_moisture, water, add_obstacle, pause, resume };

/// A timed operator action, the scripted twin of a console command.
struct TimedEvent {
  double at = 0;           // run-clock seconds
  EventKind kind = EventKind::say;
  std::string text;        // say
  double value = 0;        // set_moisture %, water liters, pause seconds
  Circle obstacle;         // add_obstacle
};

struct Scenario {
  std::optional<std::uint64_t> seed;
  world::WorldState world;
  world::SoilParams soil_params;
  std::vector<world::Entity> entities;
  std::vector<TimedEvent> events;  // sorted by time, stable
  std::optional<double> end;       // run-clock seconds
};

/// Line-oriented format, '#' comments:
///   seed <n>
///   bounds <xmin> <ymin> <xmax> <ymax>
///   robot <x> <y> <heading_deg>
///   track_width <m>
///   soil [moisture=..] [temp=..] [ph=..] [ec=..] [n=..] [p=..] [k=..]
///   soil_model [decay_per_min=..] [water_gain=..] [temp_amplitude=..] [temp_peak_hour=..]
///              [ph_sigma=..] [ec_sigma=..] [nutrient_sigma=..]
///   obstacle <x> <y> <r>
///   wall <x1> <y1> <x2> <y2>
///   person <x> <y> [from=<s>] [to=<s>]
///   landmark <label> <x> <y> [from=<s>] [to=<s>]
///   at <s> say <text...>
///   at <s> set_moisture <percent>
///   at <s> water <liters>
///   at <s> add_obstacle <x> <y> <r>
///   at <s> pause [<seconds>]
///   at <s> resume
///   end <s>
Scenario parse(const std::string& text);
Scenario load(const std::filesystem::path& path);

}  // namespace plantbot::scenario
