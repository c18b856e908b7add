#pragma once

#include <cstdint>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>

#include "plantbot/motor.hpp"
#include "plantbot/world.hpp"

namespace plantbot::action {

class ParseError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Move/stop directive read from a leading "[1]" or "[0]".
struct Decision {
  bool move = false;
  std::string reason;
  bool operator==(const Decision&) const = default;
};

/// Throws ParseError when the text has no leading bracket tag.
Decision parse_decision(std::string_view text);
/// parse_decision, falling back to a stop directive on malformed text.
Decision parse_decision_or_stop(std::string_view text, bool* malformed = nullptr);
std::string render(const Decision& d);

enum class Verb { forward, backward, turn_left, turn_right, stop };
const char* to_string(Verb v) noexcept;
std::optional<Verb> verb_from_string(std::string_view s) noexcept;

struct VerbCommand {
  Verb verb = Verb::stop;
  std::optional<double> magnitude;  // meters for translation, degrees for rotation
  bool operator==(const VerbCommand&) const = default;
};

/// "CMD: <verb> [<magnitude>]" if present, otherwise a keyword scan with
/// priority stop > backward > turn_left > turn_right > forward. Throws
/// ParseError when nothing matches or the magnitude is invalid.
VerbCommand parse_motor_command(std::string_view text);
/// Canonical "CMD: ..." line.
std::string render(const VerbCommand& c);

struct MotionParams {
  double v_max = 0.3;           // m/s, per track
  double speed = 0.3;           // translation track speed
  double turn_speed = 0.1;      // track speed magnitude for in-place rotation
  double track_width = 0.4;     // m
  double default_distance = 0.3;  // m, when a translation has no magnitude
  double default_angle = 90;    // degrees, when a rotation has no magnitude
  double min_duration = 0.1;    // s, used for stop
  double max_duration = 5.0;    // s
};

/// Converts a verb command to track speeds. Speeds are clamped to v_max and
/// durations to [min_duration, max_duration] whatever the input.
MotorCommand to_motor(const VerbCommand& vc, const MotionParams& params = {});

/// Emit when there is no prior emission, the move flag changed, or the
/// refresh interval has elapsed since the last emission.
bool suppress_redundant(const Decision& next, const std::optional<Decision>& last_emitted,
                        std::int64_t ms_since_last, std::int64_t refresh_ms = 30000);

/// Stateful wrapper kept by the Action-1 agent.
class RedundancyFilter {
 public:
  explicit RedundancyFilter(std::int64_t refresh_ms = 30000) : refresh_ms_(refresh_ms) {}
  /// Returns true (and records the emission) when `d` should be emitted at `now_ms`.
  bool admit(const Decision& d, std::int64_t now_ms);
  const std::optional<Decision>& last() const noexcept { return last_; }

 private:
  std::int64_t refresh_ms_;
  std::optional<Decision> last_;
  std::int64_t last_ms_ = 0;
};

struct ReflexParams {
  bool enabled = true;
  double d_safe = 0.5;        // m
  double sector_deg = 90;     // half-width of the guarded sector around the heading
  double turn_speed = 0.1;    // m/s per track while rotating away
  // Look-ahead: the threshold grows by the distance the command covers in
  // this many seconds, so a sampled scan cannot let one more step through.
  double horizon_s = 0.1;
};

/// When `cmd` moves forward and the nearest lidar return inside the guarded
/// sector is closer than d_safe + v * horizon_s, replaces it with an in-place rotation toward
/// the side with larger mean clearance. Other commands pass through.
MotorCommand reflex_avoid(const MotorCommand& cmd, const world::LidarScan& scan,
                          const ReflexParams& params = {});

}  // namespace plantbot::action
