#include "plantbot/action.hpp"

#include <algorithm>
#include <array>
#include <cctype>
#include <charconv>
#include <cmath>

namespace plantbot::action {

namespace {

std::string_view trim(std::string_view s) {
  while (!s.empty() && std::isspace(static_cast<unsigned char>(s.front()))) s.remove_prefix(1);
  while (!s.empty() && std::isspace(static_cast<unsigned char>(s.back()))) s.remove_suffix(1);
  return s;
}

std::string lower(std::string_view s) {
  std::string out(s);
  std::transform(out.begin(), out.end(), out.begin(),
                 [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
  return out;
}

bool is_word_char(char c) { return std::isalnum(static_cast<unsigned char>(c)) || c == '_'; }

// Phrase occurs with word boundaries on both sides.
bool contains_phrase(const std::string& hay, std::string_view phrase) {
  for (auto pos = hay.find(phrase); pos != std::string::npos; pos = hay.find(phrase, pos + 1)) {
    const bool left_ok = pos == 0 || !is_word_char(hay[pos - 1]);
    const auto end = pos + phrase.size();
    const bool right_ok = end >= hay.size() || !is_word_char(hay[end]);
    if (left_ok && right_ok) return true;
  }
  return false;
}

struct KeywordRule {
  Verb verb;
  std::array<std::string_view, 5> phrases;
};

// Scan order is the priority order.
constexpr std::array<KeywordRule, 5> kKeywords{{
    {Verb::stop, {"stop", "halt", "stay", "remain", "freeze"}},
    {Verb::backward, {"backward", "backwards", "back up", "reverse", "retreat"}},
    {Verb::turn_left, {"turn left", "turn_left", "rotate left", "left turn", "to the left"}},
    {Verb::turn_right, {"turn right", "turn_right", "rotate right", "right turn", "to the right"}},
    {Verb::forward, {"forward", "forwards", "ahead", "move", "go"}},
}};

double parse_magnitude(std::string_view tok) {
  double v = 0;
  const auto* end = tok.data() + tok.size();
  const auto [ptr, ec] = std::from_chars(tok.data(), end, v);
  if (ec != std::errc{} || ptr != end || !std::isfinite(v))
    throw ParseError("magnitude is not a number: '" + std::string(tok) + "'");
  if (v <= 0) throw ParseError("magnitude must be positive");
  return v;
}

}  // namespace

Decision parse_decision(std::string_view text) {
  const auto t = trim(text);
  if (t.size() < 3 || t[0] != '[' || t[2] != ']' || (t[1] != '0' && t[1] != '1'))
    throw ParseError("no leading [0]/[1] tag");
  return Decision{t[1] == '1', std::string(trim(t.substr(3)))};
}

Decision parse_decision_or_stop(std::string_view text, bool* malformed) {
  try {
    auto d = parse_decision(text);
    if (malformed) *malformed = false;
    return d;
  } catch (const ParseError&) {
    if (malformed) *malformed = true;
    return Decision{false, std::string(trim(text))};
  }
}

std::string render(const Decision& d) {
  std::string out = d.move ? "[1]" : "[0]";
  if (!d.reason.empty()) out += " " + d.reason;
  return out;
}

const char* to_string(Verb v) noexcept {
  switch (v) {
    case Verb::forward: return "forward";
    case Verb::backward: return "backward";
    case Verb::turn_left: return "turn_left";
    case Verb::turn_right: return "turn_right";
    case Verb::stop: return "stop";
  }
  return "stop";
}

std::optional<Verb> verb_from_string(std::string_view s) noexcept {
  for (auto v : {Verb::forward, Verb::backward, Verb::turn_left, Verb::turn_right, Verb::stop}) {
    if (s == to_string(v)) return v;
  }
  return std::nullopt;
}

VerbCommand parse_motor_command(std::string_view text) {
  const std::string low = lower(text);

  // Grammar line: "CMD: <verb> [<magnitude>]"
  if (const auto at = low.find("cmd:"); at != std::string::npos) {
    auto rest = std::string_view(low).substr(at + 4);
    rest = rest.substr(0, rest.find('\n'));
    rest = trim(rest);
    const auto sp = rest.find_first_of(" \t");
    const auto verb_tok = rest.substr(0, sp);
    if (const auto verb = verb_from_string(verb_tok)) {
      VerbCommand vc{*verb, std::nullopt};
      if (sp != std::string_view::npos) {
        auto mag = trim(rest.substr(sp));
        mag = mag.substr(0, mag.find_first_of(" \t"));
        if (!mag.empty()) {
          if (vc.verb == Verb::stop) throw ParseError("stop takes no magnitude");
          vc.magnitude = parse_magnitude(mag);
        }
      }
      return vc;
    }
  }

  for (const auto& rule : kKeywords) {
    for (auto phrase : rule.phrases) {
      if (!phrase.empty() && contains_phrase(low, phrase)) return VerbCommand{rule.verb, std::nullopt};
    }
  }
  throw ParseError("no motor command in: '" + std::string(text) + "'");
}

std::string render(const VerbCommand& c) {
  std::string out = std::string("CMD: ") + to_string(c.verb);
  if (c.magnitude) {
    std::array<char, 32> buf{};
    const auto [ptr, ec] = std::to_chars(buf.data(), buf.data() + buf.size(), *c.magnitude);
    out += " ";
    out.append(buf.data(), ptr);
  }
  return out;
}

MotorCommand to_motor(const VerbCommand& vc, const MotionParams& p) {
  const double speed = std::clamp(p.speed, 0.0, p.v_max);
  const double turn = std::clamp(p.turn_speed, 0.0, p.v_max);
  MotorCommand m;
  switch (vc.verb) {
    case Verb::stop:
      return MotorCommand{0, 0, p.min_duration};
    case Verb::forward:
    case Verb::backward: {
      const double sign = vc.verb == Verb::forward ? 1.0 : -1.0;
      m.left = m.right = sign * speed;
      const double dist = vc.magnitude.value_or(p.default_distance);
      m.duration = speed > 0 ? dist / speed : p.min_duration;
      break;
    }
    case Verb::turn_left:
    case Verb::turn_right: {
      const double sign = vc.verb == Verb::turn_left ? 1.0 : -1.0;
      m.left = -sign * turn;
      m.right = sign * turn;
      const double omega = 2 * turn / p.track_width;
      const double angle = deg2rad(vc.magnitude.value_or(p.default_angle));
      m.duration = omega > 0 ? angle / omega : p.min_duration;
      break;
    }
  }
  m.duration = std::clamp(m.duration, p.min_duration, p.max_duration);
  return m;
}

bool suppress_redundant(const Decision& next, const std::optional<Decision>& last_emitted,
                        std::int64_t ms_since_last, std::int64_t refresh_ms) {
  if (!last_emitted) return true;
  if (last_emitted->move != next.move) return true;
  return ms_since_last >= refresh_ms;
}

bool RedundancyFilter::admit(const Decision& d, std::int64_t now_ms) {
  if (!suppress_redundant(d, last_, now_ms - last_ms_, refresh_ms_)) return false;
  last_ = d;
  last_ms_ = now_ms;
  return true;
}

MotorCommand reflex_avoid(const MotorCommand& cmd, const world::LidarScan& scan,
                          const ReflexParams& p) {
  if (!p.enabled || cmd.linear() <= 0 || scan.ranges.empty()) return cmd;
  const double half = deg2rad(p.sector_deg);
  const double threshold = p.d_safe + cmd.linear() * std::max(0.0, p.horizon_s);
  if (scan.min_in(-half, half) >= threshold) return cmd;

  const double side = deg2rad(90);
  const double left = scan.mean_in(1e-9, side);
  const double right = scan.mean_in(-side, -1e-9);
  const double s = std::abs(p.turn_speed);
  MotorCommand rot{0, 0, cmd.duration};
  if (left >= right) {
    rot.left = -s;
    rot.right = s;
  } else {
    rot.left = s;
    rot.right = -s;
  }
  return rot;
}

}  // namespace plantbot::action
