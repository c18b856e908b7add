#pragma once

#include <cmath>
#include <numbers>
#include <optional>
#include <vector>

namespace plantbot {

struct Vec2 {
  double x = 0;
  double y = 0;
  friend Vec2 operator+(Vec2 a, Vec2 b) { return {a.x + b.x, a.y + b.y}; }
  friend Vec2 operator-(Vec2 a, Vec2 b) { return {a.x - b.x, a.y - b.y}; }
  friend Vec2 operator*(double s, Vec2 v) { return {s * v.x, s * v.y}; }
  bool operator==(const Vec2&) const = default;
};

inline double dot(Vec2 a, Vec2 b) { return a.x * b.x + a.y * b.y; }
inline double cross(Vec2 a, Vec2 b) { return a.x * b.y - a.y * b.x; }
inline double norm(Vec2 v) { return std::hypot(v.x, v.y); }
inline Vec2 unit(double angle) { return {std::cos(angle), std::sin(angle)}; }

struct Circle {
  Vec2 center;
  double radius = 0;
  bool operator==(const Circle&) const = default;
};

struct Segment {
  Vec2 a;
  Vec2 b;
  bool operator==(const Segment&) const = default;
};

/// Axis-aligned room; its four edges block rays and motion.
struct Bounds {
  double xmin = 0, ymin = 0, xmax = 0, ymax = 0;
  bool contains(Vec2 p) const { return p.x >= xmin && p.x <= xmax && p.y >= ymin && p.y <= ymax; }
  std::vector<Segment> edges() const {
    return {{{xmin, ymin}, {xmax, ymin}},
            {{xmax, ymin}, {xmax, ymax}},
            {{xmax, ymax}, {xmin, ymax}},
            {{xmin, ymax}, {xmin, ymin}}};
  }
  bool operator==(const Bounds&) const = default;
};

/// Maps an angle into (-pi, pi].
inline double normalize_angle(double a) {
  constexpr double two_pi = 2 * std::numbers::pi;
  a = std::fmod(a, two_pi);
  if (a <= -std::numbers::pi) a += two_pi;
  if (a > std::numbers::pi) a -= two_pi;
  return a;
}

inline double deg2rad(double d) { return d * std::numbers::pi / 180.0; }
inline double rad2deg(double r) { return r * 180.0 / std::numbers::pi; }

/// Distance along the ray to a circle's boundary where the ray enters it.
/// An origin inside the circle reports 0.
std::optional<double> ray_circle(Vec2 origin, Vec2 dir, const Circle& c);
std::optional<double> ray_segment(Vec2 origin, Vec2 dir, const Segment& s);

double point_segment_distance(Vec2 p, const Segment& s);
/// Distance from p to the circle boundary, negative inside.
inline double point_circle_distance(Vec2 p, const Circle& c) { return norm(p - c.center) - c.radius; }

}  // namespace plantbot
