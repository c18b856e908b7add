#include "plantbot/geometry.hpp"

#include <algorithm>

namespace plantbot {

std::optional<double> ray_circle(Vec2 origin, Vec2 dir, const Circle& c) {
  // |o + t d - c|^2 = r^2 with |d| = 1
  const Vec2 oc = origin - c.center;
  const double b = dot(oc, dir);
  const double cc = dot(oc, oc) - c.radius * c.radius;
  const double disc = b * b - cc;
  if (disc < 0) return std::nullopt;
  const double s = std::sqrt(disc);
  const double t1 = -b - s;
  const double t2 = -b + s;
  if (t1 >= 0) return t1;
  if (t2 > 0) return 0.0;  // origin inside
  return std::nullopt;
}

std::optional<double> ray_segment(Vec2 origin, Vec2 dir, const Segment& s) {
  const Vec2 e = s.b - s.a;
  const double denom = cross(dir, e);
  if (std::abs(denom) < 1e-15) return std::nullopt;  // parallel
  const Vec2 ao = s.a - origin;
  const double t = cross(ao, e) / denom;
  const double u = cross(ao, dir) / denom;
  if (t < 0 || u < 0 || u > 1) return std::nullopt;
  return t;
}

double point_segment_distance(Vec2 p, const Segment& s) {
  const Vec2 e = s.b - s.a;
  const double len2 = dot(e, e);
  double u = len2 > 0 ? dot(p - s.a, e) / len2 : 0.0;
  u = std::clamp(u, 0.0, 1.0);
  return norm(p - (s.a + u * e));
}

}  // namespace plantbot
