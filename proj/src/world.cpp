#include "plantbot/world.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>

namespace plantbot::world {

namespace {

constexpr double kContactGap = 1e-9;

std::vector<Segment> blocking_segments(const WorldState& w) {
  std::vector<Segment> segs = w.walls;
  if (w.bounds) {
    const auto e = w.bounds->edges();
    segs.insert(segs.end(), e.begin(), e.end());
  }
  return segs;
}

std::optional<double> cast(const WorldState& w, const std::vector<Segment>& segs, Vec2 origin,
                           Vec2 dir) {
  std::optional<double> best;
  auto take = [&](std::optional<double> t) {
    if (t && (!best || *t < *best)) best = t;
  };
  for (const auto& c : w.obstacles) take(ray_circle(origin, dir, c));
  for (const auto& s : segs) take(ray_segment(origin, dir, s));
  return best;
}

double ray_range(const WorldState& w, const std::vector<Segment>& segs, int i,
                 const LidarParams& p) {
  const double angle = w.pose.heading + 2 * std::numbers::pi * i / p.rays;
  const auto hit = cast(w, segs, {w.pose.x, w.pose.y}, unit(angle));
  const double r = hit ? std::min(*hit, p.max_range) : p.max_range;
  return std::max(r, 1e-6);
}

// Moves along a straight chord, stopping at the first blocking contact.
// Returns the travelled fraction of `length` in [0, 1].
double travel(WorldState& w, const std::vector<Segment>& segs, Vec2 dir, double length) {
  if (length <= 0) return 1.0;
  const Vec2 origin{w.pose.x, w.pose.y};
  const auto hit = cast(w, segs, origin, dir);
  double dist = length;
  if (hit && *hit <= length) {
    dist = std::max(0.0, *hit - kContactGap);
    w.collided = true;
  }
  w.pose.x += dist * dir.x;
  w.pose.y += dist * dir.y;
  return dist / length;
}

}  // namespace

double LidarScan::angle_of(std::size_t i) const {
  return normalize_angle(2 * std::numbers::pi * static_cast<double>(i) /
                         static_cast<double>(ranges.size()));
}

double LidarScan::min_in(double from, double to) const {
  double m = std::numeric_limits<double>::infinity();
  for (std::size_t i = 0; i < ranges.size(); ++i) {
    const double a = angle_of(i);
    if (a >= from - 1e-12 && a <= to + 1e-12) m = std::min(m, ranges[i]);
  }
  return m;
}

double LidarScan::mean_in(double from, double to) const {
  double sum = 0;
  int n = 0;
  for (std::size_t i = 0; i < ranges.size(); ++i) {
    const double a = angle_of(i);
    if (a >= from - 1e-12 && a <= to + 1e-12) {
      sum += ranges[i];
      ++n;
    }
  }
  return n == 0 ? 0.0 : sum / n;
}

void step_robot(WorldState& w, const MotorCommand& cmd, double dt) {
  if (!(dt > 0)) throw std::invalid_argument("step_robot: dt must be positive");
  w.collided = false;
  const double v = cmd.linear();
  const double omega = (cmd.right - cmd.left) / w.track_width;

  if (v == 0) {
    w.pose.heading = normalize_angle(w.pose.heading + omega * dt);
    return;
  }
  const auto segs = blocking_segments(w);
  if (omega == 0) {
    const Vec2 dir = v > 0 ? unit(w.pose.heading) : unit(w.pose.heading + std::numbers::pi);
    travel(w, segs, dir, std::abs(v) * dt);
    return;
  }

  // Arc motion, checked for contact chord by chord (at most 5 degrees each).
  const double turn = omega * dt;
  const int pieces = std::max(1, static_cast<int>(std::ceil(std::abs(turn) / deg2rad(5))));
  const double sub = dt / pieces;
  const double radius = v / omega;
  for (int k = 0; k < pieces; ++k) {
    const double h0 = w.pose.heading;
    const double h1 = h0 + omega * sub;
    const Vec2 chord{radius * (std::sin(h1) - std::sin(h0)), -radius * (std::cos(h1) - std::cos(h0))};
    const double len = norm(chord);
    const double frac = len > 0 ? travel(w, segs, (1.0 / len) * chord, len) : 1.0;
    w.pose.heading = normalize_angle(h0 + omega * sub * frac);
    if (w.collided) return;
  }
}

SoilState soil_step(const SoilState& soil, const SoilParams& prm, double now, double dt,
                    double watering, std::mt19937_64& rng) {
  if (dt < 0 || watering < 0) throw std::invalid_argument("soil_step: dt and watering must be >= 0");
  SoilState s = soil;
  s.moisture = std::clamp(soil.moisture * std::exp(-prm.decay_per_min * dt / 60.0) +
                              prm.water_gain * watering,
                          0.0, 100.0);

  auto diurnal = [&](double t) {
    const double hours = t / 3600.0;
    return prm.temp_amplitude * std::cos(2 * std::numbers::pi * (hours - prm.temp_peak_hour) / 24.0);
  };
  if (dt > 0) s.temperature += diurnal(now + dt) - diurnal(now);

  std::normal_distribution<double> gauss(0.0, 1.0);
  const double root = std::sqrt(dt);
  s.ph = std::clamp(s.ph + prm.ph_sigma * root * gauss(rng), 0.0, 14.0);
  s.ec = std::max(0.0, s.ec + prm.ec_sigma * root * gauss(rng));
  s.n = std::max(0.0, s.n + prm.nutrient_sigma * root * gauss(rng));
  s.p = std::max(0.0, s.p + prm.nutrient_sigma * root * gauss(rng));
  s.k = std::max(0.0, s.k + prm.nutrient_sigma * root * gauss(rng));
  return s;
}

void apply_water_event(WorldState& w, double liters) {
  if (!(liters > 0)) throw std::invalid_argument("water amount must be positive");
  w.pending_water += liters;
}

std::optional<double> cast_ray(const WorldState& w, Vec2 origin, double angle) {
  return cast(w, blocking_segments(w), origin, unit(angle));
}

LidarScan lidar_scan(const WorldState& w, const LidarParams& p) {
  LidarScan scan;
  scan.max_range = p.max_range;
  scan.ranges.resize(static_cast<std::size_t>(p.rays));
  const auto segs = blocking_segments(w);
  const int n = p.rays;
#pragma omp parallel for schedule(static)
  for (int i = 0; i < n; ++i) scan.ranges[static_cast<std::size_t>(i)] = ray_range(w, segs, i, p);
  return scan;
}

LidarScan lidar_scan_serial(const WorldState& w, const LidarParams& p) {
  LidarScan scan;
  scan.max_range = p.max_range;
  scan.ranges.resize(static_cast<std::size_t>(p.rays));
  const auto segs = blocking_segments(w);
  for (int i = 0; i < p.rays; ++i) scan.ranges[static_cast<std::size_t>(i)] = ray_range(w, segs, i, p);
  return scan;
}

double clearance_to_obstacles(const WorldState& w) {
  double d = std::numeric_limits<double>::infinity();
  const Vec2 p{w.pose.x, w.pose.y};
  for (const auto& c : w.obstacles) d = std::min(d, point_circle_distance(p, c));
  return d;
}

const char* to_string(EntityClass c) noexcept {
  switch (c) {
    case EntityClass::person: return "person";
    case EntityClass::obstacle: return "obstacle";
    case EntityClass::landmark: return "landmark";
  }
  return "object";
}

SceneObservation observe_scene(const WorldState& w, const std::vector<Entity>& entities,
                               const SceneParams& prm) {
  SceneObservation obs;
  const double half_fov = prm.fov_deg / 2;
  auto consider = [&](EntityClass cls, const std::string& label, Vec2 pos) {
    const Vec2 d = pos - Vec2{w.pose.x, w.pose.y};
    const double dist = norm(d);
    const double bearing = rad2deg(normalize_angle(std::atan2(d.y, d.x) - w.pose.heading));
    if (dist <= prm.max_distance && std::abs(bearing) <= half_fov)
      obs.entities.push_back({cls, label, bearing, dist});
  };
  for (const auto& e : entities) {
    if (e.appear <= w.sim_time && w.sim_time < e.vanish) consider(e.cls, e.label, e.position);
  }
  for (const auto& c : w.obstacles) consider(EntityClass::obstacle, "", c.center);
  std::stable_sort(obs.entities.begin(), obs.entities.end(),
                   [](const VisibleEntity& a, const VisibleEntity& b) { return a.distance < b.distance; });

  const auto scan = lidar_scan(w);
  const double third = deg2rad(prm.fov_deg / 6);
  const double half = deg2rad(half_fov);
  obs.free_front = scan.min_in(-third, third) > prm.free_threshold;
  obs.free_left = scan.min_in(third, half) > prm.free_threshold;
  obs.free_right = scan.min_in(-half, -third) > prm.free_threshold;
  return obs;
}

}  // namespace plantbot::world
