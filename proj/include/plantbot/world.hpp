#pragma once

#include <cstdint>
#include <optional>
#include <random>
#include <string>
#include <vector>

#include "plantbot/geometry.hpp"
#include "plantbot/motor.hpp"

namespace plantbot::world {

struct SoilState {
  double moisture = 45;     // %, [0, 100]
  double temperature = 22;  // degC
  double ph = 6.5;          // [0, 14]
  double ec = 1.2;          // mS/cm, >= 0
  double n = 40, p = 20, k = 60;  // mg/kg, >= 0
  bool operator==(const SoilState&) const = default;
};

struct SoilParams {
  double decay_per_min = 0.01;    // moisture e-folding rate
  double water_gain = 20;         // % per liter
  double temp_amplitude = 0;      // degC, half peak-to-peak of the diurnal cycle
  double temp_peak_hour = 14;     // hour of day with the warmest soil
  // Random-walk step scale per sqrt(second).
  double ph_sigma = 0.0005;
  double ec_sigma = 0.0002;
  double nutrient_sigma = 0.005;
};

struct RobotPose {
  double x = 0;
  double y = 0;
  double heading = 0;  // radians, (-pi, pi]
  bool operator==(const RobotPose&) const = default;
};

struct LidarParams {
  int rays = 72;
  double max_range = 8.0;
};

struct LidarScan {
  std::vector<double> ranges;  // ray i at heading + i * 2pi / rays, counter-clockwise
  double max_range = 8.0;

  double angle_of(std::size_t i) const;  // relative to heading, (-pi, pi]
  /// Minimum range over rays whose relative angle lies within [from, to] radians.
  double min_in(double from, double to) const;
  double mean_in(double from, double to) const;
};

struct WorldState {
  RobotPose pose;
  SoilState soil;
  std::vector<Circle> obstacles;
  std::vector<Segment> walls;
  std::optional<Bounds> bounds;
  double sim_time = 0;       // s
  double track_width = 0.4;  // m
  double pending_water = 0;  // liters applied at the next soil step
  bool collided = false;     // set by the last step_robot call
};

/// Differential-drive update: v = (l + r) / 2, w = (r - l) / W. Motion that
/// would cross an obstacle, wall or bound stops at contact and raises
/// `collided`. Does not advance sim_time.
void step_robot(WorldState& world, const MotorCommand& cmd, double dt);

/// moisture' = clamp(m * exp(-lambda * dt_min) + gain * water, 0, 100);
/// temperature tracks the diurnal profile; pH, EC and NPK take a bounded
/// random walk. `now` is the sim time at the start of the step.
SoilState soil_step(const SoilState& soil, const SoilParams& params, double now, double dt,
                    double watering, std::mt19937_64& rng);

/// Queues water for the next soil step. Throws std::invalid_argument if liters <= 0.
void apply_water_event(WorldState& world, double liters);

/// Nearest blocking distance along a ray from `origin`; nullopt if nothing is hit.
std::optional<double> cast_ray(const WorldState& world, Vec2 origin, double angle);

/// OpenMP-parallel over rays.
LidarScan lidar_scan(const WorldState& world, const LidarParams& params = {});
/// Serial reference; produces bit-identical output to lidar_scan.
LidarScan lidar_scan_serial(const WorldState& world, const LidarParams& params = {});

/// Distance from the robot center to the nearest obstacle boundary (circles only).
double clearance_to_obstacles(const WorldState& world);

enum class EntityClass { person, obstacle, landmark };
const char* to_string(EntityClass c) noexcept;

/// A scripted scene object. Visible while appear <= sim_time < vanish.
struct Entity {
  EntityClass cls = EntityClass::person;
  std::string label;
  Vec2 position;
  double appear = 0;
  double vanish = 1e300;
};

struct VisibleEntity {
  EntityClass cls = EntityClass::person;
  std::string label;
  double bearing_deg = 0;  // counter-clockwise from heading
  double distance = 0;     // m, center to center
};

struct SceneParams {
  double fov_deg = 120;
  double max_distance = 8;
  double free_threshold = 1.0;  // m of lidar clearance for a sector to count as free
};

struct SceneObservation {
  std::vector<VisibleEntity> entities;  // ascending distance
  bool free_left = true;
  bool free_front = true;
  bool free_right = true;
};

/// World obstacles are reported as `obstacle` entities in addition to `entities`.
SceneObservation observe_scene(const WorldState& world, const std::vector<Entity>& entities,
                               const SceneParams& params = {});

}  // namespace plantbot::world
