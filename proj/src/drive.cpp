#include "plantbot/drive.hpp"

#include <algorithm>
#include <cmath>
#include <random>

namespace plantbot::drive {

MotorCommand drive_tick(world::WorldState& w, const MotorCommand& cmd, double dt,
                        const action::ReflexParams& reflex, const world::LidarParams& lidar) {
  MotorCommand applied = cmd;
  if (reflex.enabled && cmd.linear() > 0) applied = action::reflex_avoid(cmd, world::lidar_scan(w, lidar), reflex);
  world::step_robot(w, applied, dt);
  return applied;
}

TrialOutcome run_always_move(world::WorldState w, const TrialConfig& cfg) {
  const auto forward = action::to_motor({action::Verb::forward, std::nullopt}, cfg.motion);
  TrialOutcome out;
  out.min_clearance = world::clearance_to_obstacles(w);
  const auto ticks = static_cast<std::int64_t>(std::llround(cfg.seconds / cfg.dt));
  for (std::int64_t k = 0; k < ticks; ++k) {
    const auto applied = drive_tick(w, forward, cfg.dt, cfg.reflex, cfg.lidar);
    if (!(applied == forward)) ++out.overrides;
    out.collided = out.collided || w.collided;
    out.min_clearance = std::min(out.min_clearance, world::clearance_to_obstacles(w));
  }
  return out;
}

world::WorldState random_room(std::uint64_t seed, double d_start) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> uni(0.0, 1.0);
  world::WorldState w;
  const double width = 4 + 4 * uni(rng);
  const double height = 3 + 3 * uni(rng);
  w.bounds = Bounds{0, 0, width, height};
  const int count = 3 + static_cast<int>(uni(rng) * 8);
  for (int i = 0; i < count; ++i) {
    const double r = 0.1 + 0.4 * uni(rng);
    w.obstacles.push_back({{r + uni(rng) * (width - 2 * r), r + uni(rng) * (height - 2 * r)}, r});
  }
  // Start pose: away from obstacles and walls.
  for (int attempt = 0; attempt < 10000; ++attempt) {
    const Vec2 p{0.5 + uni(rng) * (width - 1.0), 0.5 + uni(rng) * (height - 1.0)};
    const bool clear = std::all_of(w.obstacles.begin(), w.obstacles.end(), [&](const Circle& c) {
      return point_circle_distance(p, c) >= d_start;
    });
    if (clear) {
      w.pose = {p.x, p.y, normalize_angle((uni(rng) * 2 - 1) * std::numbers::pi)};
      return w;
    }
  }
  // Crowded room: drop obstacles until the center is free.
  w.obstacles.clear();
  w.pose = {width / 2, height / 2, 0};
  return w;
}

std::vector<TrialOutcome> run_batch(const std::vector<world::WorldState>& worlds, const TrialConfig& cfg) {
  std::vector<TrialOutcome> out(worlds.size());
  const auto n = static_cast<std::int64_t>(worlds.size());
#pragma omp parallel for schedule(dynamic)
  for (std::int64_t i = 0; i < n; ++i) {
    out[static_cast<std::size_t>(i)] = run_always_move(worlds[static_cast<std::size_t>(i)], cfg);
  }
  return out;
}

std::vector<TrialOutcome> run_batch_serial(const std::vector<world::WorldState>& worlds,
                                           const TrialConfig& cfg) {
  std::vector<TrialOutcome> out;
  out.reserve(worlds.size());
  for (const auto& w : worlds) out.push_back(run_always_move(w, cfg));
  return out;
}

}  // namespace plantbot::drive
