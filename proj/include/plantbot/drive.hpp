#pragma once

#include <cstdint>
#include <vector>

#include "plantbot/action.hpp"
#include "plantbot/world.hpp"

namespace plantbot::drive {

/// One control tick: the reflex layer sees a fresh scan, then the (possibly
/// overridden) command is integrated for dt. Returns the command applied.
MotorCommand drive_tick(world::WorldState& w, const MotorCommand& cmd, double dt,
                        const action::ReflexParams& reflex, const world::LidarParams& lidar = {});

struct TrialOutcome {
  double min_clearance = 0;  // smallest robot-to-obstacle distance seen
  bool collided = false;     // any contact with an obstacle, wall or bound
  std::uint64_t overrides = 0;
};

struct TrialConfig {
  double seconds = 60;
  double dt = 0.1;
  action::ReflexParams reflex;
  action::MotionParams motion;
  world::LidarParams lidar;
};

/// Drives forward every tick (always-move policy) and records clearance.
TrialOutcome run_always_move(world::WorldState w, const TrialConfig& cfg);

/// Room with randomly placed circular obstacles; the robot starts at least
/// d_start from every obstacle with a random heading.
world::WorldState random_room(std::uint64_t seed, double d_start = 0.6);

/// OpenMP-parallel over trials.
std::vector<TrialOutcome> run_batch(const std::vector<world::WorldState>& worlds, const TrialConfig& cfg);
/// Serial reference for run_batch.
std::vector<TrialOutcome> run_batch_serial(const std::vector<world::WorldState>& worlds,
                                           const TrialConfig& cfg);

}  // namespace plantbot::drive
