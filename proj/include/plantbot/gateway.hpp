#pragma once

#include <atomic>
#include <cstdint>
#include <deque>
#include <functional>
#include <memory>
#include <mutex>
#include <optional>
#include <random>
#include <string>

#include "plantbot/bus.hpp"
#include "plantbot/config.hpp"
#include "plantbot/console.hpp"
#include "plantbot/llm.hpp"
#include "plantbot/osc_bridge.hpp"
#include "plantbot/roles.hpp"
#include "plantbot/scenario.hpp"
#include "plantbot/telemetry.hpp"
#include "plantbot/world.hpp"

namespace plantbot::gateway {

/// Command-line overrides; each one wins over the config file.
struct Overrides {
  std::optional<std::uint64_t> seed;
  std::optional<double> duration_s;
  std::optional<config::BackendKind> backend;
  std::optional<std::string> console_bind;
  bool headless = false;
};

config::RunConfig apply(config::RunConfig cfg, const Overrides& o);

/// One run: world clock, bus, agents, log sink and (optionally) the console
/// and OSC bridge.
///
/// Simulated clock: each tick applies queued commands and due scenario
/// events, advances the world by one tick (unless paused), feeds the sensor
/// and camera channels on their cadence, then lets the agents drain their
/// inboxes in fixed order. Timestamps come from the tick counter, so two runs
/// with the same config and seed log identical bytes.
///
/// Wall clock: the same tick loop paced by real time, agents in their own
/// threads.
class Runtime {
 public:
  /// Throws config::StartupError naming the subsystem that failed. A non-null
  /// `backend` replaces the configured one.
  explicit Runtime(config::RunConfig cfg, std::unique_ptr<llm::Backend> backend = nullptr);
  ~Runtime();
  Runtime(const Runtime&) = delete;
  Runtime& operator=(const Runtime&) = delete;

  /// One world tick.
  void tick();
  /// Ticks until the run end, or until request_stop(). Returns the number of ticks.
  std::uint64_t run();
  void request_stop() noexcept { stop_.store(true); }
  std::atomic<bool>& stop_flag() noexcept { return stop_; }

  /// Thread-safe. The effect lands at the start of the next tick; the
  /// returned event is the immediate acknowledgement.
  console::Event handle_command(const console::Command& cmd);
  /// Parses then handles; malformed input yields an error event.
  console::Event handle_command_line(const std::string& line);

  using Listener = std::function<void(const console::Event&)>;
  /// Receives every live event. Called from the tick thread and, in wall
  /// mode, from agent threads.
  void set_listener(Listener l);

  std::int64_t now_ms() const noexcept;
  std::optional<std::int64_t> end_ms() const noexcept { return end_ms_; }
  const world::WorldState& world() const noexcept { return world_; }
  bool paused() const noexcept { return paused_; }
  std::uint64_t seed() const noexcept { return seed_; }
  std::uint64_t reflex_overrides() const noexcept { return overrides_; }
  const config::RunConfig& config() const noexcept { return cfg_; }
  telemetry::LogSink& sink() noexcept { return *sink_; }
  MessageBus& bus() noexcept { return *bus_; }
  roles::AgentSystem& agents() noexcept { return agents_; }
  llm::Backend& backend() noexcept { return *backend_; }
  std::optional<std::uint16_t> console_port() const;

 private:
  void apply(const console::Command& cmd);
  void apply(const scenario::TimedEvent& ev);
  void drain_motor_inbox();
  void advance_world(double dt);
  void feed_channels();
  void log_world(const std::string& text);
  void log_soil();
  void emit(const console::Event& e);
  void emit_pose();

  config::RunConfig cfg_;
  scenario::Scenario scenario_;
  std::uint64_t seed_ = 0;
  std::mt19937_64 rng_;
  world::WorldState world_;
  std::unique_ptr<llm::Backend> backend_;
  std::unique_ptr<telemetry::LogSink> sink_;
  std::unique_ptr<MessageBus> bus_;
  roles::AgentSystem agents_;
  std::shared_ptr<Inbox> motor_inbox_;
  std::shared_ptr<Inbox> speaker_inbox_;
  std::unique_ptr<osc::Endpoint> osc_endpoint_;
  std::unique_ptr<OscBridge> osc_bridge_;
  std::unique_ptr<console::Server> console_;

  std::atomic<std::int64_t> clock_ms_{0};
  std::int64_t wall_origin_ns_ = 0;
  std::optional<std::int64_t> end_ms_;
  std::size_t next_event_ = 0;
  std::optional<std::int64_t> resume_at_ms_;
  bool paused_ = false;
  std::int64_t sim_ms_ = 0;
  std::int64_t next_sensor_ms_ = 0;  // sim time
  std::int64_t next_vision_ms_ = 0;
  std::int64_t last_pose_event_ms_ = -1;
  MotorCommand active_;
  double active_left_s_ = 0;
  bool overriding_ = false;
  bool in_contact_ = false;
  std::uint64_t overrides_ = 0;
  std::atomic<bool> stop_{false};

  std::mutex cmd_mu_;
  std::deque<console::Command> commands_;
  std::mutex listener_mu_;
  Listener listener_;
};

/// Replays a log through record_to_event; see console::replay.
using console::replay;

}  // namespace plantbot::gateway
