#include "plantbot/gateway.hpp"

#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <thread>

#include "plantbot/action.hpp"
#include "plantbot/drive.hpp"

namespace plantbot::gateway {

namespace {

std::string fmt(const char* format, double a, double b = 0, double c = 0) {
  char buf[128];
  std::snprintf(buf, sizeof buf, format, a, b, c);
  return buf;
}

std::int64_t steady_ns() {
  return std::chrono::duration_cast<std::chrono::nanoseconds>(std::chrono::steady_clock::now().time_since_epoch())
      .count();
}

telemetry::Pose pose_of(const world::WorldState& w) { return {w.pose.x, w.pose.y, w.pose.heading}; }

console::Command to_command(const scenario::TimedEvent& ev) {
  console::Command c;
  switch (ev.kind) {
    case scenario::EventKind::say:
      c.kind = console::CommandKind::user_utterance;
      c.text = ev.text;
      break;
    case scenario::EventKind::set_moisture:
      c.kind = console::CommandKind::set_soil_moisture;
      c.value = ev.value;
      break;
    case scenario::EventKind::water:
      c.kind = console::CommandKind::water;
      c.value = ev.value;
      break;
    case scenario::EventKind::add_obstacle:
      c.kind = console::CommandKind::add_obstacle;
      c.x = ev.obstacle.center.x;
      c.y = ev.obstacle.center.y;
      c.r = ev.obstacle.radius;
      break;
    case scenario::EventKind::pause: c.kind = console::CommandKind::pause; break;
    case scenario::EventKind::resume: c.kind = console::CommandKind::resume; break;
  }
  return c;
}

}  // namespace

config::RunConfig apply(config::RunConfig cfg, const Overrides& o) {
  if (o.seed) cfg.seed = o.seed;
  if (o.duration_s) cfg.duration_s = o.duration_s;
  if (o.backend) cfg.backend.kind = *o.backend;
  if (o.console_bind) cfg.console_bind = *o.console_bind;
  if (o.headless) cfg.console_bind.clear();
  cfg.validate();
  return cfg;
}

Runtime::Runtime(config::RunConfig cfg, std::unique_ptr<llm::Backend> backend)
    : cfg_(std::move(cfg)), backend_(std::move(backend)) {
  using config::StartupError;
  if (backend_ && cfg_.backend.kind == config::BackendKind::scripted && cfg_.backend.script.empty())
    cfg_.backend.script = cfg_.scenario;  // satisfied by the injected backend
  cfg_.validate();
  auto require_file = [](const std::filesystem::path& p, const char* subsystem) {
    if (!std::filesystem::is_regular_file(p)) throw StartupError(subsystem, "file not found: " + p.string());
  };
  require_file(cfg_.scenario, "scenario");
  for (const auto& [id, path] : cfg_.prompts) require_file(path, "prompts");

  try {
    scenario_ = scenario::load(cfg_.scenario);
  } catch (const std::exception& e) {
    throw StartupError("scenario", e.what());
  }
  if (cfg_.seed) {
    seed_ = *cfg_.seed;
  } else if (scenario_.seed) {
    seed_ = *scenario_.seed;
  } else {
    throw StartupError("config", "no seed given on the command line, in the config or in the scenario");
  }
  rng_.seed(seed_);
  world_ = scenario_.world;
  sim_ms_ = std::llround(world_.sim_time * 1000);

  if (cfg_.duration_s) end_ms_ = std::llround(*cfg_.duration_s * 1000);
  if (scenario_.end) {
    const std::int64_t e = std::llround(*scenario_.end * 1000);
    end_ms_ = end_ms_ ? std::min<std::int64_t>(*end_ms_, e) : e;
  }
  if (!end_ms_ && cfg_.clock == config::ClockMode::simulated && cfg_.pace == 0)
    throw StartupError("config", "an unpaced simulated run needs a duration or a scenario end");

  roles::RolePromptSet prompts;
  try {
    prompts = roles::load_prompts(cfg_.prompts);
    prompts.validate();
  } catch (const std::exception& e) {
    throw StartupError("prompts", e.what());
  }

  if (!backend_) {
    try {
      if (cfg_.backend.kind == config::BackendKind::scripted) {
        require_file(cfg_.backend.script, "backend");
        backend_ = std::make_unique<llm::ScriptedBackend>(llm::load_script(cfg_.backend.script),
                                                          cfg_.backend.default_response);
      } else {
        if (std::getenv(cfg_.backend.http.api_key_env.c_str()) == nullptr)
          throw StartupError("backend", "environment variable " + cfg_.backend.http.api_key_env + " is not set");
        backend_ = std::make_unique<llm::HttpBackend>(cfg_.backend.http);
      }
    } catch (const StartupError&) {
      throw;
    } catch (const std::exception& e) {
      throw StartupError("backend", e.what());
    }
  }

  try {
    sink_ = std::make_unique<telemetry::LogSink>(cfg_.log, cfg_.run_id, true);
  } catch (const std::exception& e) {
    throw StartupError("log", e.what());
  }
  sink_->set_observer([this](const telemetry::LogRecord& r) { emit(console::record_to_event(r)); });

  bus_ = std::make_unique<MessageBus>(cfg_.routes);
  motor_inbox_ = bus_->register_agent("world", 64);
  bus_->subscribe("world", topic::out("action2"));
  speaker_inbox_ = bus_->register_agent("speaker", 64);
  bus_->subscribe("speaker", topic::out("chat"));

  roles::WiringConfig wiring;
  wiring.history = cfg_.history;
  wiring.sensor_tick_ms = cfg_.sensor_tick_ms;
  wiring.vision_tick_ms = cfg_.vision_tick_ms;
  wiring.refresh_ms = cfg_.refresh_ms;
  wiring.motion = cfg_.motion;
  wiring.model = cfg_.backend.kind == config::BackendKind::live ? cfg_.backend.model : "scripted";
  wiring.temperature = cfg_.backend.temperature;
  wiring.max_tokens = cfg_.backend.max_tokens;
  agent::AgentContext ctx;
  ctx.sink = sink_.get();
  ctx.now_ms = [this] { return now_ms(); };
  try {
    agents_ = roles::wire_agents(prompts, *bus_, {{"*", backend_.get()}}, wiring, ctx);
  } catch (const std::exception& e) {
    throw StartupError("agents", e.what());
  }

  if (cfg_.osc) {
    try {
      osc_endpoint_ = std::make_unique<osc::Endpoint>(cfg_.osc->endpoint);
      const auto dir = cfg_.osc->export_traffic && cfg_.osc->import_traffic ? BridgeDirection::both
                       : cfg_.osc->import_traffic                           ? BridgeDirection::inbound
                                                                            : BridgeDirection::outbound;
      osc_bridge_ = std::make_unique<OscBridge>(*bus_, *osc_endpoint_, dir, "/plantbot/*/*",
                                                [this] { return now_ms(); });
    } catch (const std::exception& e) {
      throw StartupError("osc", e.what());
    }
  }

  if (!cfg_.console_bind.empty()) {
    try {
      const auto [host, port] = config::parse_host_port(cfg_.console_bind);
      console_ = std::make_unique<console::Server>(
          host, port, [this](const std::string& line) { return handle_command_line(line); });
    } catch (const std::exception& e) {
      throw StartupError("console", e.what());
    }
  }

  wall_origin_ns_ = steady_ns();
  log_soil();
}

Runtime::~Runtime() {
  if (console_) console_->stop();
  if (osc_bridge_) osc_bridge_->stop();
  agents_.stop_all();
  if (sink_) sink_->set_observer(nullptr);
}

std::optional<std::uint16_t> Runtime::console_port() const {
  if (!console_) return std::nullopt;
  return console_->port();
}

std::int64_t Runtime::now_ms() const noexcept {
  if (cfg_.clock == config::ClockMode::wall) return (steady_ns() - wall_origin_ns_) / 1'000'000;
  return clock_ms_.load();
}

void Runtime::set_listener(Listener l) {
  std::lock_guard lk(listener_mu_);
  listener_ = std::move(l);
}

void Runtime::emit(const console::Event& e) {
  Listener l;
  {
    std::lock_guard lk(listener_mu_);
    l = listener_;
  }
  if (l) l(e);
  if (console_) console_->broadcast(e);
}

void Runtime::emit_pose() {
  // World time, so the stamp freezes while the world is paused.
  const auto sim_ms = sim_ms_;
  emit({console::EventKind::pose, sim_ms,
        {{"x", world_.pose.x}, {"y", world_.pose.y}, {"heading", world_.pose.heading}, {"paused", paused_}}});
}

void Runtime::log_world(const std::string& text) {
  telemetry::LogRecord r;
  r.timestamp_ms = now_ms();
  r.agent = "world";
  r.kind = telemetry::Kind::world;
  r.text = text;
  r.pose = pose_of(world_);
  sink_->append(std::move(r));
}

void Runtime::log_soil() {
  log_world(roles::format_sensor_input(world_.soil, {cfg_.soil_dry_below, cfg_.soil_wet_above}));
}

console::Event Runtime::handle_command(const console::Command& cmd) {
  {
    std::lock_guard lk(cmd_mu_);
    commands_.push_back(cmd);
  }
  return {console::EventKind::agent_msg, now_ms(),
          {{"agent", "gateway"}, {"ack", console::to_string(cmd.kind)}, {"text", "queued for the next tick"}}};
}

console::Event Runtime::handle_command_line(const std::string& line) {
  try {
    return handle_command(console::parse_command(line));
  } catch (const console::CommandError& e) {
    return console::error_event(now_ms(), e.what());
  }
}

void Runtime::apply(const console::Command& cmd) {
  using console::CommandKind;
  switch (cmd.kind) {
    case CommandKind::user_utterance: {
      telemetry::LogRecord r;
      r.timestamp_ms = now_ms();
      r.agent = "human";
      r.kind = telemetry::Kind::utterance;
      r.text = cmd.text;
      sink_->append(std::move(r));
      bus_->publish("human", topic::in("human"), cmd.text, now_ms());
      break;
    }
    case CommandKind::set_soil_moisture:
      world_.soil.moisture = cmd.value;
      log_soil();
      break;
    case CommandKind::water:
      world::apply_water_event(world_, cmd.value);
      log_world(fmt("water %.2f L", cmd.value));
      break;
    case CommandKind::add_obstacle:
      world_.obstacles.push_back({{cmd.x, cmd.y}, cmd.r});
      log_world(fmt("obstacle added at (%.2f, %.2f) r=%.2f", cmd.x, cmd.y, cmd.r));
      break;
    case CommandKind::pause:
      if (!paused_) log_world("paused");
      paused_ = true;
      resume_at_ms_.reset();
      break;
    case CommandKind::resume:
      if (paused_) log_world("resumed");
      paused_ = false;
      resume_at_ms_.reset();
      break;
  }
}

void Runtime::apply(const scenario::TimedEvent& ev) {
  apply(to_command(ev));
  if (ev.kind == scenario::EventKind::pause && ev.value > 0)
    resume_at_ms_ = now_ms() + std::llround(ev.value * 1000);
}

void Runtime::drain_motor_inbox() {
  while (auto env = motor_inbox_->try_pop()) {
    action::VerbCommand vc;
    try {
      vc = action::parse_motor_command(env->payload);
    } catch (const action::ParseError& e) {
      telemetry::LogRecord r;
      r.timestamp_ms = now_ms();
      r.agent = "world";
      r.kind = telemetry::Kind::error;
      r.text = std::string("unparseable motor command, stopping: ") + e.what();
      sink_->append(std::move(r));
      vc = {action::Verb::stop, std::nullopt};
    }
    active_ = action::to_motor(vc, cfg_.motion);
    active_left_s_ = active_.duration;
    telemetry::LogRecord r;
    r.timestamp_ms = now_ms();
    r.agent = "world";
    r.kind = telemetry::Kind::motor;
    r.text = action::render(vc);
    r.pose = pose_of(world_);
    sink_->append(std::move(r));
  }
  while (speaker_inbox_->try_pop()) {
    // The speaker's output is the chat_reply event derived from the chat log record.
  }
}

void Runtime::advance_world(double dt) {
  if (active_left_s_ > 0) {
    const double step = std::min(dt, active_left_s_);
    MotorCommand cmd = active_;
    cmd.duration = step;
    const MotorCommand applied = drive::drive_tick(world_, cmd, step, cfg_.reflex);
    active_left_s_ -= step;
    const bool override_now = !(applied == cmd);
    if (override_now && !overriding_) {
      ++overrides_;
      telemetry::LogRecord r;
      r.timestamp_ms = now_ms();
      r.agent = "reflex";
      r.kind = telemetry::Kind::motor;
      r.text = applied.right > applied.left ? "reflex: rotate left" : "reflex: rotate right";
      r.pose = pose_of(world_);
      sink_->append(std::move(r));
    }
    overriding_ = override_now;
    if (world_.collided && !in_contact_) log_world(fmt("contact at (%.2f, %.2f)", world_.pose.x, world_.pose.y));
    in_contact_ = world_.collided;
  } else {
    overriding_ = false;
  }
  const bool watering = world_.pending_water > 0;
  world_.soil = world::soil_step(world_.soil, scenario_.soil_params, world_.sim_time, dt, world_.pending_water, rng_);
  world_.pending_water = 0;
  // Integer milliseconds keep scheduled times exact; summing 0.1 s drifts.
  sim_ms_ += cfg_.world_tick_ms;
  world_.sim_time = static_cast<double>(sim_ms_) / 1000.0;
  if (watering) log_soil();
}

void Runtime::feed_channels() {
  const auto sim_ms = sim_ms_;
  if (sim_ms >= next_sensor_ms_) {
    next_sensor_ms_ += cfg_.sensor_tick_ms;
    const std::string text = roles::format_sensor_input(world_.soil, {cfg_.soil_dry_below, cfg_.soil_wet_above});
    log_world(text);
    bus_->publish("soil", topic::in("soil"), text, now_ms());
  }
  if (cfg_.vision_tick_ms > 0 && sim_ms >= next_vision_ms_) {
    next_vision_ms_ += cfg_.vision_tick_ms;
    const auto obs = world::observe_scene(world_, scenario_.entities);
    bus_->publish("camera", topic::in("camera"), roles::format_vision_input(obs), now_ms());
  }
}

void Runtime::tick() {
  std::deque<console::Command> pending;
  {
    std::lock_guard lk(cmd_mu_);
    pending.swap(commands_);
  }
  for (const auto& c : pending) apply(c);
  while (next_event_ < scenario_.events.size() &&
         std::llround(scenario_.events[next_event_].at * 1000) <= now_ms()) {
    apply(scenario_.events[next_event_++]);
  }
  if (paused_ && resume_at_ms_ && now_ms() >= *resume_at_ms_) {
    paused_ = false;
    resume_at_ms_.reset();
    log_world("resumed");
  }

  drain_motor_inbox();
  if (!paused_) {
    feed_channels();
    advance_world(static_cast<double>(cfg_.world_tick_ms) / 1000.0);
  }
  if (cfg_.clock == config::ClockMode::simulated) {
    clock_ms_ += cfg_.world_tick_ms;
    agents_.run_until_quiescent();
    drain_motor_inbox();
  }
  if (last_pose_event_ms_ < 0 || now_ms() - last_pose_event_ms_ >= cfg_.pose_event_ms) {
    last_pose_event_ms_ = now_ms();
    emit_pose();
  }
}

std::uint64_t Runtime::run() {
  const bool wall = cfg_.clock == config::ClockMode::wall;
  if (wall) {
    wall_origin_ns_ = steady_ns();
    agents_.start_all();
  }
  const auto origin = std::chrono::steady_clock::now();
  std::uint64_t ticks = 0;
  while (!stop_.load() && (!end_ms_ || now_ms() < *end_ms_)) {
    tick();
    ++ticks;
    if (wall) {
      std::this_thread::sleep_until(origin + std::chrono::milliseconds(cfg_.world_tick_ms * ticks));
    } else if (cfg_.pace > 0) {
      std::this_thread::sleep_until(
          origin + std::chrono::duration_cast<std::chrono::steady_clock::duration>(
                       std::chrono::duration<double, std::milli>(static_cast<double>(now_ms()) / cfg_.pace)));
    }
  }
  if (wall) agents_.stop_all();
  sink_->flush();
  return ticks;
}

}  // namespace plantbot::gateway
