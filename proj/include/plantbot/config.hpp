#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "plantbot/action.hpp"
#include "plantbot/bus.hpp"
#include "plantbot/llm.hpp"
#include "plantbot/udp_endpoint.hpp"

namespace plantbot::config {

/// A startup failure attributed to one subsystem ("config", "scenario",
/// "prompts", "backend", "log", "console", "osc").
class StartupError : public std::runtime_error {
 public:
  StartupError(std::string subsystem, const std::string& what)
      : std::runtime_error(subsystem + ": " + what), subsystem_(std::move(subsystem)) {}
  const std::string& subsystem() const noexcept { return subsystem_; }

 private:
  std::string subsystem_;
};

enum class BackendKind { scripted, live };
enum class ClockMode { simulated, wall };

struct BackendConfig {
  BackendKind kind = BackendKind::scripted;
  std::filesystem::path script;         // scripted
  std::string default_response = "...";
  llm::HttpConfig http;                 // live
  std::string model = "gpt-4o";
  double temperature = 0.7;
  int max_tokens = 256;
};

struct OscConfig {
  osc::EndpointConfig endpoint;
  bool export_traffic = true;
  bool import_traffic = false;
};

struct RunConfig {
  std::filesystem::path source;  // the config file itself, empty when built in code
  std::filesystem::path scenario;
  std::map<std::string, std::filesystem::path> prompts;  // agent id -> file
  BackendConfig backend;
  RouteTable routes = RouteTable::standard();
  std::int64_t world_tick_ms = 100;
  std::int64_t sensor_tick_ms = 5000;
  std::int64_t vision_tick_ms = 3000;  // 0 disables the camera feed
  std::int64_t pose_event_ms = 500;
  std::int64_t refresh_ms = 30000;
  std::map<std::string, std::size_t> history;
  action::ReflexParams reflex;
  action::MotionParams motion;
  double soil_dry_below = 30;
  double soil_wet_above = 70;
  std::filesystem::path log;  // empty: in-memory only
  std::string run_id = "run";
  std::optional<std::uint64_t> seed;
  std::string console_bind;  // "HOST:PORT", empty disables the console
  ClockMode clock = ClockMode::simulated;
  double pace = 0;  // simulated clock only: 0 runs flat out, 1 tracks wall time
  std::optional<double> duration_s;
  std::optional<OscConfig> osc;

  /// Checks the invariants that do not need the file system.
  void validate() const;
  /// Also checks that every referenced file exists.
  void validate_files() const;
};

/// JSON document; relative paths resolve against the config file's directory.
/// Throws StartupError("config", ...) on any schema problem.
RunConfig parse(const std::string& json_text, const std::filesystem::path& base_dir = {});
RunConfig load(const std::filesystem::path& path);

/// "10s", "2m", "600" (seconds), "1.5h". Throws std::invalid_argument.
double parse_duration(const std::string& text);
/// "HOST:PORT". Throws std::invalid_argument.
std::pair<std::string, std::uint16_t> parse_host_port(const std::string& text);

}  // namespace plantbot::config
