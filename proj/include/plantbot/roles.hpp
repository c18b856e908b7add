#pragma once

#include <filesystem>
#include <map>
#include <memory>
#include <string>
#include <vector>

#include "plantbot/agent.hpp"
#include "plantbot/world.hpp"

namespace plantbot::roles {

inline constexpr const char* kAgentIds[] = {"sensor", "vision", "chat", "action1", "action2"};
inline constexpr const char* kHybridClause = "hybrid system of plant and robot";

/// One role prompt per agent id.
struct RolePromptSet {
  std::map<std::string, std::string> prompts;

  /// Throws std::invalid_argument naming the first missing prompt or the
  /// first prompt that lacks its required convention.
  void validate() const;
  const std::string& at(const std::string& id) const;
};

/// Reads `<dir>/<id>.txt` for every agent.
RolePromptSet load_prompts(const std::filesystem::path& dir);
RolePromptSet load_prompts(const std::map<std::string, std::filesystem::path>& files);

struct SoilThresholds {
  double dry_below = 30;  // % moisture
  double wet_above = 70;
};

std::string soil_tag(const world::SoilState& s, const SoilThresholds& t = {});

/// "moisture=<v>% temp=<v>C pH=<v> EC=<v> N=<v> P=<v> K=<v> status=<dry|ok|wet>",
/// every value rounded to one decimal.
std::string format_sensor_input(const world::SoilState& s, const SoilThresholds& t = {});

/// Count summary ("two people, one obstacle visible"), per-entity bearing and
/// distance, then a free-space summary.
std::string format_vision_input(const world::SceneObservation& obs);

/// "[<source>] <payload>" for source in {sensor, vision, human}; throws
/// std::invalid_argument for any other source.
std::string format_chat_input(const std::string& source, const std::string& payload);
/// Same tagging for Action-2's two inputs: action1 and chat.
std::string format_action2_input(const std::string& source, const std::string& payload);

std::string number_word(std::size_t n);

struct WiringConfig {
  std::map<std::string, std::size_t> history;  // per agent, defaults 10 (vision 0)
  std::int64_t sensor_tick_ms = 5000;
  std::int64_t vision_tick_ms = 3000;
  std::int64_t refresh_ms = 30000;
  action::MotionParams motion;
  std::string model = "scripted";
  double temperature = 0.7;
  int max_tokens = 256;
};

/// Default spec for one of the five agents.
agent::AgentSpec default_spec(const std::string& id, const RolePromptSet& prompts,
                              const WiringConfig& cfg = {});

/// The running agent network.
struct AgentSystem {
  std::vector<std::unique_ptr<agent::Agent>> agents;  // sensor, vision, chat, action1, action2

  agent::Agent& get(const std::string& id);
  /// Processes queued inputs round-robin in fixed order until every inbox is
  /// empty; returns the number of inputs handled.
  std::size_t run_until_quiescent(std::size_t max_rounds = 10000);
  void start_all();
  void stop_all();
};

/// Builds and subscribes all five agents. `backends` maps agent id to its
/// backend; a "*" entry serves agents without their own. Throws
/// std::invalid_argument when a prompt or backend is missing or the route
/// table lacks an edge the agents need.
AgentSystem wire_agents(const RolePromptSet& prompts, MessageBus& bus,
                        const std::map<std::string, llm::Backend*>& backends,
                        const WiringConfig& cfg, const agent::AgentContext& base_ctx);

}  // namespace plantbot::roles
