#include "plantbot/roles.hpp"

#include <array>
#include <cstdio>
#include <fstream>
#include <sstream>

namespace plantbot::roles {

namespace {

std::string fixed1(double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.1f", v);
  std::string s = buf;
  if (s == "-0.0") s = "0.0";
  return s;
}

std::string read_file(const std::filesystem::path& p) {
  std::ifstream in(p, std::ios::binary);
  if (!in) throw std::invalid_argument("missing prompt file: " + p.string());
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

std::string plural(std::size_t n, const char* one, const char* many) {
  return number_word(n) + " " + (n == 1 ? one : many);
}

}  // namespace

void RolePromptSet::validate() const {
  for (const char* id : kAgentIds) {
    auto it = prompts.find(id);
    if (it == prompts.end() || it->second.empty())
      throw std::invalid_argument(std::string("missing role prompt for ") + id);
  }
  if (prompts.at("chat").find(kHybridClause) == std::string::npos)
    throw std::invalid_argument(std::string("chat prompt must contain \"") + kHybridClause + "\"");
  const auto& a1 = prompts.at("action1");
  if (a1.find("[0]") == std::string::npos || a1.find("[1]") == std::string::npos)
    throw std::invalid_argument("action1 prompt must describe the leading [0]/[1] convention");
  if (prompts.at("action2").find("CMD:") == std::string::npos)
    throw std::invalid_argument("action2 prompt must describe the CMD: line convention");
}

const std::string& RolePromptSet::at(const std::string& id) const {
  auto it = prompts.find(id);
  if (it == prompts.end()) throw std::invalid_argument("missing role prompt for " + id);
  return it->second;
}

RolePromptSet load_prompts(const std::filesystem::path& dir) {
  std::map<std::string, std::filesystem::path> files;
  for (const char* id : kAgentIds) files[id] = dir / (std::string(id) + ".txt");
  return load_prompts(files);
}

RolePromptSet load_prompts(const std::map<std::string, std::filesystem::path>& files) {
  RolePromptSet set;
  for (const auto& [id, path] : files) set.prompts[id] = read_file(path);
  return set;
}

std::string soil_tag(const world::SoilState& s, const SoilThresholds& t) {
  if (s.moisture < t.dry_below) return "dry";
  if (s.moisture > t.wet_above) return "wet";
  return "ok";
}

std::string format_sensor_input(const world::SoilState& s, const SoilThresholds& t) {
  return "moisture=" + fixed1(s.moisture) + "% temp=" + fixed1(s.temperature) + "C pH=" +
         fixed1(s.ph) + " EC=" + fixed1(s.ec) + " N=" + fixed1(s.n) + " P=" + fixed1(s.p) +
         " K=" + fixed1(s.k) + " status=" + soil_tag(s, t);
}

std::string number_word(std::size_t n) {
  static constexpr std::array<const char*, 13> words{"no",    "one",  "two",   "three", "four",
                                                     "five",  "six",  "seven", "eight", "nine",
                                                     "ten",   "eleven", "twelve"};
  return n < words.size() ? words[n] : std::to_string(n);
}

std::string format_vision_input(const world::SceneObservation& obs) {
  std::size_t people = 0, obstacles = 0, landmarks = 0;
  for (const auto& e : obs.entities) {
    switch (e.cls) {
      case world::EntityClass::person: ++people; break;
      case world::EntityClass::obstacle: ++obstacles; break;
      case world::EntityClass::landmark: ++landmarks; break;
    }
  }
  std::string out;
  if (obs.entities.empty()) {
    out = "no objects visible.";
  } else {
    std::vector<std::string> parts;
    if (people) parts.push_back(plural(people, "person", "people"));
    if (obstacles) parts.push_back(plural(obstacles, "obstacle", "obstacles"));
    if (landmarks) parts.push_back(plural(landmarks, "landmark", "landmarks"));
    for (std::size_t i = 0; i < parts.size(); ++i) out += (i ? ", " : "") + parts[i];
    out += " visible:";
    for (std::size_t i = 0; i < obs.entities.size(); ++i) {
      const auto& e = obs.entities[i];
      out += (i ? "; " : " ");
      out += world::to_string(e.cls);
      if (!e.label.empty()) out += " (" + e.label + ")";
      char buf[96];
      std::snprintf(buf, sizeof buf, " at bearing %.0f deg, %.1f m", e.bearing_deg == 0 ? 0.0 : e.bearing_deg,
                    e.distance);
      out += buf;
    }
    out += ".";
  }
  auto state = [](bool free) { return free ? "clear" : "blocked"; };
  out += std::string(" free space: left ") + state(obs.free_left) + ", front " +
         state(obs.free_front) + ", right " + state(obs.free_right) + ".";
  return out;
}

std::string format_chat_input(const std::string& source, const std::string& payload) {
  if (source != "sensor" && source != "vision" && source != "human")
    throw std::invalid_argument("chat input from unknown source: " + source);
  return "[" + source + "] " + payload;
}

std::string format_action2_input(const std::string& source, const std::string& payload) {
  if (source != "action1" && source != "chat")
    throw std::invalid_argument("action2 input from unknown source: " + source);
  return "[" + source + "] " + payload;
}

agent::AgentSpec default_spec(const std::string& id, const RolePromptSet& prompts,
                              const WiringConfig& cfg) {
  agent::AgentSpec s;
  s.id = id;
  s.role_prompt = prompts.at(id);
  s.output_topic = topic::out(id);
  s.model = cfg.model;
  s.temperature = cfg.temperature;
  s.max_tokens = cfg.max_tokens;
  s.refresh_ms = cfg.refresh_ms;
  s.motion = cfg.motion;
  s.history_capacity = id == "vision" ? 0 : 10;
  if (auto it = cfg.history.find(id); it != cfg.history.end()) s.history_capacity = it->second;

  if (id == "sensor") {
    s.subscriptions = {topic::in("soil")};
    s.tick_ms = cfg.sensor_tick_ms;
    s.coalesce = true;
  } else if (id == "vision") {
    s.subscriptions = {topic::in("camera")};
    s.tick_ms = cfg.vision_tick_ms;
    s.coalesce = true;
  } else if (id == "chat") {
    s.subscriptions = {topic::out("sensor"), topic::out("vision"), topic::in("human")};
  } else if (id == "action1") {
    s.subscriptions = {topic::out("chat")};
    s.postprocessor = agent::Postprocessor::decision;
  } else if (id == "action2") {
    s.subscriptions = {topic::out("action1"), topic::out("chat")};
    s.postprocessor = agent::Postprocessor::motor;
  } else {
    throw std::invalid_argument("unknown agent id: " + id);
  }
  return s;
}

agent::Agent& AgentSystem::get(const std::string& id) {
  for (auto& a : agents) {
    if (a->spec().id == id) return *a;
  }
  throw std::out_of_range("no agent " + id);
}

std::size_t AgentSystem::run_until_quiescent(std::size_t max_rounds) {
  std::size_t handled = 0;
  for (std::size_t round = 0; round < max_rounds; ++round) {
    bool any = false;
    for (auto& a : agents) {
      if (a->process_pending()) {
        any = true;
        ++handled;
      }
    }
    if (!any) break;
  }
  return handled;
}

void AgentSystem::start_all() {
  for (auto& a : agents) a->start();
}

void AgentSystem::stop_all() {
  for (auto& a : agents) a->stop();
}

AgentSystem wire_agents(const RolePromptSet& prompts, MessageBus& bus,
                        const std::map<std::string, llm::Backend*>& backends,
                        const WiringConfig& cfg, const agent::AgentContext& base_ctx) {
  prompts.validate();
  AgentSystem sys;
  for (const char* raw : kAgentIds) {
    const std::string id = raw;
    llm::Backend* backend = nullptr;
    if (auto it = backends.find(id); it != backends.end()) backend = it->second;
    else if (auto any = backends.find("*"); any != backends.end()) backend = any->second;
    if (backend == nullptr) throw std::invalid_argument("missing backend for agent " + id);

    auto spec = default_spec(id, prompts, cfg);
    for (const auto& sub : spec.subscriptions) {
      if (!bus.routes().allows(sub, id))
        throw std::invalid_argument("route table has no edge " + sub + " -> " + id);
    }

    agent::AgentContext ctx = base_ctx;
    if (id == "chat") {
      ctx.format_input = [](const Envelope& e) { return format_chat_input(e.source, e.payload); };
    } else if (id == "action2") {
      ctx.format_input = [](const Envelope& e) { return format_action2_input(e.source, e.payload); };
    }
    sys.agents.push_back(std::make_unique<agent::Agent>(std::move(spec), bus, *backend, std::move(ctx)));
  }
  return sys;
}

}  // namespace plantbot::roles
