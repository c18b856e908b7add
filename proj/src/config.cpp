#include "plantbot/config.hpp"

#include <charconv>
#include <fstream>
#include <set>
#include <sstream>

#include <json.hpp>

#include "plantbot/roles.hpp"

namespace plantbot::config {

using nlohmann::json;

namespace {

[[noreturn]] void fail(const std::string& what) { throw StartupError("config", what); }

void only_keys(const json& obj, const std::string& where, std::initializer_list<const char*> allowed) {
  if (!obj.is_object()) fail(where + " must be an object");
  const std::set<std::string> ok(allowed.begin(), allowed.end());
  for (const auto& [k, v] : obj.items()) {
    if (!ok.count(k)) fail("unknown key '" + k + "' in " + where);
  }
}

template <typename T>
void read(const json& obj, const char* key, T& out, const std::string& where) {
  if (!obj.contains(key)) return;
  try {
    out = obj.at(key).get<T>();
  } catch (const json::exception&) {
    fail(where + "." + key + " has the wrong type");
  }
}

std::filesystem::path resolve(const std::filesystem::path& base, const std::string& p) {
  std::filesystem::path path(p);
  if (path.is_relative() && !base.empty()) path = base / path;
  return path.lexically_normal();
}

osc::Peer peer_from(const std::string& text) {
  const auto [host, port] = parse_host_port(text);
  return {host, port};
}

}  // namespace

double parse_duration(const std::string& text) {
  if (text.empty()) throw std::invalid_argument("empty duration");
  double scale = 1;
  std::string digits = text;
  switch (text.back()) {
    case 's': digits.pop_back(); break;
    case 'm': scale = 60; digits.pop_back(); break;
    case 'h': scale = 3600; digits.pop_back(); break;
    default: break;
  }
  double v = 0;
  const auto [ptr, ec] = std::from_chars(digits.data(), digits.data() + digits.size(), v);
  if (digits.empty() || ec != std::errc{} || ptr != digits.data() + digits.size() || v <= 0)
    throw std::invalid_argument("bad duration '" + text + "'");
  return v * scale;
}

std::pair<std::string, std::uint16_t> parse_host_port(const std::string& text) {
  const auto colon = text.rfind(':');
  if (colon == std::string::npos || colon == 0) throw std::invalid_argument("expected HOST:PORT, got '" + text + "'");
  const std::string port_text = text.substr(colon + 1);
  int port = -1;
  const auto [ptr, ec] = std::from_chars(port_text.data(), port_text.data() + port_text.size(), port);
  if (ec != std::errc{} || ptr != port_text.data() + port_text.size() || port < 0 || port > 65535)
    throw std::invalid_argument("bad port in '" + text + "'");
  return {text.substr(0, colon), static_cast<std::uint16_t>(port)};
}

void RunConfig::validate() const {
  if (scenario.empty()) fail("scenario path missing");
  for (const char* id : roles::kAgentIds) {
    if (!prompts.count(id)) fail(std::string("no prompt file for agent '") + id + "'");
  }
  if (backend.kind == BackendKind::scripted && backend.script.empty()) fail("scripted backend needs a script");
  if (backend.kind == BackendKind::live && backend.http.base_url.empty()) fail("live backend needs base_url");
  if (backend.temperature < 0) fail("temperature must be >= 0");
  if (backend.max_tokens <= 0) fail("max_tokens must be positive");
  if (world_tick_ms <= 0) fail("world tick must be positive");
  if (sensor_tick_ms <= 0) fail("sensor tick must be positive");
  if (vision_tick_ms < 0) fail("vision tick must be >= 0");
  if (pose_event_ms <= 0) fail("pose event interval must be positive");
  if (refresh_ms < 0) fail("refresh_ms must be >= 0");
  if (reflex.d_safe <= 0 || reflex.sector_deg <= 0 || reflex.sector_deg > 180 || reflex.horizon_s < 0) fail("reflex parameters out of range");
  if (soil_dry_below > soil_wet_above) fail("soil thresholds out of order");
  if (pace < 0) fail("pace must be >= 0");
  if (duration_s && *duration_s <= 0) fail("duration must be positive");
  if (!console_bind.empty()) {
    try {
      parse_host_port(console_bind);
    } catch (const std::invalid_argument& e) {
      fail(std::string("console: ") + e.what());
    }
  }
  const RouteTable needed = RouteTable::standard();
  if (!routes.contains_all(needed)) fail("route table lacks edges of the standard topology");
  if (osc) {
    try {
      osc->endpoint.validate();
    } catch (const std::invalid_argument& e) {
      fail(std::string("osc: ") + e.what());
    }
  }
}

void RunConfig::validate_files() const {
  validate();
  auto exists = [](const std::filesystem::path& p, const std::string& what) {
    if (!std::filesystem::is_regular_file(p)) throw StartupError(what, "file not found: " + p.string());
  };
  exists(scenario, "scenario");
  for (const auto& [id, path] : prompts) exists(path, "prompts");
  if (backend.kind == BackendKind::scripted) exists(backend.script, "backend");
}

RunConfig parse(const std::string& json_text, const std::filesystem::path& base_dir) {
  json doc;
  try {
    doc = json::parse(json_text);
  } catch (const json::parse_error& e) {
    fail(std::string("invalid JSON: ") + e.what());
  }
  only_keys(doc, "config",
            {"run_id", "scenario", "prompts", "backend", "routes", "ticks", "refresh_ms", "history", "reflex",
             "motion", "soil_thresholds", "log", "seed", "console", "clock", "pace", "duration", "osc"});
  RunConfig c;

  read(doc, "run_id", c.run_id, "config");
  std::string path;
  read(doc, "scenario", path, "config");
  if (!path.empty()) c.scenario = resolve(base_dir, path);

  if (doc.contains("prompts")) {
    const auto& p = doc["prompts"];
    if (p.is_string()) {
      const auto dir = resolve(base_dir, p.get<std::string>());
      for (const char* id : roles::kAgentIds) c.prompts[id] = dir / (std::string(id) + ".txt");
    } else if (p.is_object()) {
      for (const auto& [id, file] : p.items()) {
        if (!file.is_string()) fail("prompts." + id + " must be a path");
        c.prompts[id] = resolve(base_dir, file.get<std::string>());
      }
    } else {
      fail("prompts must be a directory or an object of paths");
    }
  }

  if (doc.contains("backend")) {
    const auto& b = doc["backend"];
    only_keys(b, "backend", {"kind", "script", "default", "base_url", "path", "model", "api_key_env",
                             "temperature", "max_tokens", "timeout_ms", "retries", "backoff_ms"});
    std::string kind = "scripted";
    read(b, "kind", kind, "backend");
    if (kind == "scripted") {
      c.backend.kind = BackendKind::scripted;
    } else if (kind == "live") {
      c.backend.kind = BackendKind::live;
    } else {
      fail("backend.kind must be 'scripted' or 'live'");
    }
    std::string script;
    read(b, "script", script, "backend");
    if (!script.empty()) c.backend.script = resolve(base_dir, script);
    read(b, "default", c.backend.default_response, "backend");
    read(b, "base_url", c.backend.http.base_url, "backend");
    read(b, "path", c.backend.http.path, "backend");
    read(b, "api_key_env", c.backend.http.api_key_env, "backend");
    read(b, "model", c.backend.model, "backend");
    read(b, "temperature", c.backend.temperature, "backend");
    read(b, "max_tokens", c.backend.max_tokens, "backend");
    read(b, "retries", c.backend.http.retries, "backend");
    std::int64_t ms = c.backend.http.timeout.count();
    read(b, "timeout_ms", ms, "backend");
    c.backend.http.timeout = std::chrono::milliseconds(ms);
    ms = c.backend.http.backoff.count();
    read(b, "backoff_ms", ms, "backend");
    c.backend.http.backoff = std::chrono::milliseconds(ms);
  }

  if (doc.contains("routes")) {
    const auto& r = doc["routes"];
    if (!r.is_array()) fail("routes must be an array");
    RouteTable table;
    for (const auto& e : r) {
      only_keys(e, "routes[]", {"pattern", "subscriber"});
      RouteEdge edge;
      read(e, "pattern", edge.pattern, "routes[]");
      read(e, "subscriber", edge.subscriber, "routes[]");
      try {
        table.add(edge);
      } catch (const std::exception& ex) {
        fail(std::string("routes: ") + ex.what());
      }
    }
    c.routes = std::move(table);
  }

  if (doc.contains("ticks")) {
    const auto& t = doc["ticks"];
    only_keys(t, "ticks", {"world_ms", "sensor_ms", "vision_ms", "pose_event_ms"});
    read(t, "world_ms", c.world_tick_ms, "ticks");
    read(t, "sensor_ms", c.sensor_tick_ms, "ticks");
    read(t, "vision_ms", c.vision_tick_ms, "ticks");
    read(t, "pose_event_ms", c.pose_event_ms, "ticks");
  }
  read(doc, "refresh_ms", c.refresh_ms, "config");

  if (doc.contains("history")) {
    const auto& h = doc["history"];
    if (!h.is_object()) fail("history must be an object");
    for (const auto& [id, n] : h.items()) {
      if (!n.is_number_integer() || n.get<std::int64_t>() < 0) fail("history." + id + " must be an integer >= 0");
      c.history[id] = n.get<std::size_t>();
    }
  }

  if (doc.contains("reflex")) {
    const auto& r = doc["reflex"];
    only_keys(r, "reflex", {"enabled", "d_safe", "sector_deg", "turn_speed", "horizon_s"});
    read(r, "enabled", c.reflex.enabled, "reflex");
    read(r, "d_safe", c.reflex.d_safe, "reflex");
    read(r, "sector_deg", c.reflex.sector_deg, "reflex");
    read(r, "turn_speed", c.reflex.turn_speed, "reflex");
    read(r, "horizon_s", c.reflex.horizon_s, "reflex");
  }

  if (doc.contains("motion")) {
    const auto& m = doc["motion"];
    only_keys(m, "motion", {"v_max", "speed", "turn_speed", "default_distance", "default_angle", "max_duration"});
    read(m, "v_max", c.motion.v_max, "motion");
    read(m, "speed", c.motion.speed, "motion");
    read(m, "turn_speed", c.motion.turn_speed, "motion");
    read(m, "default_distance", c.motion.default_distance, "motion");
    read(m, "default_angle", c.motion.default_angle, "motion");
    read(m, "max_duration", c.motion.max_duration, "motion");
  }

  if (doc.contains("soil_thresholds")) {
    const auto& s = doc["soil_thresholds"];
    only_keys(s, "soil_thresholds", {"dry_below", "wet_above"});
    read(s, "dry_below", c.soil_dry_below, "soil_thresholds");
    read(s, "wet_above", c.soil_wet_above, "soil_thresholds");
  }

  std::string log;
  read(doc, "log", log, "config");
  if (!log.empty()) c.log = resolve(base_dir, log);

  if (doc.contains("seed")) {
    if (!doc["seed"].is_number_unsigned()) fail("seed must be a non-negative integer");
    c.seed = doc["seed"].get<std::uint64_t>();
  }
  read(doc, "console", c.console_bind, "config");

  std::string clock = "simulated";
  read(doc, "clock", clock, "config");
  if (clock == "simulated") {
    c.clock = ClockMode::simulated;
  } else if (clock == "wall") {
    c.clock = ClockMode::wall;
  } else {
    fail("clock must be 'simulated' or 'wall'");
  }
  read(doc, "pace", c.pace, "config");

  if (doc.contains("duration")) {
    const auto& d = doc["duration"];
    try {
      c.duration_s = d.is_string() ? parse_duration(d.get<std::string>()) : d.get<double>();
    } catch (const std::exception&) {
      fail("duration must be seconds or a string like '10m'");
    }
  }

  if (doc.contains("osc")) {
    const auto& o = doc["osc"];
    only_keys(o, "osc", {"bind", "peers", "export", "import"});
    OscConfig oc;
    try {
      std::string bind;
      read(o, "bind", bind, "osc");
      if (!bind.empty()) {
        const auto [host, port] = parse_host_port(bind);
        oc.endpoint.bind_host = host;
        oc.endpoint.bind_port = port;
      }
      std::vector<std::string> peers;
      read(o, "peers", peers, "osc");
      for (const auto& p : peers) oc.endpoint.peers.push_back(peer_from(p));
    } catch (const std::invalid_argument& e) {
      fail(std::string("osc: ") + e.what());
    }
    read(o, "export", oc.export_traffic, "osc");
    read(o, "import", oc.import_traffic, "osc");
    c.osc = oc;
  }

  c.validate();
  return c;
}

RunConfig load(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) fail("cannot open " + path.string());
  std::stringstream ss;
  ss << in.rdbuf();
  RunConfig c = parse(ss.str(), path.parent_path());
  c.source = path;
  return c;
}

}  // namespace plantbot::config
