#include "plantbot/scenario.hpp"

#include <algorithm>
#include <charconv>
#include <fstream>
#include <map>
#include <set>
#include <sstream>

namespace plantbot::scenario {

namespace {

std::vector<std::string> words(const std::string& line) {
  std::istringstream in(line);
  std::vector<std::string> out;
  for (std::string w; in >> w;) out.push_back(w);
  return out;
}

double number(const std::string& s, int line) {
  double v = 0;
  const auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc{} || ptr != s.data() + s.size()) throw ScenarioError(line, "not a number: '" + s + "'");
  return v;
}

// key=value options after the positional arguments.
std::map<std::string, double> options(const std::vector<std::string>& w, std::size_t from, int line) {
  std::map<std::string, double> out;
  for (std::size_t i = from; i < w.size(); ++i) {
    const auto eq = w[i].find('=');
    if (eq == std::string::npos) throw ScenarioError(line, "expected key=value, got '" + w[i] + "'");
    out[w[i].substr(0, eq)] = number(w[i].substr(eq + 1), line);
  }
  return out;
}

void need(const std::vector<std::string>& w, std::size_t n, int line) {
  if (w.size() < n) throw ScenarioError(line, "'" + w[0] + "' needs " + std::to_string(n - 1) + " arguments");
}

void assign(double& field, const std::map<std::string, double>& opts, const char* key,
            std::set<std::string>& used) {
  if (auto it = opts.find(key); it != opts.end()) {
    field = it->second;
    used.insert(key);
  }
}

void reject_unused(const std::map<std::string, double>& opts, const std::set<std::string>& used, int line) {
  for (const auto& [k, v] : opts) {
    if (!used.count(k)) throw ScenarioError(line, "unknown option '" + k + "'");
  }
}

}  // namespace

Scenario parse(const std::string& text) {
  Scenario sc;
  std::istringstream in(text);
  std::string raw;
  int lineno = 0;
  while (std::getline(in, raw)) {
    ++lineno;
    const auto hash = raw.find('#');
    const std::string line = hash == std::string::npos ? raw : raw.substr(0, hash);
    const auto w = words(line);
    if (w.empty()) continue;
    const auto& key = w[0];

    if (key == "seed") {
      need(w, 2, lineno);
      try {
        sc.seed = std::stoull(w[1]);
      } catch (const std::exception&) {
        throw ScenarioError(lineno, "seed must be a non-negative integer");
      }
    } else if (key == "bounds") {
      need(w, 5, lineno);
      Bounds b{number(w[1], lineno), number(w[2], lineno), number(w[3], lineno), number(w[4], lineno)};
      if (b.xmax <= b.xmin || b.ymax <= b.ymin) throw ScenarioError(lineno, "empty bounds");
      sc.world.bounds = b;
    } else if (key == "robot") {
      need(w, 4, lineno);
      sc.world.pose = {number(w[1], lineno), number(w[2], lineno),
                       normalize_angle(deg2rad(number(w[3], lineno)))};
    } else if (key == "track_width") {
      need(w, 2, lineno);
      sc.world.track_width = number(w[1], lineno);
      if (sc.world.track_width <= 0) throw ScenarioError(lineno, "track width must be positive");
    } else if (key == "soil") {
      const auto o = options(w, 1, lineno);
      std::set<std::string> used;
      auto& s = sc.world.soil;
      assign(s.moisture, o, "moisture", used);
      assign(s.temperature, o, "temp", used);
      assign(s.ph, o, "ph", used);
      assign(s.ec, o, "ec", used);
      assign(s.n, o, "n", used);
      assign(s.p, o, "p", used);
      assign(s.k, o, "k", used);
      reject_unused(o, used, lineno);
      if (s.moisture < 0 || s.moisture > 100 || s.ph < 0 || s.ph > 14 || s.ec < 0 || s.n < 0 ||
          s.p < 0 || s.k < 0)
        throw ScenarioError(lineno, "soil value out of range");
    } else if (key == "soil_model") {
      const auto o = options(w, 1, lineno);
      std::set<std::string> used;
      auto& m = sc.soil_params;
      assign(m.decay_per_min, o, "decay_per_min", used);
      assign(m.water_gain, o, "water_gain", used);
      assign(m.temp_amplitude, o, "temp_amplitude", used);
      assign(m.temp_peak_hour, o, "temp_peak_hour", used);
      assign(m.ph_sigma, o, "ph_sigma", used);
      assign(m.ec_sigma, o, "ec_sigma", used);
      assign(m.nutrient_sigma, o, "nutrient_sigma", used);
      reject_unused(o, used, lineno);
    } else if (key == "obstacle") {
      need(w, 4, lineno);
      const Circle c{{number(w[1], lineno), number(w[2], lineno)}, number(w[3], lineno)};
      if (c.radius <= 0) throw ScenarioError(lineno, "obstacle radius must be positive");
      sc.world.obstacles.push_back(c);
    } else if (key == "wall") {
      need(w, 5, lineno);
      sc.world.walls.push_back({{number(w[1], lineno), number(w[2], lineno)},
                                {number(w[3], lineno), number(w[4], lineno)}});
    } else if (key == "person" || key == "landmark") {
      const bool person = key == "person";
      const std::size_t pos = person ? 1 : 2;
      need(w, pos + 2, lineno);
      world::Entity e;
      e.cls = person ? world::EntityClass::person : world::EntityClass::landmark;
      if (!person) e.label = w[1];
      e.position = {number(w[pos], lineno), number(w[pos + 1], lineno)};
      const auto o = options(w, pos + 2, lineno);
      std::set<std::string> used;
      assign(e.appear, o, "from", used);
      assign(e.vanish, o, "to", used);
      reject_unused(o, used, lineno);
      sc.entities.push_back(std::move(e));
    } else if (key == "at") {
      need(w, 3, lineno);
      TimedEvent ev;
      ev.at = number(w[1], lineno);
      if (ev.at < 0) throw ScenarioError(lineno, "event time must be >= 0");
      const auto& verb = w[2];
      if (verb == "say") {
        need(w, 4, lineno);
        ev.kind = EventKind::say;
        // Keep the original spacing of the utterance.
        const auto start = line.find(w[3], line.find(verb) + verb.size());
        ev.text = line.substr(start);
        while (!ev.text.empty() && std::isspace(static_cast<unsigned char>(ev.text.back()))) ev.text.pop_back();
      } else if (verb == "set_moisture") {
        need(w, 4, lineno);
        ev.kind = EventKind::set_moisture;
        ev.value = number(w[3], lineno);
        if (ev.value < 0 || ev.value > 100) throw ScenarioError(lineno, "moisture must be in [0, 100]");
      } else if (verb == "water") {
        need(w, 4, lineno);
        ev.kind = EventKind::water;
        ev.value = number(w[3], lineno);
        if (ev.value <= 0) throw ScenarioError(lineno, "water amount must be positive");
      } else if (verb == "add_obstacle") {
        need(w, 6, lineno);
        ev.kind = EventKind::add_obstacle;
        ev.obstacle = {{number(w[3], lineno), number(w[4], lineno)}, number(w[5], lineno)};
        if (ev.obstacle.radius <= 0) throw ScenarioError(lineno, "obstacle radius must be positive");
      } else if (verb == "pause") {
        ev.kind = EventKind::pause;
        ev.value = w.size() > 3 ? number(w[3], lineno) : 0;
      } else if (verb == "resume") {
        ev.kind = EventKind::resume;
      } else {
        throw ScenarioError(lineno, "unknown event '" + verb + "'");
      }
      sc.events.push_back(std::move(ev));
    } else if (key == "end") {
      need(w, 2, lineno);
      sc.end = number(w[1], lineno);
    } else {
      throw ScenarioError(lineno, "unknown directive '" + key + "'");
    }
  }
  std::stable_sort(sc.events.begin(), sc.events.end(),
                   [](const TimedEvent& a, const TimedEvent& b) { return a.at < b.at; });
  for (const auto& c : sc.world.obstacles) {
    if (point_circle_distance({sc.world.pose.x, sc.world.pose.y}, c) < 0)
      throw ScenarioError(0, "robot starts inside an obstacle");
  }
  return sc;
}

Scenario load(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open scenario " + path.string());
  std::stringstream ss;
  ss << in.rdbuf();
  return parse(ss.str());
}

}  // namespace plantbot::scenario
