#include "plantbot/bus.hpp"

#include <algorithm>

namespace plantbot {

namespace topic {

namespace {

constexpr std::string_view kRoot = "plantbot";

std::vector<std::string_view> split(std::string_view path) {
  std::vector<std::string_view> parts;
  if (path.empty() || path.front() != '/') return parts;
  std::size_t start = 1;
  for (;;) {
    const auto slash = path.find('/', start);
    parts.push_back(path.substr(start, slash == std::string_view::npos ? path.npos : slash - start));
    if (slash == std::string_view::npos) break;
    start = slash + 1;
  }
  return parts;
}

bool valid_name(std::string_view name) {
  if (name.empty()) return false;
  return std::all_of(name.begin(), name.end(), [](char c) {
    return (c >= 'a' && c <= 'z') || (c >= '0' && c <= '9') || c == '_';
  });
}

bool valid_kind(std::string_view kind) { return kind == "in" || kind == "out"; }

}  // namespace

bool valid(std::string_view t) noexcept {
  const auto parts = split(t);
  return parts.size() == 3 && parts[0] == kRoot && valid_name(parts[1]) && valid_kind(parts[2]);
}

bool valid_pattern(std::string_view p) noexcept {
  const auto parts = split(p);
  return parts.size() == 3 && parts[0] == kRoot && (parts[1] == "*" || valid_name(parts[1])) &&
         (parts[2] == "*" || valid_kind(parts[2]));
}

bool matches(std::string_view pattern, std::string_view t) noexcept {
  const auto pp = split(pattern);
  const auto tp = split(t);
  if (pp.size() != tp.size() || pp.empty()) return false;
  for (std::size_t i = 0; i < pp.size(); ++i) {
    if (pp[i] != "*" && pp[i] != tp[i]) return false;
  }
  return true;
}

std::string name_of(std::string_view t) {
  if (!valid(t)) return {};
  return std::string(split(t)[1]);
}

std::string out(std::string_view name) { return "/plantbot/" + std::string(name) + "/out"; }
std::string in(std::string_view name) { return "/plantbot/" + std::string(name) + "/in"; }

}  // namespace topic

RouteTable::RouteTable(std::vector<RouteEdge> edges) {
  for (auto& e : edges) add(std::move(e));
}

RouteTable RouteTable::standard() {
  return RouteTable({
      {"/plantbot/soil/in", "sensor"},
      {"/plantbot/camera/in", "vision"},
      {"/plantbot/sensor/out", "chat"},
      {"/plantbot/vision/out", "chat"},
      {"/plantbot/human/in", "chat"},
      {"/plantbot/chat/out", "speaker"},
      {"/plantbot/chat/out", "action1"},
      {"/plantbot/chat/out", "action2"},
      {"/plantbot/action1/out", "action2"},
      {"/plantbot/action2/out", "world"},
  });
}

void RouteTable::add(RouteEdge edge) {
  if (!topic::valid_pattern(edge.pattern))
    throw BusError("route pattern outside the /plantbot/<agent>/<in|out> namespace: " +
                   edge.pattern);
  if (edge.subscriber.empty()) throw BusError("route edge without subscriber");
  if (std::find(edges_.begin(), edges_.end(), edge) == edges_.end())
    edges_.push_back(std::move(edge));
}

bool RouteTable::allows(std::string_view t, std::string_view subscriber) const {
  return std::any_of(edges_.begin(), edges_.end(), [&](const RouteEdge& e) {
    return e.subscriber == subscriber && topic::matches(e.pattern, t);
  });
}

bool RouteTable::contains_all(const RouteTable& required) const {
  return std::all_of(required.edges().begin(), required.edges().end(), [&](const RouteEdge& e) {
    return std::find(edges_.begin(), edges_.end(), e) != edges_.end();
  });
}

MessageBus::MessageBus(RouteTable routes, std::size_t default_bound)
    : routes_(std::move(routes)), default_bound_(default_bound == 0 ? kDefaultQueueBound : default_bound) {}

std::shared_ptr<Inbox> MessageBus::register_agent(const std::string& agent_id, std::size_t bound) {
  std::unique_lock lock(registry_mu_);
  auto it = subscribers_.find(agent_id);
  if (it != subscribers_.end()) return it->second.inbox;
  auto inbox = std::make_shared<Inbox>(bound == 0 ? default_bound_ : bound);
  subscribers_.emplace(agent_id, Subscriber{inbox, {}});
  return inbox;
}

bool MessageBus::registered(const std::string& agent_id) const {
  std::shared_lock lock(registry_mu_);
  return subscribers_.count(agent_id) != 0;
}

std::shared_ptr<Inbox> MessageBus::subscribe(const std::string& agent_id,
                                             const std::string& pattern) {
  if (!topic::valid_pattern(pattern)) throw BusError("invalid topic pattern: " + pattern);
  std::unique_lock lock(registry_mu_);
  auto it = subscribers_.find(agent_id);
  if (it == subscribers_.end()) throw BusError("subscribe: agent not registered: " + agent_id);
  auto& pats = it->second.patterns;
  if (std::find(pats.begin(), pats.end(), pattern) == pats.end()) pats.push_back(pattern);
  return it->second.inbox;
}

void MessageBus::unsubscribe(const std::string& agent_id, const std::string& pattern) {
  std::unique_lock lock(registry_mu_);
  auto it = subscribers_.find(agent_id);
  if (it == subscribers_.end()) return;
  auto& pats = it->second.patterns;
  pats.erase(std::remove(pats.begin(), pats.end(), pattern), pats.end());
}

MessageBus::SourceState& MessageBus::source_state(const std::string& source) {
  std::lock_guard lock(sources_mu_);
  auto& slot = sources_[source];
  if (!slot) slot = std::make_unique<SourceState>();
  return *slot;
}

std::size_t MessageBus::publish(Envelope env) {
  if (!topic::valid(env.topic)) throw BusError("unknown topic namespace: " + env.topic);
  if (env.source.empty()) throw BusError("envelope without source");
  auto& src = source_state(env.source);
  std::lock_guard order(src.mu);
  if (env.seq <= src.last_seq)
    throw BusError("non-increasing seq " + std::to_string(env.seq) + " from " + env.source);
  src.last_seq = env.seq;
  return deliver(env);
}

std::size_t MessageBus::publish(const std::string& source, const std::string& t,
                                std::string payload, std::int64_t timestamp_ms, bool relayed) {
  if (!topic::valid(t)) throw BusError("unknown topic namespace: " + t);
  if (source.empty()) throw BusError("envelope without source");
  auto& src = source_state(source);
  std::lock_guard order(src.mu);
  const Envelope env{++src.last_seq, timestamp_ms, source, t, std::move(payload), relayed};
  return deliver(env);
}

std::size_t MessageBus::deliver(const Envelope& env) {
  std::vector<std::pair<const std::string*, std::shared_ptr<Inbox>>> targets;
  std::vector<Tap> taps;
  DeliveryObserver observer;
  {
    std::shared_lock lock(registry_mu_);
    for (const auto& [id, sub] : subscribers_) {
      const bool wants = std::any_of(sub.patterns.begin(), sub.patterns.end(),
                                     [&](const std::string& p) { return topic::matches(p, env.topic); });
      if (wants && routes_.allows(env.topic, id)) targets.emplace_back(&id, sub.inbox);
    }
    for (const auto& [tid, tap] : taps_) {
      if (topic::matches(tap.first, env.topic)) taps.push_back(tap.second);
    }
    observer = observer_;
  }

  for (const auto& [id, inbox] : targets) {
    if (observer) observer(env, *id);
    if (inbox->push(env)) ++dropped_;
  }
  ++published_;
  for (const auto& tap : taps) tap(env);
  return targets.size();
}

int MessageBus::add_tap(const std::string& pattern, Tap tap) {
  if (!topic::valid_pattern(pattern)) throw BusError("invalid tap pattern: " + pattern);
  std::unique_lock lock(registry_mu_);
  const int id = next_tap_++;
  taps_.emplace(id, std::make_pair(pattern, std::move(tap)));
  return id;
}

void MessageBus::remove_tap(int id) {
  std::unique_lock lock(registry_mu_);
  taps_.erase(id);
}

void MessageBus::set_delivery_observer(DeliveryObserver obs) {
  std::unique_lock lock(registry_mu_);
  observer_ = std::move(obs);
}

std::uint64_t MessageBus::dropped_for(const std::string& agent_id) const {
  std::shared_lock lock(registry_mu_);
  auto it = subscribers_.find(agent_id);
  return it == subscribers_.end() ? 0 : it->second.inbox->dropped();
}

}  // namespace plantbot
