#pragma once

#include <atomic>
#include <cstdint>
#include <functional>
#include <map>
#include <memory>
#include <mutex>
#include <shared_mutex>
#include <stdexcept>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "plantbot/bounded_queue.hpp"

namespace plantbot {

/// One natural-language message between agents.
struct Envelope {
  std::uint64_t seq = 0;        // strictly increasing per source
  std::int64_t timestamp_ms = 0;
  std::string source;
  std::string topic;            // "/plantbot/<agent>/<in|out>"
  std::string payload;          // UTF-8
  bool relayed = false;         // arrived through an OSC bridge
};

/// Topic namespace: "/plantbot/<name>/<in|out>" with name in [a-z0-9_]+.
namespace topic {
bool valid(std::string_view topic) noexcept;
/// Patterns use '*' as a whole-segment wildcard, e.g. "/plantbot/*/out".
bool valid_pattern(std::string_view pattern) noexcept;
bool matches(std::string_view pattern, std::string_view topic) noexcept;
/// The <name> segment; empty if the topic is invalid.
std::string name_of(std::string_view topic);
std::string out(std::string_view name);
std::string in(std::string_view name);
}  // namespace topic

class BusError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct RouteEdge {
  std::string pattern;
  std::string subscriber;
  bool operator==(const RouteEdge&) const = default;
};

class RouteTable {
 public:
  RouteTable() = default;
  explicit RouteTable(std::vector<RouteEdge> edges);

  /// Agent topology: sensor, vision and human feed chat; chat fans out to the
  /// speaker and both action agents; action1 feeds action2; action2 drives the
  /// world. The soil and camera channels feed the sensor and vision agents.
  static RouteTable standard();

  void add(RouteEdge edge);
  bool allows(std::string_view topic, std::string_view subscriber) const;
  const std::vector<RouteEdge>& edges() const noexcept { return edges_; }
  /// True when every edge of `required` is present verbatim.
  bool contains_all(const RouteTable& required) const;

 private:
  std::vector<RouteEdge> edges_;
};

/// Per-agent inbound stream. One consumer.
using Inbox = BoundedQueue<Envelope>;

/// Topic-routed publish/subscribe over in-process bounded queues.
class MessageBus {
 public:
  static constexpr std::size_t kDefaultQueueBound = 256;

  explicit MessageBus(RouteTable routes, std::size_t default_bound = kDefaultQueueBound);

  /// Idempotent. `bound` of 0 selects the bus default.
  std::shared_ptr<Inbox> register_agent(const std::string& agent_id, std::size_t bound = 0);
  bool registered(const std::string& agent_id) const;

  /// Adds a topic pattern to the agent's inbox. Duplicate patterns are a no-op.
  std::shared_ptr<Inbox> subscribe(const std::string& agent_id, const std::string& pattern);
  void unsubscribe(const std::string& agent_id, const std::string& pattern);

  /// Delivers to every subscribed agent the route table permits; returns the
  /// number of agents reached. Throws BusError on an invalid topic or a
  /// non-increasing sequence number for the envelope's source.
  std::size_t publish(Envelope env);

  /// Fills in seq (next for `source`) and publishes.
  std::size_t publish(const std::string& source, const std::string& topic, std::string payload,
                      std::int64_t timestamp_ms, bool relayed = false);

  using Tap = std::function<void(const Envelope&)>;
  /// Observers see every accepted envelope matching `pattern`, independent of routing.
  int add_tap(const std::string& pattern, Tap tap);
  void remove_tap(int id);

  using DeliveryObserver = std::function<void(const Envelope&, const std::string& agent)>;
  void set_delivery_observer(DeliveryObserver obs);

  const RouteTable& routes() const noexcept { return routes_; }
  std::uint64_t published() const noexcept { return published_.load(); }
  std::uint64_t dropped() const noexcept { return dropped_.load(); }
  std::uint64_t dropped_for(const std::string& agent_id) const;

 private:
  struct Subscriber {
    std::shared_ptr<Inbox> inbox;
    std::vector<std::string> patterns;
  };

  RouteTable routes_;
  std::size_t default_bound_;

  mutable std::shared_mutex registry_mu_;
  std::map<std::string, Subscriber, std::less<>> subscribers_;
  std::map<int, std::pair<std::string, Tap>> taps_;
  int next_tap_ = 1;
  DeliveryObserver observer_;

  struct SourceState {
    std::mutex mu;  // serializes delivery per source so order follows seq
    std::uint64_t last_seq = 0;
  };
  SourceState& source_state(const std::string& source);
  std::size_t deliver(const Envelope& env);

  std::mutex sources_mu_;
  std::map<std::string, std::unique_ptr<SourceState>, std::less<>> sources_;

  std::atomic<std::uint64_t> published_{0};
  std::atomic<std::uint64_t> dropped_{0};
};

}  // namespace plantbot
