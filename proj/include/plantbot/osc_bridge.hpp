#pragma once

#include <atomic>
#include <cstdint>
#include <functional>
#include <string>
#include <thread>

#include "plantbot/bus.hpp"
#include "plantbot/udp_endpoint.hpp"

namespace plantbot {

enum class BridgeDirection { outbound, inbound, both };

/// Mirrors bus traffic onto an OSC endpoint and back.
///
/// Outbound: every envelope matching `pattern` becomes OSC (topic, [payload])
/// sent to all endpoint peers. Inbound: each received message with a valid
/// topic and a single string argument is published on the bus, attributed to
/// the topic's agent segment. Envelopes that arrived through a bridge are not
/// sent back out.
class OscBridge {
 public:
  using Clock = std::function<std::int64_t()>;

  OscBridge(MessageBus& bus, osc::Endpoint& endpoint, BridgeDirection direction,
            std::string pattern = "/plantbot/*/*", Clock clock = nullptr);
  ~OscBridge();
  OscBridge(const OscBridge&) = delete;
  OscBridge& operator=(const OscBridge&) = delete;

  void stop();

  std::uint64_t sent() const noexcept { return sent_.load(); }
  std::uint64_t received() const noexcept { return received_.load(); }
  /// Encode failures, send failures and inbound messages that were not
  /// publishable (wrong shape or unknown topic).
  std::uint64_t failures() const noexcept { return failures_.load(); }

 private:
  void receive_loop(std::stop_token st);

  MessageBus& bus_;
  osc::Endpoint& endpoint_;
  Clock clock_;
  int tap_id_ = 0;
  std::atomic<std::uint64_t> sent_{0};
  std::atomic<std::uint64_t> received_{0};
  std::atomic<std::uint64_t> failures_{0};
  std::jthread receiver_;
};

}  // namespace plantbot
