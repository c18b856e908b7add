#include "plantbot/osc_bridge.hpp"

#include <chrono>

namespace plantbot {

OscBridge::OscBridge(MessageBus& bus, osc::Endpoint& endpoint, BridgeDirection direction,
                     std::string pattern, Clock clock)
    : bus_(bus), endpoint_(endpoint), clock_(std::move(clock)) {
  if (!clock_) {
    clock_ = [] {
      return std::chrono::duration_cast<std::chrono::milliseconds>(
                 std::chrono::system_clock::now().time_since_epoch())
          .count();
    };
  }
  if (direction != BridgeDirection::inbound) {
    tap_id_ = bus_.add_tap(pattern, [this](const Envelope& env) {
      if (env.relayed) return;
      try {
        const osc::Message msg{env.topic, {env.payload}};
        const auto ok = endpoint_.broadcast(msg);
        sent_ += ok;
        failures_ += endpoint_.peers().size() - ok;
      } catch (const osc::EncodeError&) {
        ++failures_;
      }
    });
  }
  if (direction != BridgeDirection::outbound) {
    receiver_ = std::jthread([this](std::stop_token st) { receive_loop(st); });
  }
}

OscBridge::~OscBridge() { stop(); }

void OscBridge::stop() {
  if (tap_id_ != 0) {
    bus_.remove_tap(tap_id_);
    tap_id_ = 0;
  }
  if (receiver_.joinable()) {
    receiver_.request_stop();
    receiver_.join();
  }
}

void OscBridge::receive_loop(std::stop_token st) {
  using namespace std::chrono_literals;
  while (!st.stop_requested()) {
    auto msg = endpoint_.receive(50ms);
    if (!msg) continue;
    const auto* text = msg->args.size() == 1 ? std::get_if<std::string>(&msg->args[0]) : nullptr;
    if (text == nullptr || !topic::valid(msg->address)) {
      ++failures_;
      continue;
    }
    try {
      bus_.publish(topic::name_of(msg->address), msg->address, *text, clock_(), true);
      ++received_;
    } catch (const BusError&) {
      ++failures_;
    }
  }
}

}  // namespace plantbot
