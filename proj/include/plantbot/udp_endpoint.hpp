#pragma once

#include <atomic>
#include <chrono>
#include <cstdint>
#include <mutex>
#include <optional>
#include <string>
#include <vector>

#include "plantbot/osc.hpp"

namespace plantbot::osc {

struct Peer {
  std::string host;
  std::uint16_t port = 0;
};

struct EndpointConfig {
  std::string bind_host = "127.0.0.1";
  int bind_port = 0;  // 0 lets the kernel pick; see Endpoint::local_port()
  std::vector<Peer> peers;

  /// Throws std::invalid_argument on out-of-range ports.
  void validate() const;
};

class StartupError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// A bound UDP socket carrying one OSC message per datagram.
///
/// send() may be called from any thread. receive() is single-consumer.
class Endpoint {
 public:
  explicit Endpoint(const EndpointConfig& cfg);
  ~Endpoint();
  Endpoint(const Endpoint&) = delete;
  Endpoint& operator=(const Endpoint&) = delete;

  std::uint16_t local_port() const noexcept { return local_port_; }
  const std::vector<Peer>& peers() const noexcept { return peers_; }

  /// Returns false (and counts a send failure) when the datagram could not be sent.
  bool send(const Message& msg, const Peer& peer);
  /// Sends to every configured peer; returns how many succeeded.
  std::size_t broadcast(const Message& msg);
  /// Raw datagram, used by tests to inject malformed packets.
  bool send_raw(std::span<const std::uint8_t> bytes, const Peer& peer);

  /// Waits up to `timeout` for the next well-formed message. Malformed
  /// datagrams are dropped and counted; waiting continues until the deadline.
  std::optional<Message> receive(std::chrono::milliseconds timeout);

  std::uint64_t malformed_count() const noexcept { return malformed_.load(); }
  std::uint64_t send_failures() const noexcept { return send_failures_.load(); }
  DecodeErrc last_decode_error() const noexcept { return last_error_.load(); }

 private:
  int fd_ = -1;
  std::uint16_t local_port_ = 0;
  std::vector<Peer> peers_;
  std::mutex send_mu_;
  std::atomic<std::uint64_t> malformed_{0};
  std::atomic<std::uint64_t> send_failures_{0};
  std::atomic<DecodeErrc> last_error_{DecodeErrc::truncated_packet};
};

}  // namespace plantbot::osc
