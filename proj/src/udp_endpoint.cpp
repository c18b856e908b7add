#include "plantbot/udp_endpoint.hpp"

#include <arpa/inet.h>
#include <netdb.h>
#include <netinet/in.h>
#include <poll.h>
#include <sys/socket.h>
#include <unistd.h>

#include <cerrno>
#include <cstring>
#include <iostream>

namespace plantbot::osc {

namespace {

constexpr std::size_t kMaxDatagram = 65536;

bool resolve(const std::string& host, std::uint16_t port, sockaddr_in& out) {
  std::memset(&out, 0, sizeof(out));
  out.sin_family = AF_INET;
  out.sin_port = htons(port);
  if (inet_pton(AF_INET, host.c_str(), &out.sin_addr) == 1) return true;
  addrinfo hints{};
  hints.ai_family = AF_INET;
  hints.ai_socktype = SOCK_DGRAM;
  addrinfo* res = nullptr;
  if (getaddrinfo(host.c_str(), nullptr, &hints, &res) != 0 || res == nullptr) return false;
  out.sin_addr = reinterpret_cast<sockaddr_in*>(res->ai_addr)->sin_addr;
  freeaddrinfo(res);
  return true;
}

}  // namespace

void EndpointConfig::validate() const {
  if (bind_port < 0 || bind_port > 65535)
    throw std::invalid_argument("bind port out of range: " + std::to_string(bind_port));
  for (const auto& p : peers) {
    if (p.port == 0) throw std::invalid_argument("peer port must be 1-65535 for " + p.host);
  }
}

Endpoint::Endpoint(const EndpointConfig& cfg) : peers_(cfg.peers) {
  cfg.validate();
  fd_ = ::socket(AF_INET, SOCK_DGRAM, 0);
  if (fd_ < 0) throw StartupError(std::string("osc: socket() failed: ") + std::strerror(errno));
  sockaddr_in addr{};
  if (!resolve(cfg.bind_host, static_cast<std::uint16_t>(cfg.bind_port), addr)) {
    ::close(fd_);
    throw StartupError("osc: cannot resolve bind host " + cfg.bind_host);
  }
  if (::bind(fd_, reinterpret_cast<sockaddr*>(&addr), sizeof(addr)) != 0) {
    const std::string why = std::strerror(errno);
    ::close(fd_);
    throw StartupError("osc: bind " + cfg.bind_host + ":" + std::to_string(cfg.bind_port) +
                       " failed: " + why);
  }
  socklen_t len = sizeof(addr);
  ::getsockname(fd_, reinterpret_cast<sockaddr*>(&addr), &len);
  local_port_ = ntohs(addr.sin_port);
}

Endpoint::~Endpoint() {
  if (fd_ >= 0) ::close(fd_);
}

bool Endpoint::send_raw(std::span<const std::uint8_t> bytes, const Peer& peer) {
  sockaddr_in to{};
  if (!resolve(peer.host, peer.port, to)) {
    ++send_failures_;
    std::cerr << "osc: cannot resolve peer " << peer.host << "\n";
    return false;
  }
  std::lock_guard lock(send_mu_);
  const auto n = ::sendto(fd_, bytes.data(), bytes.size(), 0, reinterpret_cast<sockaddr*>(&to),
                          sizeof(to));
  if (n < 0 || static_cast<std::size_t>(n) != bytes.size()) {
    ++send_failures_;
    std::cerr << "osc: send to " << peer.host << ":" << peer.port
              << " failed: " << std::strerror(errno) << "\n";
    return false;
  }
  return true;
}

bool Endpoint::send(const Message& msg, const Peer& peer) {
  const auto bytes = encode(msg);
  return send_raw(bytes, peer);
}

std::size_t Endpoint::broadcast(const Message& msg) {
  const auto bytes = encode(msg);
  std::size_t ok = 0;
  for (const auto& p : peers_) ok += send_raw(bytes, p) ? 1 : 0;
  return ok;
}

std::optional<Message> Endpoint::receive(std::chrono::milliseconds timeout) {
  const auto deadline = std::chrono::steady_clock::now() + timeout;
  std::vector<std::uint8_t> buf(kMaxDatagram);
  for (;;) {
    const auto left = std::chrono::duration_cast<std::chrono::milliseconds>(
        deadline - std::chrono::steady_clock::now());
    pollfd pfd{fd_, POLLIN, 0};
    const int ready = ::poll(&pfd, 1, static_cast<int>(std::max<long long>(0, left.count())));
    if (ready <= 0) return std::nullopt;
    const auto n = ::recv(fd_, buf.data(), buf.size(), 0);
    if (n < 0) {
      if (errno == EINTR) continue;
      return std::nullopt;
    }
    auto result = try_decode(std::span(buf.data(), static_cast<std::size_t>(n)));
    if (result.ok()) return std::move(std::get<Message>(result.value));
    ++malformed_;
    last_error_ = result.error();
  }
}

}  // namespace plantbot::osc
