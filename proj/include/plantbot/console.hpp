#pragma once

#include <atomic>
#include <chrono>
#include <cstdint>
#include <deque>
#include <filesystem>
#include <functional>
#include <memory>
#include <mutex>
#include <optional>
#include <stdexcept>
#include <string>
#include <thread>
#include <vector>

#include <json.hpp>

#include "plantbot/telemetry.hpp"

namespace plantbot::console {

// Wire schema, one JSON object per line (or per WebSocket text frame):
//   event:   {"kind": "<agent_msg|chat_reply|pose|soil|decision|error>", "timestamp": <ms>, "payload": {...}}
//   command: {"kind": "<user_utterance|set_soil_moisture|add_obstacle|water|pause|resume>", "payload": {...}}
//
// Command payloads: user_utterance {"text"}, set_soil_moisture {"value"},
// add_obstacle {"x", "y", "r"}, water {"liters"}, pause {}, resume {}.

enum class EventKind { agent_msg, chat_reply, pose, soil, decision, error };
const char* to_string(EventKind k) noexcept;
std::optional<EventKind> event_kind_from_string(std::string_view s) noexcept;

struct Event {
  EventKind kind = EventKind::agent_msg;
  std::int64_t timestamp_ms = 0;
  nlohmann::json payload = nlohmann::json::object();
  bool operator==(const Event&) const = default;
};

std::string to_line(const Event& e);
Event event_from_line(const std::string& line);

enum class CommandKind { user_utterance, set_soil_moisture, add_obstacle, water, pause, resume };
const char* to_string(CommandKind k) noexcept;

struct Command {
  CommandKind kind = CommandKind::user_utterance;
  std::string text;
  double value = 0;          // moisture % or liters
  double x = 0, y = 0, r = 0;
};

class CommandError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// Throws CommandError on malformed JSON, an unknown kind or a bad payload.
Command parse_command(const std::string& line);
std::string to_line(const Command& c);

Event error_event(std::int64_t ts, const std::string& message);

/// The single mapping from log records to console events, shared by live
/// runs and replay:
///   decision          -> decision   {agent, flag, reason}
///   chat utterance    -> chat_reply {text}
///   other utterance   -> agent_msg  {agent, text}
///   world soil record -> soil       {moisture, temp, ph, ec, n, p, k, status}
///   other world       -> agent_msg  {agent, text}
///   motor             -> pose       {x, y, heading, command}
///   error             -> error      {agent, message}
Event record_to_event(const telemetry::LogRecord& r);

struct ReplayResult {
  std::size_t events = 0;
  std::optional<std::size_t> corrupt_line;  // 1-based; replay stopped there
};

using Sleeper = std::function<void(std::chrono::duration<double>)>;

/// Re-emits one event per log record, spacing them by the recorded
/// timestamps divided by `speed` (speed <= 0 emits without delay). Stops at
/// the first corrupt line. Throws std::runtime_error when the file cannot be
/// opened.
ReplayResult replay(const std::filesystem::path& log, double speed, const std::function<void(const Event&)>& emit,
                    const Sleeper& sleep = nullptr);

/// Line-framed JSON over TCP. A client that opens with an HTTP GET upgrade is
/// switched to WebSocket text frames instead, so browsers can connect to the
/// same port. Each client has a bounded outbound buffer; a client that falls
/// behind by more than `client_buffer` events is disconnected.
class Server {
 public:
  using CommandHandler = std::function<Event(const std::string& line)>;

  Server(const std::string& host, std::uint16_t port, CommandHandler handler, std::size_t client_buffer = 1024);
  ~Server();
  Server(const Server&) = delete;
  Server& operator=(const Server&) = delete;

  std::uint16_t port() const noexcept { return port_; }
  void broadcast(const Event& e);
  std::size_t clients() const;
  std::uint64_t dropped_clients() const noexcept { return dropped_.load(); }
  void stop();

 private:
  struct Client;
  void accept_loop(std::stop_token st);
  void serve(std::shared_ptr<Client> c);
  void send_to(Client& c, const std::string& line);

  int listen_fd_ = -1;
  std::uint16_t port_ = 0;
  CommandHandler handler_;
  std::size_t client_buffer_;
  mutable std::mutex mu_;
  std::vector<std::shared_ptr<Client>> clients_;
  std::atomic<std::uint64_t> dropped_{0};
  std::jthread acceptor_;
};

/// Sec-WebSocket-Accept value for a client key.
std::string websocket_accept(const std::string& key);

}  // namespace plantbot::console
