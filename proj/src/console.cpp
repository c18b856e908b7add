#include "plantbot/console.hpp"

#include <arpa/inet.h>
#include <netdb.h>
#include <netinet/in.h>
#include <poll.h>
#include <sys/socket.h>
#include <unistd.h>

#include <openssl/evp.h>
#include <openssl/sha.h>

#include <algorithm>
#include <cctype>
#include <condition_variable>
#include <cstring>
#include <fstream>
#include <sstream>

namespace plantbot::console {

using nlohmann::json;

const char* to_string(EventKind k) noexcept {
  switch (k) {
    case EventKind::agent_msg: return "agent_msg";
    case EventKind::chat_reply: return "chat_reply";
    case EventKind::pose: return "pose";
    case EventKind::soil: return "soil";
    case EventKind::decision: return "decision";
    case EventKind::error: return "error";
  }
  return "?";
}

std::optional<EventKind> event_kind_from_string(std::string_view s) noexcept {
  for (auto k : {EventKind::agent_msg, EventKind::chat_reply, EventKind::pose, EventKind::soil,
                 EventKind::decision, EventKind::error}) {
    if (s == to_string(k)) return k;
  }
  return std::nullopt;
}

const char* to_string(CommandKind k) noexcept {
  switch (k) {
    case CommandKind::user_utterance: return "user_utterance";
    case CommandKind::set_soil_moisture: return "set_soil_moisture";
    case CommandKind::add_obstacle: return "add_obstacle";
    case CommandKind::water: return "water";
    case CommandKind::pause: return "pause";
    case CommandKind::resume: return "resume";
  }
  return "?";
}

std::string to_line(const Event& e) {
  nlohmann::ordered_json j;
  j["kind"] = to_string(e.kind);
  j["timestamp"] = e.timestamp_ms;
  j["payload"] = e.payload;
  return j.dump(-1, ' ', false, json::error_handler_t::replace);
}

Event event_from_line(const std::string& line) {
  json j;
  try {
    j = json::parse(line);
  } catch (const json::parse_error& e) {
    throw std::invalid_argument(std::string("event: ") + e.what());
  }
  if (!j.is_object() || !j.contains("kind") || !j["kind"].is_string() || !j.contains("timestamp") ||
      !j["timestamp"].is_number_integer() || !j.contains("payload") || !j["payload"].is_object())
    throw std::invalid_argument("event: missing kind, timestamp or payload");
  const auto kind = event_kind_from_string(j["kind"].get<std::string>());
  if (!kind) throw std::invalid_argument("event: unknown kind");
  return {*kind, j["timestamp"].get<std::int64_t>(), j["payload"]};
}

namespace {

double number_field(const json& payload, const char* key) {
  if (!payload.contains(key) || !payload[key].is_number())
    throw CommandError(std::string("payload.") + key + " must be a number");
  const double v = payload[key].get<double>();
  if (!std::isfinite(v)) throw CommandError(std::string("payload.") + key + " must be finite");
  return v;
}

}  // namespace

Command parse_command(const std::string& line) {
  json j;
  try {
    j = json::parse(line);
  } catch (const json::parse_error&) {
    throw CommandError("command is not valid JSON");
  }
  if (!j.is_object() || !j.contains("kind") || !j["kind"].is_string()) throw CommandError("command needs a string 'kind'");
  const json payload = j.contains("payload") ? j["payload"] : json::object();
  if (!payload.is_object()) throw CommandError("payload must be an object");
  const std::string kind = j["kind"].get<std::string>();

  Command c;
  if (kind == "user_utterance") {
    c.kind = CommandKind::user_utterance;
    if (!payload.contains("text") || !payload["text"].is_string()) throw CommandError("payload.text must be a string");
    c.text = payload["text"].get<std::string>();
    if (c.text.find_first_not_of(" \t\r\n") == std::string::npos) throw CommandError("utterance is empty");
  } else if (kind == "set_soil_moisture") {
    c.kind = CommandKind::set_soil_moisture;
    c.value = number_field(payload, "value");
    if (c.value < 0 || c.value > 100) throw CommandError("moisture must be in [0, 100]");
  } else if (kind == "add_obstacle") {
    c.kind = CommandKind::add_obstacle;
    c.x = number_field(payload, "x");
    c.y = number_field(payload, "y");
    c.r = number_field(payload, "r");
    if (c.r <= 0) throw CommandError("obstacle radius must be positive");
  } else if (kind == "water") {
    c.kind = CommandKind::water;
    c.value = number_field(payload, "liters");
    if (c.value <= 0) throw CommandError("water amount must be positive");
  } else if (kind == "pause") {
    c.kind = CommandKind::pause;
  } else if (kind == "resume") {
    c.kind = CommandKind::resume;
  } else {
    throw CommandError("unknown command kind '" + kind + "'");
  }
  return c;
}

std::string to_line(const Command& c) {
  nlohmann::ordered_json j;
  j["kind"] = to_string(c.kind);
  json p = json::object();
  switch (c.kind) {
    case CommandKind::user_utterance: p["text"] = c.text; break;
    case CommandKind::set_soil_moisture: p["value"] = c.value; break;
    case CommandKind::add_obstacle: p = {{"x", c.x}, {"y", c.y}, {"r", c.r}}; break;
    case CommandKind::water: p["liters"] = c.value; break;
    case CommandKind::pause:
    case CommandKind::resume: break;
  }
  j["payload"] = p;
  return j.dump();
}

Event error_event(std::int64_t ts, const std::string& message) {
  return {EventKind::error, ts, {{"agent", "gateway"}, {"message", message}}};
}

namespace {

// "moisture=12.0% temp=22.0C pH=6.5 ..." -> {"moisture": 12.0, ...}
std::optional<json> soil_payload(const std::string& text) {
  if (text.rfind("moisture=", 0) != 0) return std::nullopt;
  json out = json::object();
  std::istringstream in(text);
  for (std::string field; in >> field;) {
    const auto eq = field.find('=');
    if (eq == std::string::npos) return std::nullopt;
    std::string key = field.substr(0, eq);
    std::transform(key.begin(), key.end(), key.begin(), [](unsigned char ch) { return std::tolower(ch); });
    std::string value = field.substr(eq + 1);
    if (key == "status") {
      out[key] = value;
      continue;
    }
    if (key == "temp") key = "temperature";
    while (!value.empty() && (value.back() == '%' || value.back() == 'C')) value.pop_back();
    try {
      std::size_t used = 0;
      out[key] = std::stod(value, &used);
      if (used != value.size()) return std::nullopt;
    } catch (const std::exception&) {
      return std::nullopt;
    }
  }
  return out;
}

}  // namespace

Event record_to_event(const telemetry::LogRecord& r) {
  using telemetry::Kind;
  Event e;
  e.timestamp_ms = r.timestamp_ms;
  switch (r.kind) {
    case Kind::decision:
      e.kind = EventKind::decision;
      e.payload = {{"agent", r.agent}, {"flag", r.decision.value_or(0)}, {"reason", r.text}};
      break;
    case Kind::utterance:
      if (r.agent == "chat") {
        e.kind = EventKind::chat_reply;
        e.payload = {{"text", r.text}};
      } else {
        e.kind = EventKind::agent_msg;
        e.payload = {{"agent", r.agent}, {"text", r.text}};
      }
      break;
    case Kind::world:
      if (auto soil = soil_payload(r.text)) {
        e.kind = EventKind::soil;
        e.payload = std::move(*soil);
      } else {
        e.kind = EventKind::agent_msg;
        e.payload = {{"agent", r.agent}, {"text", r.text}};
      }
      break;
    case Kind::motor: {
      e.kind = EventKind::pose;
      const auto p = r.pose.value_or(telemetry::Pose{});
      e.payload = {{"x", p.x}, {"y", p.y}, {"heading", p.heading}, {"command", r.text}};
      break;
    }
    case Kind::error:
      e.kind = EventKind::error;
      e.payload = {{"agent", r.agent}, {"message", r.text}};
      break;
  }
  return e;
}

ReplayResult replay(const std::filesystem::path& log, double speed, const std::function<void(const Event&)>& emit,
                    const Sleeper& sleep) {
  std::ifstream in(log);
  if (!in) throw std::runtime_error("cannot open log " + log.string());
  const Sleeper wait = sleep ? sleep : [](std::chrono::duration<double> d) { std::this_thread::sleep_for(d); };

  ReplayResult result;
  std::optional<std::int64_t> prev_ts;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty()) continue;
    telemetry::LogRecord rec;
    try {
      rec = telemetry::from_line(line);
    } catch (const std::invalid_argument&) {
      result.corrupt_line = lineno;
      break;
    }
    if (speed > 0 && prev_ts && rec.timestamp_ms > *prev_ts)
      wait(std::chrono::duration<double>((rec.timestamp_ms - *prev_ts) / 1000.0 / speed));
    prev_ts = rec.timestamp_ms;
    emit(record_to_event(rec));
    ++result.events;
  }
  return result;
}

// ---------------------------------------------------------------------------
// WebSocket helpers

std::string websocket_accept(const std::string& key) {
  const std::string magic = key + "258EAFA5-E914-47DA-95CA-C5AB0DC85B11";
  unsigned char digest[SHA_DIGEST_LENGTH];
  SHA1(reinterpret_cast<const unsigned char*>(magic.data()), magic.size(), digest);
  unsigned char out[4 * ((SHA_DIGEST_LENGTH + 2) / 3) + 1];
  const int n = EVP_EncodeBlock(out, digest, SHA_DIGEST_LENGTH);
  return std::string(reinterpret_cast<char*>(out), static_cast<std::size_t>(n));
}

namespace {

std::string ws_frame(std::uint8_t opcode, const std::string& payload) {
  std::string f;
  f.push_back(static_cast<char>(0x80 | opcode));
  const std::uint64_t n = payload.size();
  if (n < 126) {
    f.push_back(static_cast<char>(n));
  } else if (n <= 0xFFFF) {
    f.push_back(static_cast<char>(126));
    f.push_back(static_cast<char>(n >> 8));
    f.push_back(static_cast<char>(n & 0xFF));
  } else {
    f.push_back(static_cast<char>(127));
    for (int i = 7; i >= 0; --i) f.push_back(static_cast<char>((n >> (8 * i)) & 0xFF));
  }
  return f + payload;
}

bool send_all(int fd, const std::string& data) {
  std::size_t off = 0;
  while (off < data.size()) {
    const ssize_t n = ::send(fd, data.data() + off, data.size() - off, MSG_NOSIGNAL);
    if (n <= 0) {
      if (n < 0 && errno == EINTR) continue;
      return false;
    }
    off += static_cast<std::size_t>(n);
  }
  return true;
}

std::string header_value(const std::string& request, std::string name) {
  std::transform(name.begin(), name.end(), name.begin(), [](unsigned char ch) { return std::tolower(ch); });
  std::istringstream in(request);
  for (std::string line; std::getline(in, line);) {
    const auto colon = line.find(':');
    if (colon == std::string::npos) continue;
    std::string key = line.substr(0, colon);
    std::transform(key.begin(), key.end(), key.begin(), [](unsigned char ch) { return std::tolower(ch); });
    if (key != name) continue;
    std::string v = line.substr(colon + 1);
    const auto b = v.find_first_not_of(" \t");
    const auto e = v.find_last_not_of(" \t\r");
    return b == std::string::npos ? "" : v.substr(b, e - b + 1);
  }
  return {};
}

}  // namespace

// ---------------------------------------------------------------------------
// Server

struct Server::Client {
  int fd = -1;
  std::mutex mu;
  bool ready = false;  // framing known; events are held back until then
  bool websocket = false;
  std::condition_variable cv;
  std::deque<std::string> outbox;  // framed bytes
  bool closed = false;
  std::atomic<bool> done_reading{false};
  std::atomic<bool> done_writing{false};
  std::jthread reader;
  std::jthread writer;

  void close() {
    {
      std::lock_guard lk(mu);
      if (closed) return;
      closed = true;
    }
    ::shutdown(fd, SHUT_RDWR);
    cv.notify_all();
  }
};

Server::Server(const std::string& host, std::uint16_t port, CommandHandler handler, std::size_t client_buffer)
    : handler_(std::move(handler)), client_buffer_(std::max<std::size_t>(1, client_buffer)) {
  addrinfo hints{};
  hints.ai_family = AF_INET;
  hints.ai_socktype = SOCK_STREAM;
  hints.ai_flags = AI_PASSIVE;
  addrinfo* res = nullptr;
  const std::string port_text = std::to_string(port);
  if (const int rc = ::getaddrinfo(host.empty() ? nullptr : host.c_str(), port_text.c_str(), &hints, &res); rc != 0)
    throw std::runtime_error("console: cannot resolve " + host + ": " + gai_strerror(rc));
  listen_fd_ = ::socket(res->ai_family, res->ai_socktype, 0);
  if (listen_fd_ < 0) {
    ::freeaddrinfo(res);
    throw std::runtime_error("console: socket() failed");
  }
  const int one = 1;
  ::setsockopt(listen_fd_, SOL_SOCKET, SO_REUSEADDR, &one, sizeof one);
  const int rc = ::bind(listen_fd_, res->ai_addr, res->ai_addrlen);
  ::freeaddrinfo(res);
  if (rc != 0 || ::listen(listen_fd_, 16) != 0) {
    const std::string err = std::strerror(errno);
    ::close(listen_fd_);
    throw std::runtime_error("console: cannot listen on " + host + ":" + port_text + ": " + err);
  }
  sockaddr_in bound{};
  socklen_t len = sizeof bound;
  ::getsockname(listen_fd_, reinterpret_cast<sockaddr*>(&bound), &len);
  port_ = ntohs(bound.sin_port);
  acceptor_ = std::jthread([this](std::stop_token st) { accept_loop(st); });
}

Server::~Server() { stop(); }

void Server::stop() {
  if (acceptor_.joinable()) {
    acceptor_.request_stop();
    acceptor_.join();
  }
  std::vector<std::shared_ptr<Client>> all;
  {
    std::lock_guard lk(mu_);
    all.swap(clients_);
  }
  for (auto& c : all) c->close();
  for (auto& c : all) {
    if (c->reader.joinable()) c->reader.join();
    if (c->writer.joinable()) c->writer.join();
    ::close(c->fd);
  }
  if (listen_fd_ >= 0) {
    ::close(listen_fd_);
    listen_fd_ = -1;
  }
}

std::size_t Server::clients() const {
  std::lock_guard lk(mu_);
  return static_cast<std::size_t>(std::count_if(clients_.begin(), clients_.end(), [](const auto& c) {
    std::lock_guard clk(c->mu);
    return !c->closed;
  }));
}

void Server::accept_loop(std::stop_token st) {
  while (!st.stop_requested()) {
    pollfd p{listen_fd_, POLLIN, 0};
    const int rc = ::poll(&p, 1, 50);

    // Reap clients whose threads have both finished.
    {
      std::vector<std::shared_ptr<Client>> finished;
      {
        std::lock_guard lk(mu_);
        auto it = std::partition(clients_.begin(), clients_.end(),
                                 [](const auto& c) { return !(c->done_reading && c->done_writing); });
        finished.assign(it, clients_.end());
        clients_.erase(it, clients_.end());
      }
      for (auto& c : finished) {
        c->reader.join();
        c->writer.join();
        ::close(c->fd);
      }
    }

    if (rc <= 0 || !(p.revents & POLLIN)) continue;
    const int fd = ::accept(listen_fd_, nullptr, nullptr);
    if (fd < 0) continue;
    auto c = std::make_shared<Client>();
    c->fd = fd;
    {
      std::lock_guard lk(mu_);
      clients_.push_back(c);
    }
    c->writer = std::jthread([c] {
      for (;;) {
        std::string chunk;
        {
          std::unique_lock lk(c->mu);
          c->cv.wait(lk, [&] { return c->closed || !c->outbox.empty(); });
          if (c->outbox.empty()) break;
          chunk = std::move(c->outbox.front());
          c->outbox.pop_front();
        }
        if (!send_all(c->fd, chunk)) {
          c->close();
          break;
        }
      }
      c->done_writing = true;
    });
    c->reader = std::jthread([this, c] {
      serve(c);
      c->close();
      c->done_reading = true;
    });
  }
}

void Server::send_to(Client& c, const std::string& line) {
  bool overflow = false;
  {
    std::lock_guard lk(c.mu);
    if (c.closed || !c.ready) return;
    if (c.outbox.size() >= client_buffer_) {
      overflow = true;
    } else {
      c.outbox.push_back(c.websocket ? ws_frame(0x1, line) : line + "\n");
    }
  }
  if (overflow) {
    ++dropped_;
    c.close();
    return;
  }
  c.cv.notify_one();
}

void Server::broadcast(const Event& e) {
  const std::string line = to_line(e);
  std::vector<std::shared_ptr<Client>> targets;
  {
    std::lock_guard lk(mu_);
    targets = clients_;
  }
  for (auto& c : targets) send_to(*c, line);
}

void Server::serve(std::shared_ptr<Client> c) {
  std::string buf;
  char chunk[4096];
  auto fill = [&]() {
    const ssize_t n = ::recv(c->fd, chunk, sizeof chunk, 0);
    if (n <= 0) return false;
    buf.append(chunk, static_cast<std::size_t>(n));
    return true;
  };
  auto dispatch = [&](const std::string& line) {
    if (line.find_first_not_of(" \t\r") == std::string::npos) return;
    send_to(*c, to_line(handler_(line)));
  };

  // Sniff the first bytes: an HTTP upgrade request switches to WebSocket. A
  // client that stays silent is a plain line client that only listens.
  pollfd first{c->fd, POLLIN, 0};
  const bool spoke = ::poll(&first, 1, 200) > 0;
  while (spoke && buf.size() < 4) {
    if (!fill()) return;
    if (buf.find('\n') != std::string::npos) break;
  }
  if (buf.rfind("GET ", 0) == 0) {
    while (buf.find("\r\n\r\n") == std::string::npos) {
      if (buf.size() > 16384 || !fill()) return;
    }
    const auto end = buf.find("\r\n\r\n") + 4;
    const std::string request = buf.substr(0, end);
    buf.erase(0, end);
    const std::string key = header_value(request, "Sec-WebSocket-Key");
    if (key.empty()) {
      send_all(c->fd, "HTTP/1.1 400 Bad Request\r\nContent-Length: 0\r\n\r\n");
      return;
    }
    const std::string reply = "HTTP/1.1 101 Switching Protocols\r\nUpgrade: websocket\r\nConnection: Upgrade\r\n"
                              "Sec-WebSocket-Accept: " + websocket_accept(key) + "\r\n\r\n";
    {
      // The handshake must precede any queued event.
      std::lock_guard lk(c->mu);
      c->outbox.push_front(reply);
      c->websocket = true;
      c->ready = true;
    }
    c->cv.notify_one();

    std::string message;
    for (;;) {
      while (buf.size() < 2) {
        if (!fill()) return;
      }
      const auto b0 = static_cast<std::uint8_t>(buf[0]);
      const auto b1 = static_cast<std::uint8_t>(buf[1]);
      const bool fin = b0 & 0x80;
      const std::uint8_t opcode = b0 & 0x0F;
      const bool masked = b1 & 0x80;
      std::uint64_t len = b1 & 0x7F;
      std::size_t header = 2;
      const std::size_t ext = len == 126 ? 2 : len == 127 ? 8 : 0;
      while (buf.size() < header + ext + (masked ? 4 : 0)) {
        if (!fill()) return;
      }
      if (ext) {
        len = 0;
        for (std::size_t i = 0; i < ext; ++i) len = (len << 8) | static_cast<std::uint8_t>(buf[header + i]);
        header += ext;
      }
      if (len > (1u << 20)) return;
      std::uint8_t mask[4] = {0, 0, 0, 0};
      if (masked) {
        std::memcpy(mask, buf.data() + header, 4);
        header += 4;
      }
      while (buf.size() < header + len) {
        if (!fill()) return;
      }
      std::string payload = buf.substr(header, len);
      buf.erase(0, header + len);
      for (std::size_t i = 0; i < payload.size(); ++i) payload[i] = static_cast<char>(payload[i] ^ mask[i % 4]);

      if (opcode == 0x8) {
        std::lock_guard lk(c->mu);
        c->outbox.push_back(ws_frame(0x8, ""));
        break;
      }
      if (opcode == 0x9) {
        {
          std::lock_guard lk(c->mu);
          c->outbox.push_back(ws_frame(0xA, payload));
        }
        c->cv.notify_one();
        continue;
      }
      if (opcode == 0x1 || opcode == 0x0) {
        message += payload;
        if (fin) {
          dispatch(message);
          message.clear();
        }
      }
    }
    c->cv.notify_one();
    return;
  }

  {
    std::lock_guard lk(c->mu);
    c->ready = true;
  }
  for (;;) {
    std::size_t nl;
    while ((nl = buf.find('\n')) != std::string::npos) {
      std::string line = buf.substr(0, nl);
      buf.erase(0, nl + 1);
      if (!line.empty() && line.back() == '\r') line.pop_back();
      dispatch(line);
    }
    if (buf.size() > (1u << 20)) return;
    if (!fill()) return;
  }
}

}  // namespace plantbot::console
