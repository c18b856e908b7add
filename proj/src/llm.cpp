#include "plantbot/llm.hpp"

#include <algorithm>
#include <cstdlib>
#include <fstream>
#include <numeric>
#include <sstream>
#include <thread>

#define CPPHTTPLIB_OPENSSL_SUPPORT
#include <httplib.h>
#include <json.hpp>

namespace plantbot::llm {

const char* to_string(Role role) noexcept {
  switch (role) {
    case Role::system: return "system";
    case Role::user: return "user";
    case Role::assistant: return "assistant";
  }
  return "user";
}

void CompletionRequest::validate() const {
  if (turns.empty() || turns.front().role != Role::system)
    throw std::invalid_argument("completion request must start with a system turn");
  for (std::size_t i = 1; i < turns.size(); ++i) {
    if (turns[i].role == Role::system)
      throw std::invalid_argument("completion request has more than one system turn");
    if (turns[i].content.empty())
      throw std::invalid_argument("empty " + std::string(to_string(turns[i].role)) + " turn");
  }
  if (temperature < 0) throw std::invalid_argument("temperature must be >= 0");
}

const std::string& CompletionRequest::last_user() const {
  static const std::string kEmpty;
  for (auto it = turns.rbegin(); it != turns.rend(); ++it) {
    if (it->role == Role::user) return it->content;
  }
  return kEmpty;
}

// ---------------------------------------------------------------------------
// Script files

namespace {

std::string trim(std::string_view s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string_view::npos) return {};
  const auto e = s.find_last_not_of(" \t\r");
  return std::string(s.substr(b, e - b + 1));
}

// Splits on unescaped '|' and resolves escapes inside each field.
std::vector<std::string> split_fields(std::string_view line, int lineno) {
  std::vector<std::string> fields(1);
  for (std::size_t i = 0; i < line.size(); ++i) {
    const char c = line[i];
    if (c == '\\') {
      if (i + 1 >= line.size()) throw ScriptError(lineno, "dangling escape");
      const char n = line[++i];
      switch (n) {
        case '|': fields.back() += '|'; break;
        case 'n': fields.back() += '\n'; break;
        case '\\': fields.back() += '\\'; break;
        default:
          // Other escapes pass through untouched so regex triggers read naturally.
          fields.back() += '\\';
          fields.back() += n;
      }
    } else if (c == '|') {
      fields.emplace_back();
    } else {
      fields.back() += c;
    }
  }
  for (auto& f : fields) f = trim(f);
  return fields;
}

}  // namespace

Script parse_script(const std::string& text) {
  Script script;
  std::istringstream in(text);
  std::string raw;
  int lineno = 0;
  while (std::getline(in, raw)) {
    ++lineno;
    const std::string line = trim(raw);
    if (line.empty() || line.front() == '#') continue;
    auto fields = split_fields(line, lineno);
    if (fields[0] == "default") {
      if (fields.size() != 2) throw ScriptError(lineno, "default record takes one response field");
      script.default_response = fields[1];
      continue;
    }
    if (fields.size() < 4 || fields.size() > 5)
      throw ScriptError(lineno, "expected 'priority | role | trigger | response [| once]'");

    ScriptRule rule;
    rule.line = lineno;
    try {
      std::size_t used = 0;
      rule.priority = std::stoi(fields[0], &used);
      if (used != fields[0].size()) throw std::invalid_argument("trailing");
    } catch (const std::exception&) {
      throw ScriptError(lineno, "priority is not an integer: '" + fields[0] + "'");
    }
    rule.role = fields[1].empty() ? "*" : fields[1];
    if (fields[2].empty()) throw ScriptError(lineno, "empty trigger");
    if (fields[2].rfind("re:", 0) == 0) {
      rule.is_regex = true;
      rule.trigger = fields[2].substr(3);
      try {
        std::regex probe(rule.trigger);
      } catch (const std::regex_error& e) {
        throw ScriptError(lineno, "malformed pattern '" + rule.trigger + "': " + e.what());
      }
    } else {
      rule.trigger = fields[2];
    }
    rule.response = fields[3];
    if (rule.response.empty()) throw ScriptError(lineno, "empty response");
    if (fields.size() == 5) {
      if (fields[4] != "once") throw ScriptError(lineno, "unknown flag '" + fields[4] + "'");
      rule.once = true;
    }
    script.rules.push_back(std::move(rule));
  }
  return script;
}

Script load_script(const std::filesystem::path& path) {
  std::ifstream f(path);
  if (!f) throw std::runtime_error("cannot open script " + path.string());
  std::stringstream ss;
  ss << f.rdbuf();
  try {
    return parse_script(ss.str());
  } catch (const ScriptError& e) {
    throw ScriptError(e.line(), path.string() + ": " + e.what());
  }
}

// ---------------------------------------------------------------------------
// Scripted backend

ScriptedBackend::ScriptedBackend(Script script, std::string default_response)
    : ScriptedBackend(std::move(script.rules),
                      script.default_response.value_or(std::move(default_response))) {}

ScriptedBackend::ScriptedBackend(std::vector<ScriptRule> rules, std::string default_response)
    : default_response_(std::move(default_response)) {
  std::vector<std::size_t> order(rules.size());
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(),
                   [&](std::size_t a, std::size_t b) { return rules[a].priority > rules[b].priority; });
  for (auto i : order) {
    rules_.push_back(rules[i]);
    compiled_.push_back(rules[i].is_regex ? std::regex(rules[i].trigger) : std::regex());
  }
  fired_.assign(rules_.size(), 0);
}

std::string ScriptedBackend::complete(const CompletionRequest& req) {
  const std::string& input = req.last_user();
  std::lock_guard lock(mu_);
  ++calls_;
  for (std::size_t i = 0; i < rules_.size(); ++i) {
    const auto& r = rules_[i];
    if (!r.applies_to(req.agent) || (r.once && fired_[i] > 0)) continue;
    const bool hit = r.is_regex ? std::regex_search(input, compiled_[i])
                                : input.find(r.trigger) != std::string::npos;
    if (hit) {
      ++fired_[i];
      last_rule_ = static_cast<int>(i);
      return r.response;
    }
  }
  last_rule_ = -1;
  return default_response_;
}

std::uint64_t ScriptedBackend::calls() const {
  std::lock_guard lock(mu_);
  return calls_;
}

int ScriptedBackend::last_rule() const {
  std::lock_guard lock(mu_);
  return last_rule_;
}

// ---------------------------------------------------------------------------
// HTTP backend

HttpBackend::HttpBackend(HttpConfig cfg) : cfg_(std::move(cfg)) {
  if (const char* key = std::getenv(cfg_.api_key_env.c_str())) api_key_ = key;
}

std::string HttpBackend::request_body(const CompletionRequest& req) {
  nlohmann::ordered_json body;
  body["model"] = req.model;
  body["messages"] = nlohmann::ordered_json::array();
  for (const auto& t : req.turns) {
    body["messages"].push_back({{"role", to_string(t.role)}, {"content", t.content}});
  }
  body["temperature"] = req.temperature;
  body["max_tokens"] = req.max_tokens;
  return body.dump();
}

std::string HttpBackend::parse_response(const std::string& body) {
  const auto j = nlohmann::json::parse(body, nullptr, false);
  if (j.is_discarded()) throw std::runtime_error("response is not JSON");
  const auto& choices = j.value("choices", nlohmann::json::array());
  if (!choices.is_array() || choices.empty()) throw std::runtime_error("response has no choices");
  const auto& msg = choices[0].value("message", nlohmann::json::object());
  if (!msg.contains("content") || !msg["content"].is_string())
    throw std::runtime_error("response has no message content");
  return msg["content"].get<std::string>();
}

std::uint64_t HttpBackend::requests_sent() const {
  std::lock_guard lock(mu_);
  return requests_;
}

std::string HttpBackend::complete(const CompletionRequest& req) {
  req.validate();
  using clock = std::chrono::steady_clock;
  const auto budget = cfg_.timeout * (cfg_.retries + 1);
  const auto deadline = clock::now() + budget;
  const std::string body = request_body(req);
  std::string last_error = "no attempt made";
  auto backoff = cfg_.backoff;

  for (int attempt = 0; attempt <= cfg_.retries; ++attempt) {
    const auto remaining =
        std::chrono::duration_cast<std::chrono::milliseconds>(deadline - clock::now());
    if (remaining.count() <= 0) break;
    const auto attempt_timeout = std::min(cfg_.timeout, remaining);

    httplib::Client client(cfg_.base_url);
    const auto secs = attempt_timeout.count() / 1000;
    const auto usecs = (attempt_timeout.count() % 1000) * 1000;
    client.set_connection_timeout(secs, usecs);
    client.set_read_timeout(secs, usecs);
    client.set_write_timeout(secs, usecs);
    httplib::Headers headers;
    if (!api_key_.empty()) headers.emplace("Authorization", "Bearer " + api_key_);

    {
      std::lock_guard lock(mu_);
      ++requests_;
    }
    auto res = client.Post(cfg_.path, headers, body, "application/json");
    if (!res) {
      last_error = "transport failure: " + httplib::to_string(res.error());
    } else if (res->status < 200 || res->status >= 300) {
      last_error = "HTTP status " + std::to_string(res->status);
    } else {
      try {
        return parse_response(res->body);
      } catch (const std::exception& e) {
        last_error = e.what();
      }
    }

    if (attempt < cfg_.retries) {
      const auto left =
          std::chrono::duration_cast<std::chrono::milliseconds>(deadline - clock::now());
      if (left <= backoff) break;
      std::this_thread::sleep_for(backoff);
      backoff *= 2;
    }
  }
  throw BackendUnavailable("chat completion failed: " + last_error);
}

}  // namespace plantbot::llm
