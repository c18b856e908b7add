#pragma once

#include <chrono>
#include <cstdint>
#include <filesystem>
#include <memory>
#include <mutex>
#include <optional>
#include <regex>
#include <stdexcept>
#include <string>
#include <vector>

namespace plantbot::llm {

enum class Role { system, user, assistant };
const char* to_string(Role role) noexcept;

struct ChatTurn {
  Role role = Role::user;
  std::string content;
  bool operator==(const ChatTurn&) const = default;
};

struct CompletionRequest {
  std::string model;
  std::string agent;  // role id of the requesting agent; scripted rules filter on it
  std::vector<ChatTurn> turns;
  int max_tokens = 256;
  double temperature = 0.7;

  /// Exactly one system turn in first position, non-empty user/assistant
  /// content, temperature >= 0. Throws std::invalid_argument.
  void validate() const;
  /// Content of the final user turn, or empty.
  const std::string& last_user() const;
};

/// Raised after the retry budget is exhausted; callers fall back to safe defaults.
class BackendUnavailable : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class Backend {
 public:
  virtual ~Backend() = default;
  /// Safe for concurrent callers.
  virtual std::string complete(const CompletionRequest& req) = 0;
};

struct ScriptRule {
  int priority = 0;
  std::string role = "*";   // agent id filter, "*" for any
  std::string trigger;      // substring, or regex source when is_regex
  bool is_regex = false;
  std::string response;
  bool once = false;
  int line = 0;             // source line, 0 for rules built in code

  bool applies_to(const std::string& agent) const { return role == "*" || role == agent; }
};

class ScriptError : public std::runtime_error {
 public:
  ScriptError(int line, const std::string& what)
      : std::runtime_error("line " + std::to_string(line) + ": " + what), line_(line) {}
  int line() const noexcept { return line_; }

 private:
  int line_;
};

struct Script {
  std::vector<ScriptRule> rules;
  std::optional<std::string> default_response;
};

/// Rule file: one record per line, fields separated by '|':
///   <priority> | <role> | <trigger> | <response> [| once]
///   default | <response>
/// A trigger prefixed "re:" is an ECMAScript regex, otherwise a substring.
/// '#' starts a comment line; "\|", "\n" and "\\" are escapes inside fields, any other
/// backslash pair is kept as written (so "\[" reaches a regex unchanged).
Script parse_script(const std::string& text);
Script load_script(const std::filesystem::path& path);

/// Deterministic rule-driven backend. The highest-priority matching rule
/// wins; equal priorities fall back to declaration order. A fire-once rule
/// is skipped after it has answered once.
class ScriptedBackend final : public Backend {
 public:
  explicit ScriptedBackend(Script script, std::string default_response = "...");
  ScriptedBackend(std::vector<ScriptRule> rules, std::string default_response);

  std::string complete(const CompletionRequest& req) override;

  std::uint64_t calls() const;
  /// Index into rules() of the rule that fired last, or -1 for the default.
  int last_rule() const;
  const std::vector<ScriptRule>& rules() const noexcept { return rules_; }

 private:
  std::vector<ScriptRule> rules_;           // sorted by (priority desc, declaration order)
  std::vector<std::regex> compiled_;        // parallel to rules_, empty for substring rules
  std::string default_response_;
  mutable std::mutex mu_;
  std::vector<std::uint64_t> fired_;
  std::uint64_t calls_ = 0;
  int last_rule_ = -1;
};

struct HttpConfig {
  std::string base_url = "http://127.0.0.1:8080";
  std::string path = "/v1/chat/completions";
  std::string api_key_env = "OPENAI_API_KEY";
  std::chrono::milliseconds timeout{20000};
  int retries = 2;
  std::chrono::milliseconds backoff{500};
};

/// Client for OpenAI-compatible chat-completion services.
class HttpBackend final : public Backend {
 public:
  explicit HttpBackend(HttpConfig cfg);
  std::string complete(const CompletionRequest& req) override;
  std::uint64_t requests_sent() const;

  /// JSON body for one request; exposed for tests.
  static std::string request_body(const CompletionRequest& req);
  /// Extracts choices[0].message.content; throws std::runtime_error.
  static std::string parse_response(const std::string& body);

 private:
  HttpConfig cfg_;
  std::string api_key_;
  mutable std::mutex mu_;
  std::uint64_t requests_ = 0;
};

/// Backend that always fails, used to exercise failure isolation.
class FailingBackend final : public Backend {
 public:
  std::string complete(const CompletionRequest&) override {
    throw BackendUnavailable("backend disabled");
  }
};

}  // namespace plantbot::llm
