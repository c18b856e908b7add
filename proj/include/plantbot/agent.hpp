#pragma once

#include <atomic>
#include <cstdint>
#include <deque>
#include <functional>
#include <memory>
#include <optional>
#include <string>
#include <thread>
#include <vector>

#include "plantbot/action.hpp"
#include "plantbot/bus.hpp"
#include "plantbot/llm.hpp"
#include "plantbot/telemetry.hpp"

namespace plantbot::agent {

/// Bounded conversation memory; evicts oldest-first.
class HistoryBuffer {
 public:
  explicit HistoryBuffer(std::size_t capacity = 10) : capacity_(capacity) {}

  void append(llm::ChatTurn turn);
  const std::deque<llm::ChatTurn>& entries() const noexcept { return entries_; }
  std::size_t size() const noexcept { return entries_.size(); }
  std::size_t capacity() const noexcept { return capacity_; }
  void clear() { entries_.clear(); }

 private:
  std::size_t capacity_;
  std::deque<llm::ChatTurn> entries_;
};

enum class Postprocessor {
  none,      // publish the reply verbatim
  decision,  // "[0]/[1]" directive with redundancy suppression (Action-1)
  motor,     // motor command line gated on the latest directive (Action-2)
};

struct AgentSpec {
  std::string id;
  std::string role_prompt;
  std::size_t history_capacity = 10;
  std::vector<std::string> subscriptions;
  std::string output_topic;
  std::optional<std::int64_t> tick_ms;  // input cadence for world-fed agents
  Postprocessor postprocessor = Postprocessor::none;
  bool coalesce = false;  // prompt only the newest of several queued inputs
  std::size_t inbox_bound = 16;
  std::string model = "scripted";
  double temperature = 0.7;
  int max_tokens = 256;
  std::int64_t refresh_ms = 30000;        // decision re-emission interval
  std::string directive_source = "action1";  // whose directives gate motion
  action::MotionParams motion;

  /// Throws std::invalid_argument for an empty id or an output topic outside
  /// the namespace.
  void validate() const;
};

/// [system: role prompt] + history + [user: new_input].
llm::CompletionRequest build_prompt(const AgentSpec& spec, const HistoryBuffer& history,
                                    const std::string& new_input);

struct AgentContext {
  telemetry::LogSink* sink = nullptr;
  std::function<std::int64_t()> now_ms;
  /// Turns an inbound envelope into the user-turn text; identity when unset.
  std::function<std::string(const Envelope&)> format_input;
};

/// One role agent: subscription-driven loop over a completion backend.
class Agent {
 public:
  Agent(AgentSpec spec, MessageBus& bus, llm::Backend& backend, AgentContext ctx);
  ~Agent();
  Agent(const Agent&) = delete;
  Agent& operator=(const Agent&) = delete;

  /// Handles the next queued input (coalesced when configured). Returns false
  /// when the inbox was empty.
  bool process_pending();

  /// Runs process_pending in a dedicated thread until stop().
  void start();
  void stop();
  bool running() const noexcept { return worker_.joinable(); }

  const AgentSpec& spec() const noexcept { return spec_; }
  const HistoryBuffer& history() const noexcept { return history_; }
  /// The most recent prompt sent to the backend.
  const llm::CompletionRequest& last_request() const noexcept { return last_request_; }
  std::uint64_t handled() const noexcept { return handled_.load(); }
  std::uint64_t published() const noexcept { return published_.load(); }
  std::uint64_t failures() const noexcept { return failures_.load(); }
  std::size_t pending() const { return inbox_->size(); }

 private:
  void handle(const Envelope& env);
  std::optional<std::string> postprocess(const std::string& reply);
  void log(telemetry::Kind kind, std::string text, std::optional<int> decision = std::nullopt);
  std::int64_t now() const;

  AgentSpec spec_;
  MessageBus& bus_;
  llm::Backend& backend_;
  AgentContext ctx_;
  std::shared_ptr<Inbox> inbox_;
  HistoryBuffer history_;
  llm::CompletionRequest last_request_;

  action::RedundancyFilter filter_;
  std::optional<action::Decision> latest_directive_;

  std::atomic<std::uint64_t> handled_{0};
  std::atomic<std::uint64_t> published_{0};
  std::atomic<std::uint64_t> failures_{0};
  std::jthread worker_;
};

}  // namespace plantbot::agent
