#include "plantbot/agent.hpp"

#include <chrono>

namespace plantbot::agent {

void HistoryBuffer::append(llm::ChatTurn turn) {
  if (capacity_ == 0) return;
  entries_.push_back(std::move(turn));
  while (entries_.size() > capacity_) entries_.pop_front();
}

void AgentSpec::validate() const {
  if (id.empty()) throw std::invalid_argument("agent spec without id");
  if (!topic::valid(output_topic))
    throw std::invalid_argument("agent " + id + ": output topic outside namespace: " + output_topic);
  for (const auto& s : subscriptions) {
    if (!topic::valid_pattern(s))
      throw std::invalid_argument("agent " + id + ": bad subscription pattern: " + s);
  }
}

llm::CompletionRequest build_prompt(const AgentSpec& spec, const HistoryBuffer& history,
                                    const std::string& new_input) {
  llm::CompletionRequest req;
  req.model = spec.model;
  req.agent = spec.id;
  req.temperature = spec.temperature;
  req.max_tokens = spec.max_tokens;
  req.turns.reserve(history.size() + 2);
  req.turns.push_back({llm::Role::system, spec.role_prompt});
  req.turns.insert(req.turns.end(), history.entries().begin(), history.entries().end());
  req.turns.push_back({llm::Role::user, new_input});
  return req;
}

Agent::Agent(AgentSpec spec, MessageBus& bus, llm::Backend& backend, AgentContext ctx)
    : spec_(std::move(spec)),
      bus_(bus),
      backend_(backend),
      ctx_(std::move(ctx)),
      history_(spec_.history_capacity),
      filter_(spec_.refresh_ms) {
  spec_.validate();
  inbox_ = bus_.register_agent(spec_.id, spec_.inbox_bound);
  for (const auto& s : spec_.subscriptions) bus_.subscribe(spec_.id, s);
}

Agent::~Agent() { stop(); }

std::int64_t Agent::now() const {
  if (ctx_.now_ms) return ctx_.now_ms();
  return std::chrono::duration_cast<std::chrono::milliseconds>(
             std::chrono::system_clock::now().time_since_epoch())
      .count();
}

void Agent::log(telemetry::Kind kind, std::string text, std::optional<int> decision) {
  if (!ctx_.sink) return;
  telemetry::LogRecord r;
  r.timestamp_ms = now();
  r.agent = spec_.id;
  r.kind = kind;
  r.text = std::move(text);
  r.decision = decision;
  ctx_.sink->append(std::move(r));
}

bool Agent::process_pending() {
  auto env = inbox_->try_pop();
  if (!env) return false;
  if (spec_.coalesce) {
    for (auto newer = inbox_->try_pop(); newer; newer = inbox_->try_pop()) env = std::move(newer);
  }
  handle(*env);
  return true;
}

void Agent::handle(const Envelope& env) {
  ++handled_;
  if (spec_.postprocessor == Postprocessor::motor && env.source == spec_.directive_source) {
    latest_directive_ = action::parse_decision_or_stop(env.payload);
  }

  std::string input;
  try {
    input = ctx_.format_input ? ctx_.format_input(env) : env.payload;
  } catch (const std::exception& e) {
    log(telemetry::Kind::error, std::string("rejected input: ") + e.what());
    return;
  }
  if (input.empty()) return;
  last_request_ = build_prompt(spec_, history_, input);

  std::string reply;
  try {
    reply = backend_.complete(last_request_);
  } catch (const std::exception& e) {
    ++failures_;
    log(telemetry::Kind::error, std::string("backend failure: ") + e.what());
    return;
  }
  if (reply.empty()) reply = "...";

  history_.append({llm::Role::user, input});
  history_.append({llm::Role::assistant, reply});

  const auto out = postprocess(reply);
  if (!out) return;
  bus_.publish(spec_.id, spec_.output_topic, *out, now());
  ++published_;
}

std::optional<std::string> Agent::postprocess(const std::string& reply) {
  switch (spec_.postprocessor) {
    case Postprocessor::none:
      log(telemetry::Kind::utterance, reply);
      return reply;

    case Postprocessor::decision: {
      bool malformed = false;
      const auto d = action::parse_decision_or_stop(reply, &malformed);
      if (malformed) log(telemetry::Kind::error, "unparseable directive, defaulting to stop: " + reply);
      log(telemetry::Kind::decision, reply, d.move ? 1 : 0);
      if (!filter_.admit(d, now())) return std::nullopt;
      return malformed ? action::render(d) : reply;
    }

    case Postprocessor::motor: {
      action::VerbCommand vc;
      try {
        vc = action::parse_motor_command(reply);
      } catch (const action::ParseError& e) {
        log(telemetry::Kind::error, std::string("unparseable motor command, stopping: ") + e.what());
        vc = {action::Verb::stop, std::nullopt};
      }
      // Motion only while the latest directive is Move.
      if (!latest_directive_ || !latest_directive_->move) vc = {action::Verb::stop, std::nullopt};
      auto line = action::render(vc);
      log(telemetry::Kind::utterance, line);
      return line;
    }
  }
  return std::nullopt;
}

void Agent::start() {
  if (worker_.joinable()) return;
  worker_ = std::jthread([this](std::stop_token st) {
    using namespace std::chrono_literals;
    while (!st.stop_requested()) {
      auto env = inbox_->pop_wait(50ms);
      if (!env) continue;
      if (spec_.coalesce) {
        for (auto newer = inbox_->try_pop(); newer; newer = inbox_->try_pop()) env = std::move(newer);
      }
      handle(*env);
    }
  });
}

void Agent::stop() {
  if (!worker_.joinable()) return;
  worker_.request_stop();
  worker_.join();
}

}  // namespace plantbot::agent
