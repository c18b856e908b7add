#include "plantbot/telemetry.hpp"

#include <algorithm>
#include <cctype>
#include <json.hpp>

namespace plantbot::telemetry {

using nlohmann::ordered_json;

const char* to_string(Kind k) noexcept {
  switch (k) {
    case Kind::utterance: return "utterance";
    case Kind::decision: return "decision";
    case Kind::motor: return "motor";
    case Kind::world: return "world";
    case Kind::error: return "error";
  }
  return "error";
}

std::optional<Kind> kind_from_string(std::string_view s) noexcept {
  for (auto k : {Kind::utterance, Kind::decision, Kind::motor, Kind::world, Kind::error}) {
    if (s == to_string(k)) return k;
  }
  return std::nullopt;
}

std::string to_line(const LogRecord& r) {
  ordered_json j;
  j["ts"] = r.timestamp_ms;
  j["seq"] = r.seq;
  j["run"] = r.run_id;
  j["agent"] = r.agent;
  j["kind"] = to_string(r.kind);
  j["text"] = r.text;
  if (r.decision) j["decision"] = *r.decision;
  if (r.pose) j["pose"] = {r.pose->x, r.pose->y, r.pose->heading};
  // Invalid UTF-8 is replaced rather than aborting the writer.
  return j.dump(-1, ' ', false, nlohmann::json::error_handler_t::replace);
}

LogRecord from_line(const std::string& line) {
  const auto j = nlohmann::json::parse(line, nullptr, false);
  if (j.is_discarded() || !j.is_object()) throw std::invalid_argument("not a JSON object");
  try {
    LogRecord r;
    r.timestamp_ms = j.at("ts").get<std::int64_t>();
    r.seq = j.at("seq").get<std::uint64_t>();
    r.run_id = j.at("run").get<std::string>();
    r.agent = j.at("agent").get<std::string>();
    const auto kind = kind_from_string(j.at("kind").get<std::string>());
    if (!kind) throw std::invalid_argument("unknown kind");
    r.kind = *kind;
    r.text = j.at("text").get<std::string>();
    if (j.contains("decision")) {
      const int d = j["decision"].get<int>();
      if (d != 0 && d != 1) throw std::invalid_argument("decision flag must be 0 or 1");
      r.decision = d;
    }
    if ((r.kind == Kind::decision) != r.decision.has_value())
      throw std::invalid_argument("decision flag present iff kind is decision");
    if (j.contains("pose")) {
      const auto& p = j["pose"];
      if (!p.is_array() || p.size() != 3) throw std::invalid_argument("pose must be [x, y, heading]");
      r.pose = Pose{p[0].get<double>(), p[1].get<double>(), p[2].get<double>()};
    }
    return r;
  } catch (const nlohmann::json::exception& e) {
    throw std::invalid_argument(e.what());
  }
}

LogSink::LogSink(const std::filesystem::path& path, std::string run_id, bool keep_in_memory)
    : keep_(keep_in_memory || path.empty()), run_id_(std::move(run_id)) {
  if (!path.empty()) {
    if (path.has_parent_path()) {
      std::error_code ec;
      std::filesystem::create_directories(path.parent_path(), ec);
    }
    out_.open(path, std::ios::out | std::ios::trunc | std::ios::binary);
    if (!out_) throw SinkError("cannot open log for writing: " + path.string());
    to_file_ = true;
  }
}

LogRecord LogSink::append(LogRecord record) {
  Observer obs;
  {
    std::lock_guard lock(mu_);
    record.seq = next_seq_++;
    record.run_id = run_id_;
    if (to_file_) {
      out_ << to_line(record) << '\n';
      out_.flush();
    }
    if (keep_) kept_.push_back(record);
    obs = observer_;
  }
  if (obs) obs(record);
  return record;
}

void LogSink::set_observer(Observer obs) {
  std::lock_guard lock(mu_);
  observer_ = std::move(obs);
}

std::vector<LogRecord> LogSink::records() const {
  std::lock_guard lock(mu_);
  return kept_;
}

std::uint64_t LogSink::count() const {
  std::lock_guard lock(mu_);
  return next_seq_ - 1;
}

void LogSink::flush() {
  std::lock_guard lock(mu_);
  if (to_file_) out_.flush();
}

LoadResult load_records(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open log " + path.string());
  LoadResult res;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    try {
      res.records.push_back(from_line(line));
    } catch (const std::exception&) {
      ++res.malformed;
      if (!res.first_malformed_line) res.first_malformed_line = lineno;
    }
  }
  return res;
}

namespace {

// Records grouped by run id (first-appearance order), each group in seq order.
std::vector<std::vector<const LogRecord*>> by_run(const std::vector<LogRecord>& records) {
  std::vector<std::string> order;
  std::map<std::string, std::vector<const LogRecord*>> groups;
  for (const auto& r : records) {
    auto [it, fresh] = groups.try_emplace(r.run_id);
    if (fresh) order.push_back(r.run_id);
    it->second.push_back(&r);
  }
  std::vector<std::vector<const LogRecord*>> out;
  for (const auto& id : order) {
    auto g = std::move(groups[id]);
    std::stable_sort(g.begin(), g.end(),
                     [](const LogRecord* a, const LogRecord* b) { return a->seq < b->seq; });
    out.push_back(std::move(g));
  }
  return out;
}

bool counts_as_message(const LogRecord& r) {
  return r.kind == Kind::utterance || r.kind == Kind::decision;
}

}  // namespace

StateCounts state_counts(const std::vector<LogRecord>& records) {
  StateCounts c;
  for (const auto& r : records) {
    if (r.kind != Kind::decision || !r.decision) continue;
    (*r.decision ? c.move : c.stop) += 1;
  }
  return c;
}

RunLengths run_lengths(const std::vector<LogRecord>& records) {
  RunLengths out;
  for (const auto& group : by_run(records)) {
    std::optional<int> current;
    std::size_t len = 0;
    auto close = [&] {
      if (current && len > 0) ++(*current ? out.move : out.stop)[len];
    };
    for (const auto* r : group) {
      if (r->kind != Kind::decision || !r->decision) continue;
      if (current && *current == *r->decision) {
        ++len;
      } else {
        close();
        current = *r->decision;
        len = 1;
      }
    }
    close();
  }
  return out;
}

std::vector<std::string> tokenize(std::string_view text) {
  std::vector<std::string> out;
  std::string cur;
  for (char ch : text) {
    const auto c = static_cast<unsigned char>(ch);
    // Bytes >= 0x80 belong to multi-byte UTF-8 sequences and stay inside words.
    if (c >= 0x80 || std::isalnum(c)) {
      cur += static_cast<char>(c < 0x80 ? std::tolower(c) : c);
    } else if (!cur.empty()) {
      out.push_back(std::move(cur));
      cur.clear();
    }
  }
  if (!cur.empty()) out.push_back(std::move(cur));
  return out;
}

const std::set<std::string>& default_stop_words() {
  static const std::set<std::string> words = {
      "a", "about", "all", "am", "an", "and", "any", "are", "as", "at", "be", "been", "but",
      "by", "can", "could", "d", "do", "does", "for", "from", "had", "has", "have", "he",
      "her", "here", "him", "his", "how", "i", "if", "in", "into", "is", "it", "its", "just",
      "ll", "m", "me", "more", "my", "no", "not", "of", "on", "or", "our", "re", "s", "she",
      "so", "some", "still", "t", "that", "the", "their", "them", "then", "there", "these",
      "they", "this", "those", "to", "too", "us", "ve", "very", "was", "we", "were", "what",
      "when", "where", "which", "while", "who", "why", "will", "with", "would", "yet", "you",
      "your"};
  return words;
}

TermCounts count_terms(const std::vector<std::string>& texts, std::size_t top_k,
                       const std::set<std::string>& stop_words) {
  std::map<std::string, std::size_t> counts;
  for (const auto& t : texts) {
    for (auto& tok : tokenize(t)) {
      if (!stop_words.count(tok)) ++counts[tok];
    }
  }
  TermCounts ranked(counts.begin(), counts.end());
  std::stable_sort(ranked.begin(), ranked.end(),
                   [](const auto& a, const auto& b) { return a.second > b.second; });
  if (ranked.size() > top_k) ranked.resize(top_k);
  return ranked;
}

TermCounts term_frequency(const std::vector<LogRecord>& records, const std::string& agent,
                          std::size_t top_k, const std::set<std::string>& stop_words) {
  return count_terms(corpus_lines(records, agent), top_k, stop_words);
}

std::vector<std::string> pre_transition_texts(const std::vector<LogRecord>& records, bool target_move,
                                              std::size_t window, const std::string& chat_agent) {
  std::vector<std::string> texts;
  const int target = target_move ? 1 : 0;
  for (const auto& group : by_run(records)) {
    std::optional<int> prev;
    for (std::size_t i = 0; i < group.size(); ++i) {
      const auto* r = group[i];
      if (r->kind != Kind::decision || !r->decision) continue;
      const bool transition = prev && *prev != *r->decision && *r->decision == target;
      prev = *r->decision;
      if (!transition) continue;
      const std::size_t from = i > window ? i - window : 0;
      for (std::size_t j = from; j < i; ++j) {
        const auto* c = group[j];
        if (c->kind == Kind::utterance && c->agent == chat_agent) texts.push_back(c->text);
      }
    }
  }
  return texts;
}

TermCounts pre_transition_terms(const std::vector<LogRecord>& records, bool target_move,
                                std::size_t window, std::size_t top_k,
                                const std::set<std::string>& stop_words, const std::string& chat_agent) {
  return count_terms(pre_transition_texts(records, target_move, window, chat_agent), top_k, stop_words);
}

std::optional<std::size_t> rank_of(const TermCounts& terms, const std::string& term) {
  for (std::size_t i = 0; i < terms.size(); ++i) {
    if (terms[i].first == term) return i + 1;
  }
  return std::nullopt;
}

std::vector<std::string> corpus_lines(const std::vector<LogRecord>& records, const std::string& agent) {
  std::vector<std::string> lines;
  for (const auto& r : records) {
    if (!counts_as_message(r)) continue;
    if (!agent.empty() && agent != "*" && r.agent != agent) continue;
    std::string t = r.text;
    std::replace(t.begin(), t.end(), '\n', ' ');
    std::replace(t.begin(), t.end(), '\r', ' ');
    lines.push_back(std::move(t));
  }
  return lines;
}

std::size_t export_corpus(const std::vector<LogRecord>& records, const std::string& agent,
                          const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::out | std::ios::trunc | std::ios::binary);
  if (!out) throw std::runtime_error("cannot write corpus to " + path.string());
  const auto lines = corpus_lines(records, agent);
  for (const auto& l : lines) out << l << '\n';
  return lines.size();
}

}  // namespace plantbot::telemetry
