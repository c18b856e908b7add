#pragma once

#include <cstdint>
#include <filesystem>
#include <fstream>
#include <functional>
#include <map>
#include <mutex>
#include <optional>
#include <set>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

namespace plantbot::telemetry {

enum class Kind { utterance, decision, motor, world, error };
const char* to_string(Kind k) noexcept;
std::optional<Kind> kind_from_string(std::string_view s) noexcept;

struct Pose {
  double x = 0, y = 0, heading = 0;
  bool operator==(const Pose&) const = default;
};

struct LogRecord {
  std::int64_t timestamp_ms = 0;
  std::uint64_t seq = 0;
  std::string agent;
  Kind kind = Kind::utterance;
  std::string text;
  std::optional<int> decision;  // present iff kind == decision
  std::optional<Pose> pose;
  std::string run_id;
  bool operator==(const LogRecord&) const = default;
};

/// One JSON object per line, keys in the fixed order
/// ts, seq, run, agent, kind, text[, decision][, pose]. Pose is [x, y, heading].
std::string to_line(const LogRecord& r);
/// Throws std::invalid_argument on malformed lines or schema violations.
LogRecord from_line(const std::string& line);

class SinkError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Append-only record writer. Assigns seq and stamps the run id. Thread-safe.
class LogSink {
 public:
  /// Empty path keeps records in memory only. Throws SinkError when the file
  /// cannot be opened.
  explicit LogSink(const std::filesystem::path& path, std::string run_id, bool keep_in_memory = false);

  /// Returns the stored record (with seq and run id filled in).
  LogRecord append(LogRecord record);

  using Observer = std::function<void(const LogRecord&)>;
  void set_observer(Observer obs);

  std::vector<LogRecord> records() const;
  std::uint64_t count() const;
  const std::string& run_id() const noexcept { return run_id_; }
  void flush();

 private:
  mutable std::mutex mu_;
  std::ofstream out_;
  bool to_file_ = false;
  bool keep_ = false;
  std::string run_id_;
  std::uint64_t next_seq_ = 1;
  std::vector<LogRecord> kept_;
  Observer observer_;
};

struct LoadResult {
  std::vector<LogRecord> records;
  std::size_t malformed = 0;
  std::optional<std::size_t> first_malformed_line;  // 1-based
};

/// Reads records in file order, skipping and counting malformed lines.
/// Throws std::runtime_error if the file cannot be opened.
LoadResult load_records(const std::filesystem::path& path);

// ---------------------------------------------------------------------------
// Analyses over decision and utterance records.

struct StateCounts {
  std::size_t stop = 0;
  std::size_t move = 0;
  bool operator==(const StateCounts&) const = default;
};

StateCounts state_counts(const std::vector<LogRecord>& records);

/// Histogram: run length -> number of maximal runs of that length.
using Histogram = std::map<std::size_t, std::size_t>;

struct RunLengths {
  Histogram stop;
  Histogram move;
  bool operator==(const RunLengths&) const = default;
};

/// Maximal same-flag runs of decision records, in seq order within each run id.
RunLengths run_lengths(const std::vector<LogRecord>& records);

using TermCounts = std::vector<std::pair<std::string, std::size_t>>;

/// Lowercased tokens split on whitespace and ASCII punctuation.
std::vector<std::string> tokenize(std::string_view text);

const std::set<std::string>& default_stop_words();

/// Counts over utterance and decision texts of `agent` ("" or "*" for all),
/// ranked by count descending then term ascending.
TermCounts term_frequency(const std::vector<LogRecord>& records, const std::string& agent,
                          std::size_t top_k, const std::set<std::string>& stop_words = default_stop_words());

TermCounts count_terms(const std::vector<std::string>& texts, std::size_t top_k,
                       const std::set<std::string>& stop_words);

/// Texts of `chat_agent` utterances among the `window` records preceding each
/// decision that switches to `target_move`.
std::vector<std::string> pre_transition_texts(const std::vector<LogRecord>& records, bool target_move,
                                              std::size_t window, const std::string& chat_agent = "chat");

TermCounts pre_transition_terms(const std::vector<LogRecord>& records, bool target_move,
                                std::size_t window, std::size_t top_k,
                                const std::set<std::string>& stop_words = default_stop_words(),
                                const std::string& chat_agent = "chat");

/// 1-based rank of `term`, or nullopt when absent.
std::optional<std::size_t> rank_of(const TermCounts& terms, const std::string& term);

/// Utterance texts of `agent`, one per line; embedded newlines become spaces.
std::vector<std::string> corpus_lines(const std::vector<LogRecord>& records, const std::string& agent);
std::size_t export_corpus(const std::vector<LogRecord>& records, const std::string& agent,
                          const std::filesystem::path& path);

}  // namespace plantbot::telemetry
