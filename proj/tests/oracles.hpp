#pragma once

// Brute-force recounts for the log analyses, written without sharing code
// with the library. Used by the unit tests and the acceptance binary.

#include <algorithm>
#include <map>
#include <random>
#include <string>
#include <vector>

#include "plantbot/telemetry.hpp"

namespace oracles {

using plantbot::telemetry::Histogram;
using plantbot::telemetry::Kind;
using plantbot::telemetry::LogRecord;

// Random multi-run log: decisions mixed with chat/world/motor records, seq
// numbers unique per run but shuffled in file order.
inline std::vector<LogRecord> random_log(std::mt19937_64& rng, std::size_t max_records = 120) {
  static const char* words[] = {"move", "stay", "water", "stable", "hello", "dry", "talk", "closer"};
  std::uniform_int_distribution<std::size_t> len(0, max_records);
  const std::size_t runs = 1 + rng() % 3;
  std::vector<LogRecord> out;
  for (std::size_t run = 0; run < runs; ++run) {
    const std::size_t n = len(rng);
    for (std::size_t i = 0; i < n; ++i) {
      LogRecord r;
      r.run_id = "r" + std::to_string(run);
      r.seq = i + 1;
      r.timestamp_ms = static_cast<std::int64_t>(i) * 100;
      switch (rng() % 5) {
        case 0:
        case 1:
          r.kind = Kind::decision;
          r.agent = "action1";
          r.decision = static_cast<int>(rng() % 2);
          r.text = (*r.decision ? "[1] " : "[0] ") + std::string(words[rng() % 8]);
          break;
        case 2:
          r.kind = Kind::utterance;
          r.agent = "chat";
          r.text = std::string(words[rng() % 8]) + " " + words[rng() % 8];
          break;
        case 3:
          r.kind = Kind::utterance;
          r.agent = "sensor";
          r.text = words[rng() % 8];
          break;
        default:
          r.kind = rng() % 2 ? Kind::world : Kind::motor;
          r.agent = "world";
          r.text = "noise";
      }
      out.push_back(r);
    }
  }
  std::shuffle(out.begin(), out.end(), rng);
  return out;
}

// Records of one run, ordered by seq via selection (quadratic on purpose).
inline std::map<std::string, std::vector<LogRecord>> runs_in_order(const std::vector<LogRecord>& log) {
  std::map<std::string, std::vector<LogRecord>> runs;
  for (const auto& r : log) runs[r.run_id];
  for (auto& [id, seq] : runs) {
    std::uint64_t last = 0;
    while (true) {
      const LogRecord* next = nullptr;
      for (const auto& r : log)
        if (r.run_id == id && r.seq > last && (!next || r.seq < next->seq)) next = &r;
      if (!next) break;
      seq.push_back(*next);
      last = next->seq;
    }
  }
  return runs;
}

inline std::vector<int> flags_of(const std::vector<LogRecord>& run) {
  std::vector<int> f;
  for (const auto& r : run)
    if (r.kind == Kind::decision) f.push_back(*r.decision);
  return f;
}

struct Recount {
  std::size_t stop = 0, move = 0;
  Histogram stop_runs, move_runs;
};

// A maximal run starts at i with length L when flags[i..i+L) agree and the
// neighbours on both sides (if any) differ.
inline Recount recount(const std::vector<LogRecord>& log) {
  Recount c;
  for (const auto& [id, run] : runs_in_order(log)) {
    const auto f = flags_of(run);
    for (int x : f) (x ? c.move : c.stop) += 1;
    for (std::size_t i = 0; i < f.size(); ++i) {
      if (i > 0 && f[i - 1] == f[i]) continue;
      for (std::size_t L = 1; i + L <= f.size(); ++L) {
        bool same = true;
        for (std::size_t k = i; k < i + L; ++k) same = same && f[k] == f[i];
        if (!same) break;
        if (i + L == f.size() || f[i + L] != f[i]) ++(f[i] ? c.move_runs : c.stop_runs)[L];
      }
    }
  }
  return c;
}

// Chat texts among the `window` records before each decision that flips to target.
inline std::vector<std::string> pre_transition(const std::vector<LogRecord>& log, bool target,
                                               std::size_t window) {
  std::vector<std::string> out;
  for (const auto& [id, run] : runs_in_order(log)) {
    for (std::size_t i = 0; i < run.size(); ++i) {
      if (run[i].kind != Kind::decision || *run[i].decision != (target ? 1 : 0)) continue;
      // the previous decision in this run must exist and differ
      int prev = -1;
      for (std::size_t j = 0; j < i; ++j)
        if (run[j].kind == Kind::decision) prev = *run[j].decision;
      if (prev == -1 || prev == *run[i].decision) continue;
      for (std::size_t j = (i >= window ? i - window : 0); j < i; ++j)
        if (run[j].kind == Kind::utterance && run[j].agent == "chat") out.push_back(run[j].text);
    }
  }
  return out;
}

}  // namespace oracles
