#pragma once

// Shared helpers for the unit tests: seeded generators and scratch files.

#include <cstdint>
#include <filesystem>
#include <fstream>
#include <random>
#include <sstream>
#include <string>

#include <unistd.h>

namespace testing_support {

inline std::filesystem::path source_dir() { return PLANTBOT_SOURCE_DIR; }

/// Fresh directory under the system temp dir, removed on destruction.
class ScratchDir {
 public:
  explicit ScratchDir(const std::string& tag) {
    static std::uint64_t counter = 0;
    path_ = std::filesystem::temp_directory_path() /
            ("plantbot-" + tag + "-" + std::to_string(::getpid()) + "-" + std::to_string(counter++));
    std::filesystem::remove_all(path_);
    std::filesystem::create_directories(path_);
  }
  ~ScratchDir() {
    std::error_code ec;
    std::filesystem::remove_all(path_, ec);
  }
  const std::filesystem::path& path() const { return path_; }
  std::filesystem::path operator/(const std::string& name) const { return path_ / name; }

 private:
  std::filesystem::path path_;
};

inline void write_file(const std::filesystem::path& p, const std::string& text) {
  std::ofstream out(p, std::ios::binary);
  out << text;
}

inline std::string read_file(const std::filesystem::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

inline std::string random_text(std::mt19937_64& rng, std::size_t max_len, bool allow_utf8 = true) {
  static const char* pieces[] = {"a", "b", "z", " ", "0", "9", ".", "/", "-", "\xC3\xA9", "\xE6\xA4\x8D", "\xE7\x89\xA9"};
  const std::size_t n_pieces = allow_utf8 ? std::size(pieces) : 9;
  std::uniform_int_distribution<std::size_t> len(0, max_len), pick(0, n_pieces - 1);
  std::string s;
  for (std::size_t i = 0, n = len(rng); i < n; ++i) s += pieces[pick(rng)];
  return s;
}

}  // namespace testing_support
