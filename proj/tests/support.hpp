#pragma once

#include <cstdint>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include <unistd.h>

#include "laydef/random.hpp"

namespace laydef::testing {

inline std::filesystem::path source_path(const std::string& rel) {
  return std::filesystem::path(LAYDEF_SOURCE_DIR) / rel;
}

inline std::string slurp(const std::filesystem::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

// Fresh directory under the system temp dir, removed on destruction.
class TempDir {
 public:
  explicit TempDir(const std::string& tag = "laydef") {
    static int counter = 0;
    path_ = std::filesystem::temp_directory_path() /
            (tag + "-" + std::to_string(::getpid()) + "-" + std::to_string(counter++));
    std::filesystem::remove_all(path_);
    std::filesystem::create_directories(path_);
  }
  ~TempDir() {
    std::error_code ec;
    std::filesystem::remove_all(path_, ec);
  }
  TempDir(const TempDir&) = delete;
  TempDir& operator=(const TempDir&) = delete;

  const std::filesystem::path& path() const { return path_; }
  std::filesystem::path operator/(const std::string& rel) const { return path_ / rel; }

 private:
  std::filesystem::path path_;
};

// Words drawn from a small vocabulary, for property tests.
inline std::string random_words(SeededRng& rng, const std::vector<std::string>& vocab, std::size_t min_len,
                                std::size_t max_len) {
  const std::size_t n = min_len + static_cast<std::size_t>(rng.below(max_len - min_len + 1));
  std::string out;
  for (std::size_t i = 0; i < n; ++i) {
    if (i) out += ' ';
    out += vocab[rng.below(vocab.size())];
  }
  return out;
}

}  // namespace laydef::testing
