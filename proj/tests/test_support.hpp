#pragma once

#include <unistd.h>

#include <atomic>
#include <string>
#include <vector>

#include "patchcluster/diffkit.hpp"
#include "patchcluster/util.hpp"

namespace patchcluster::testing {

/// Fresh directory under the system temp dir, removed on destruction.
class TempDir {
 public:
  TempDir() {
    static std::atomic<int> counter{0};
    path_ = fs::temp_directory_path() /
            ("pc_test_" + std::to_string(::getpid()) + "_" + std::to_string(counter++));
    fs::remove_all(path_);
    fs::create_directories(path_);
  }
  TempDir(const TempDir&) = delete;
  TempDir& operator=(const TempDir&) = delete;
  ~TempDir() {
    std::error_code ec;
    fs::remove_all(path_, ec);
  }
  const fs::path& path() const { return path_; }
  fs::path operator/(const std::string& rel) const { return path_ / rel; }

 private:
  fs::path path_;
};

inline std::string join_lines(const std::vector<std::string>& lines) {
  std::string out;
  for (const auto& l : lines) out += l + "\n";
  return out;
}

/// Unified diff replacing line `line_no` (1-based) of `file` with `replacement`,
/// carrying up to `context` lines of context on each side.
inline std::string replace_line_diff(const std::string& file, const std::vector<std::string>& lines,
                                     std::size_t line_no, const std::string& replacement, std::size_t context = 1) {
  const std::size_t idx = line_no - 1;
  const std::size_t lo = idx >= context ? idx - context : 0;
  const std::size_t hi = std::min(lines.size(), idx + context + 1);
  std::string body;
  for (std::size_t i = lo; i < hi; ++i) {
    if (i == idx) {
      body += "-" + lines[i] + "\n+" + replacement + "\n";
    } else {
      body += " " + lines[i] + "\n";
    }
  }
  const std::size_t n = hi - lo;
  return "--- a/" + file + "\n+++ b/" + file + "\n@@ -" + std::to_string(lo + 1) + "," + std::to_string(n) + " +" +
         std::to_string(lo + 1) + "," + std::to_string(n) + " @@\n" + body;
}

}  // namespace patchcluster::testing
