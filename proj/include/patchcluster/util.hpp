#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <string_view>
#include <vector>

namespace patchcluster {

namespace fs = std::filesystem;

/// Lowercase hex SHA-256 of a byte string.
std::string sha256_hex(std::string_view bytes);

std::string read_file(const fs::path& path);
void write_file(const fs::path& path, std::string_view bytes);

std::string_view trim(std::string_view s);

/// SplitMix64. The whole generator state is one 64-bit word, so a seed fully
/// determines the stream on every platform.
class SplitMix64 {
 public:
  static constexpr std::string_view kAlgorithm = "splitmix64+rejection";

  explicit SplitMix64(std::uint64_t seed) : state_(seed) {}

  std::uint64_t next() {
    std::uint64_t z = (state_ += 0x9E3779B97F4A7C15ULL);
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
    return z ^ (z >> 31);
  }

  /// Uniform integer in [0, bound) by rejection; bound > 0.
  std::uint64_t below(std::uint64_t bound) {
    const std::uint64_t limit = UINT64_MAX - UINT64_MAX % bound;
    std::uint64_t x;
    do {
      x = next();
    } while (x >= limit);
    return x % bound;
  }

 private:
  std::uint64_t state_;
};

/// Stable 64-bit FNV-1a, used to mix strings into seeds.
std::uint64_t fnv1a64(std::string_view s);

/// Quotes a string as one POSIX shell word.
std::string shell_quote(std::string_view s);

/// Replaces every `{name}` occurrence in a template.
std::string substitute(std::string tmpl, std::string_view name, std::string_view value);

std::vector<std::string> split_lines(std::string_view text);

}  // namespace patchcluster
