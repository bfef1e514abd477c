#include "patchcluster/util.hpp"

#include <openssl/evp.h>

#include <fstream>
#include <sstream>

#include "patchcluster/error.hpp"

namespace patchcluster {

std::string_view to_string(ErrorKind kind) {
  switch (kind) {
    case ErrorKind::Config: return "ConfigError";
    case ErrorKind::Schema: return "SchemaError";
    case ErrorKind::MalformedDiff: return "MalformedDiff";
    case ErrorKind::HunkMismatch: return "HunkMismatch";
    case ErrorKind::Workspace: return "WorkspaceError";
    case ErrorKind::ResultParse: return "ResultParseError";
    case ErrorKind::ExternalStrategy: return "ExternalStrategyError";
    case ErrorKind::UnknownPatch: return "UnknownPatch";
    case ErrorKind::MissingLabel: return "MissingLabel";
    case ErrorKind::NoMixedClusters: return "NoMixedClusters";
    case ErrorKind::InvariantViolation: return "InvariantViolation";
  }
  return "Error";
}

int exit_code_for(ErrorKind kind) noexcept {
  switch (kind) {
    case ErrorKind::Config:
    case ErrorKind::Schema:
    case ErrorKind::MalformedDiff:
    case ErrorKind::MissingLabel:
      return 2;
    case ErrorKind::HunkMismatch:
    case ErrorKind::Workspace:
    case ErrorKind::ResultParse:
    case ErrorKind::ExternalStrategy:
      return 3;
    case ErrorKind::UnknownPatch:
    case ErrorKind::NoMixedClusters:
    case ErrorKind::InvariantViolation:
      return 4;
  }
  return 4;
}

std::string sha256_hex(std::string_view bytes) {
  unsigned char digest[EVP_MAX_MD_SIZE];
  unsigned int len = 0;
  if (EVP_Digest(bytes.data(), bytes.size(), digest, &len, EVP_sha256(), nullptr) != 1) {
    throw Error(ErrorKind::InvariantViolation, "sha256 digest failed");
  }
  static constexpr char kHex[] = "0123456789abcdef";
  std::string out;
  out.reserve(len * 2);
  for (unsigned int i = 0; i < len; ++i) {
    out.push_back(kHex[digest[i] >> 4]);
    out.push_back(kHex[digest[i] & 0xF]);
  }
  return out;
}

std::string read_file(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorKind::Workspace, "cannot read " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void write_file(const fs::path& path, std::string_view bytes) {
  if (path.has_parent_path()) {
    std::error_code ec;
    fs::create_directories(path.parent_path(), ec);
  }
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error(ErrorKind::Workspace, "cannot write " + path.string());
  out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
  if (!out) throw Error(ErrorKind::Workspace, "short write to " + path.string());
}

std::string_view trim(std::string_view s) {
  constexpr std::string_view ws = " \t\r\n\f\v";
  const auto b = s.find_first_not_of(ws);
  if (b == std::string_view::npos) return {};
  const auto e = s.find_last_not_of(ws);
  return s.substr(b, e - b + 1);
}

std::uint64_t fnv1a64(std::string_view s) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : s) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  return h;
}

std::string shell_quote(std::string_view s) {
  std::string out = "'";
  for (char c : s) {
    if (c == '\'') {
      out += "'\\''";
    } else {
      out.push_back(c);
    }
  }
  out.push_back('\'');
  return out;
}

std::string substitute(std::string tmpl, std::string_view name, std::string_view value) {
  const std::string key = "{" + std::string(name) + "}";
  std::size_t pos = 0;
  while ((pos = tmpl.find(key, pos)) != std::string::npos) {
    tmpl.replace(pos, key.size(), value);
    pos += value.size();
  }
  return tmpl;
}

std::vector<std::string> split_lines(std::string_view text) {
  std::vector<std::string> lines;
  std::size_t start = 0;
  while (start < text.size()) {
    auto nl = text.find('\n', start);
    if (nl == std::string_view::npos) {
      lines.emplace_back(text.substr(start));
      break;
    }
    lines.emplace_back(text.substr(start, nl - start));
    start = nl + 1;
  }
  return lines;
}

}  // namespace patchcluster
