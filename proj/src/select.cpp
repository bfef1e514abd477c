#include "patchcluster/select.hpp"

#include <algorithm>
#include <charconv>
#include <limits>

#include "patchcluster/error.hpp"
#include "patchcluster/subprocess.hpp"

namespace patchcluster {

SelectionStrategy SelectionStrategy::parse(std::string_view text) {
  if (text == "shortest") return shortest();
  if (text.starts_with("random:")) {
    auto num = text.substr(7);
    std::int64_t seed = 0;
    auto r = std::from_chars(num.data(), num.data() + num.size(), seed);
    if (num.empty() || r.ec != std::errc{} || r.ptr != num.data() + num.size()) {
      throw Error(ErrorKind::Config, "bad random seed in strategy '" + std::string(text) + "'");
    }
    return random(seed);
  }
  if (text.starts_with("external:") && text.size() > 9) return external(std::string(text.substr(9)));
  throw Error(ErrorKind::Config, "unknown selection strategy '" + std::string(text) + "'");
}

std::string SelectionStrategy::to_string() const {
  switch (kind) {
    case Kind::Shortest: return "shortest";
    case Kind::Random: return "random:" + std::to_string(seed);
    case Kind::External: return "external:" + command;
  }
  return "shortest";
}

std::pair<std::string, std::vector<std::string>> shortest_of(const std::vector<std::string>& members,
                                                             const PatchSet& patches) {
  if (members.empty()) throw Error(ErrorKind::InvariantViolation, "shortest_of on an empty cluster");
  std::size_t best = std::numeric_limits<std::size_t>::max();
  std::vector<std::string> tied;
  for (const auto& id : members) {
    const Patch* p = patches.find(id);
    if (p == nullptr) throw Error(ErrorKind::UnknownPatch, "no patch " + id + " for length lookup");
    if (p->length < best) {
      best = p->length;
      tied.clear();
    }
    if (p->length == best) tied.push_back(id);
  }
  std::sort(tied.begin(), tied.end());
  return {tied.front(), tied};
}

std::string random_of(std::vector<std::string> members, std::int64_t seed) {
  if (members.empty()) throw Error(ErrorKind::InvariantViolation, "random_of on an empty cluster");
  std::sort(members.begin(), members.end());
  SplitMix64 rng(static_cast<std::uint64_t>(seed));
  return members[rng.below(members.size())];
}

namespace {

Selection select_external(const Cluster& c, const std::string& command, const fs::path& matrix_file) {
  std::string cmd = command;
  if (cmd.find("{matrix_file}") != std::string::npos) {
    cmd = substitute(cmd, "matrix_file", shell_quote(matrix_file.string()));
  } else {
    cmd += " " + shell_quote(matrix_file.string());
  }
  std::string input;
  for (const auto& m : c.members) input += m + "\n";
  std::string out;
  const auto res = run_shell_capture(cmd, 60, input, out);
  if (!res.ok()) {
    throw Error(ErrorKind::ExternalStrategy,
                "external strategy " + std::string(res.timed_out ? "timed out" : "failed") + " on " + c.cluster_id);
  }
  const std::string chosen(trim(out));
  if (std::find(c.members.begin(), c.members.end(), chosen) == c.members.end()) {
    throw Error(ErrorKind::ExternalStrategy,
                "external strategy printed '" + chosen + "', not a member of " + c.cluster_id);
  }
  return {c.cluster_id, chosen, {chosen}, "external"};
}

}  // namespace

std::vector<Selection> select_patches(const std::vector<Cluster>& clusters, const PatchSet& patches,
                                      const SelectionStrategy& strategy, const fs::path& matrix_file) {
  std::vector<Selection> out;
  out.reserve(clusters.size());
  for (const auto& c : clusters) {
    if (c.members.empty()) throw Error(ErrorKind::InvariantViolation, "empty cluster " + c.cluster_id);
    switch (strategy.kind) {
      case SelectionStrategy::Kind::Shortest: {
        auto [chosen, tied] = shortest_of(c.members, patches);
        const auto len = patches.find(chosen)->length;
        out.push_back({c.cluster_id, chosen, tied,
                       "shortest: length " + std::to_string(len) + ", " + std::to_string(tied.size()) + " tied"});
        break;
      }
      case SelectionStrategy::Kind::Random: {
        const auto seed = static_cast<std::int64_t>(static_cast<std::uint64_t>(strategy.seed) ^ fnv1a64(c.cluster_id));
        auto chosen = random_of(c.members, seed);
        out.push_back({c.cluster_id, chosen, {chosen},
                       "random: " + std::string(SplitMix64::kAlgorithm) + " seed " + std::to_string(strategy.seed)});
        break;
      }
      case SelectionStrategy::Kind::External:
        out.push_back(select_external(c, strategy.command, matrix_file));
        break;
    }
  }
  return out;
}

}  // namespace patchcluster
