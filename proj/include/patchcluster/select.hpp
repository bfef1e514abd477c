#pragma once

#include <cstdint>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "patchcluster/cluster.hpp"
#include "patchcluster/diffkit.hpp"

namespace patchcluster {

struct SelectionStrategy {
  enum class Kind { Shortest, Random, External };

  Kind kind = Kind::Shortest;
  std::int64_t seed = 0;  // Random
  std::string command;    // External

  static SelectionStrategy shortest() { return {}; }
  static SelectionStrategy random(std::int64_t seed) { return {Kind::Random, seed, {}}; }
  static SelectionStrategy external(std::string command) { return {Kind::External, 0, std::move(command)}; }

  /// "shortest", "random:<seed>" or "external:<command>". Throws ConfigError.
  static SelectionStrategy parse(std::string_view text);
  std::string to_string() const;
};

struct Selection {
  std::string cluster_id;
  std::string chosen;
  std::vector<std::string> co_minimal;
  std::string rationale;
};

/// One selection per cluster, in cluster order. matrix_file is handed to
/// external strategies.
std::vector<Selection> select_patches(const std::vector<Cluster>& clusters, const PatchSet& patches,
                                      const SelectionStrategy& strategy, const fs::path& matrix_file = {});

/// All members of minimal length, and the smallest id among them.
std::pair<std::string, std::vector<std::string>> shortest_of(const std::vector<std::string>& members,
                                                             const PatchSet& patches);

/// Uniform draw keyed on the sorted member list; independent of input order.
std::string random_of(std::vector<std::string> members, std::int64_t seed);

}  // namespace patchcluster
