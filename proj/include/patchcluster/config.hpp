#pragma once

#include <optional>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "patchcluster/adapters.hpp"
#include "patchcluster/select.hpp"

namespace patchcluster {

struct RunConfig {
  fs::path program_root;
  fs::path patches_dir;
  fs::path out_dir;
  /// Subdirectory of patches_dir to process; inferred when patches_dir holds
  /// exactly one bug.
  std::string bug_id;

  std::optional<std::string> existing_suite_cmd;
  int existing_suite_timeout_s = 600;

  std::vector<GeneratorSpec> generators;
  ExecutorSpec executor;
  int n_flaky_runs = 3;
  SelectionStrategy strategy;
  int workers = 1;

  bool default_message_rules = true;
  std::vector<std::pair<std::string, std::string>> message_rules;
  std::vector<std::string> comment_prefixes = kDefaultCommentPrefixes;

  std::int64_t random_repetitions = 100;
  std::int64_t evaluation_seed = 0;

  /// sha256 of the configuration source; recorded as provenance.
  std::string config_hash;

  /// Throws ConfigError.
  void validate() const;

  /// Rules for a run whose workspaces live under workspace_root.
  MessageRules compile_rules(const fs::path& workspace_root) const;
};

/// Parses a TOML configuration. Relative paths resolve against base_dir.
RunConfig parse_config(std::string_view toml_text, const fs::path& base_dir);
RunConfig load_config(const fs::path& file);

}  // namespace patchcluster
