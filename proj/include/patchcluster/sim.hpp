#pragma once

// Built-in simulation adapter over "toy programs".
//
// A toy program is a directory of line-oriented rule files. Every line of the
// form `input -> output` is a rule; other lines (blank, comments) are ignored
// and the first rule for an input wins. Output tokens:
//
//   literal        the program prints it
//   !crash <msg>   the program raises an error carrying <msg>
//   !hang          the program never answers (harness timeout)
//   !flaky a|b     prints a on odd invocations and b on even ones
//
// A generated test is (file, input, expected output on the origin program);
// executing it compares the actual output with the expected one.

#include <cstdint>
#include <map>
#include <mutex>
#include <optional>
#include <string>
#include <vector>

#include "patchcluster/subprocess.hpp"
#include "patchcluster/util.hpp"

namespace patchcluster {

class SimExecutorState {
 public:
  /// 1-based invocation number for (program, suite).
  std::uint64_t next_invocation(const std::string& key);

 private:
  std::mutex mutex_;
  std::map<std::string, std::uint64_t> counters_;
};

struct SimRule {
  std::string input;
  std::string output;
};

std::vector<SimRule> parse_sim_rules(std::string_view text);

/// Raw output token for input in file, or nullopt when the file or rule is
/// missing.
std::optional<std::string> sim_lookup(const fs::path& program_dir, const std::string& file,
                                      const std::string& input);

/// Writes suite.json and tests.tsv into out_dir. Returns false when the
/// target file does not exist.
bool sim_generate(const fs::path& program_dir, const std::string& target_file, std::int64_t seed,
                  std::size_t max_tests, const fs::path& out_dir);

/// Executes tests.tsv from suite_dir and writes the results file.
ProcessResult sim_execute(const fs::path& program_dir, const fs::path& suite_dir, const fs::path& results_file,
                          SimExecutorState& state);

}  // namespace patchcluster
