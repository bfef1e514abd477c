#pragma once

#include <map>
#include <memory>
#include <optional>
#include <regex>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "patchcluster/util.hpp"

namespace patchcluster {

enum class Status { Pass, Fail, Error, Timeout };

std::string_view to_string(Status status);
std::optional<Status> parse_status(std::string_view text);

struct TestOutcome {
  Status status = Status::Pass;
  std::string message;  // empty iff Pass

  static TestOutcome pass() { return {}; }
  static TestOutcome fail(std::string msg) { return {Status::Fail, std::move(msg)}; }
  static TestOutcome error(std::string msg) { return {Status::Error, std::move(msg)}; }
  static TestOutcome timeout(std::string msg) { return {Status::Timeout, std::move(msg)}; }

  friend bool operator==(const TestOutcome&, const TestOutcome&) = default;
};

inline constexpr std::string_view kMissingResult = "missing-result";
inline constexpr std::string_view kHarnessTimeout = "harness-timeout";

// ---------------------------------------------------------------------------
// Message normalization

struct MessageRule {
  std::string pattern;
  std::string replacement;
  std::regex regex;
};

class MessageRules {
 public:
  /// Compiles (pattern, replacement) pairs in order. Throws ConfigError on an
  /// invalid regex.
  static MessageRules compile(const std::vector<std::pair<std::string, std::string>>& pairs);

  /// Hex addresses, paths under workspace_root, and millisecond durations.
  static MessageRules defaults(const fs::path& workspace_root = {});

  const std::vector<MessageRule>& rules() const { return rules_; }
  std::string apply(std::string text) const;

 private:
  std::vector<MessageRule> rules_;
};

/// Trims, then applies the rules in order.
std::string normalize_message(std::string_view raw, const MessageRules& rules);

// ---------------------------------------------------------------------------
// Adapter specs

enum class AdapterKind {
  Command,    // external process driven by a command template
  Simulated,  // in-process toy-program simulator
};

struct GeneratorSpec {
  std::string name;
  AdapterKind kind = AdapterKind::Command;
  std::string command_template;
  int timeout_s = 60;
  std::int64_t seed = 0;
  std::size_t max_tests = 0;  // simulated only; 0 = one test per rule

  /// Throws ConfigError when a required placeholder is missing or the
  /// timeout is not positive.
  void validate() const;
};

/// Per-(program, suite) invocation counters for scripted nondeterminism in
/// the simulated executor.
class SimExecutorState;

struct ExecutorSpec {
  std::string name;
  AdapterKind kind = AdapterKind::Command;
  std::string command_template;
  int timeout_s = 120;
  std::shared_ptr<SimExecutorState> sim_state;

  static ExecutorSpec simulated(std::string name, int timeout_s = 120);
  void validate() const;
};

struct RawSuite {
  std::string suite_id;
  std::string generator;
  std::string origin_patch;
  std::string target_file;
  std::vector<std::string> test_ids;
  fs::path suite_dir;
  /// Optional human-readable test inputs keyed by test id.
  std::map<std::string, std::string> descriptions;
};

struct GenerationFailure {
  std::string generator;
  std::string origin_patch;
  std::string file;
  std::string reason;

  friend bool operator==(const GenerationFailure&, const GenerationFailure&) = default;
};

struct GenerationOutcome {
  std::optional<RawSuite> suite;
  std::optional<GenerationFailure> failure;
};

/// Runs one generator on one touched file. A timeout, a nonzero exit or a
/// missing manifest yields a failure record, never an exception.
GenerationOutcome run_generator(const GeneratorSpec& spec, const fs::path& program_dir,
                                const std::string& target_file, const std::string& origin_patch,
                                const std::string& suite_id, const fs::path& out_dir);

using OutcomeMap = std::map<std::string, TestOutcome>;

/// Runs a whole suite and returns exactly one outcome per declared test id.
OutcomeMap run_suite(const ExecutorSpec& spec, const fs::path& program_dir, const RawSuite& suite,
                     const fs::path& results_file, const MessageRules& rules);

/// Keeps the tests whose outcome is identical over n_runs executions on the
/// suite's origin program.
RawSuite flakiness_filter(const ExecutorSpec& spec, const fs::path& program_dir, const RawSuite& suite,
                          int n_runs, const fs::path& scratch_dir, const MessageRules& rules);

// ---------------------------------------------------------------------------
// Wire formats

struct ResultRecord {
  std::string test_id;
  Status status;
  std::string message;
  std::int64_t duration_ms = 0;
};

/// One newline-terminated results-file record.
std::string format_result_record(const ResultRecord& record);

/// Parses a results file. When truncated_tail_ok is set, a malformed final
/// line (a record cut off by a timeout) is dropped instead of rejected.
std::vector<ResultRecord> parse_results(std::string_view text, bool truncated_tail_ok = false);

/// Writes `{out_dir}/suite.json`.
void write_suite_manifest(const fs::path& out_dir, const std::vector<std::string>& test_ids,
                          const std::map<std::string, std::string>& descriptions = {});

}  // namespace patchcluster
