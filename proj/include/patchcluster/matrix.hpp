#pragma once

#include <compare>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "patchcluster/adapters.hpp"
#include "patchcluster/diffkit.hpp"

namespace patchcluster {

/// A test's identity across the run. Two generators may emit the same local
/// test name, so the suite is part of the key.
struct TestKey {
  std::string suite_id;
  std::string test_id;

  friend auto operator<=>(const TestKey&, const TestKey&) = default;
  friend bool operator==(const TestKey&, const TestKey&) = default;
};

struct TestCase {
  TestKey key;
  std::string generator;
  std::string origin_patch;
  std::string description;  // report only; not part of matrix.json
};

/// Outcome of every (patch, test) pair, stored row-major by patch.
struct ExecutionMatrix {
  std::string bug_id;
  std::vector<std::string> patch_ids;  // ascending
  std::vector<TestCase> tests;         // ascending by key
  std::vector<TestOutcome> outcomes;   // patch_ids.size() * tests.size()

  const TestOutcome& at(std::size_t patch, std::size_t test) const { return outcomes[patch * tests.size() + test]; }
  TestOutcome& at(std::size_t patch, std::size_t test) { return outcomes[patch * tests.size() + test]; }

  std::optional<std::size_t> patch_index(std::string_view id) const;

  /// Throws InvariantViolation unless the matrix is total and canonically
  /// ordered.
  void check_invariants() const;
};

/// The generated tests of one bug plus the suites that carry them.
struct TestCaseGeneration {
  std::vector<RawSuite> suites;  // ascending suite_id, only suites with retained tests
  std::vector<TestCase> tests;   // ascending key
  std::vector<GenerationFailure> failures;
  std::vector<TestKey> flaky;    // tests dropped by the flakiness check
};

struct ExecutionOptions {
  fs::path work_dir;
  int workers = 1;
  MessageRules rules = MessageRules::defaults();
};

/// Workspace root under work_dir; message rules scrub paths below it.
fs::path workspace_root(const fs::path& work_dir);

/// For each patch, every generator on every touched file, followed by the
/// flakiness check. Patches are processed in parallel.
TestCaseGeneration generate_all_tests(const ProgramSnapshot& snapshot, const PatchSet& patches,
                                      const std::vector<GeneratorSpec>& generators,
                                      const ExecutorSpec& executor, int n_runs, const ExecutionOptions& options);

/// Runs every retained suite on every patch. The (patch, suite) grid is a
/// parallel work queue bounded by options.workers.
ExecutionMatrix cross_execute(const ProgramSnapshot& snapshot, const PatchSet& patches,
                              const TestCaseGeneration& tcg, const ExecutorSpec& executor,
                              const ExecutionOptions& options);

/// Single-threaded reference for cross_execute; must agree with it exactly.
ExecutionMatrix cross_execute_serial(const ProgramSnapshot& snapshot, const PatchSet& patches,
                                     const TestCaseGeneration& tcg, const ExecutorSpec& executor,
                                     const ExecutionOptions& options);

std::string matrix_to_json(const ExecutionMatrix& matrix);

/// Parses matrix.json; throws SchemaError on any violation, including a
/// non-total outcome list.
ExecutionMatrix matrix_from_json(std::string_view text);

}  // namespace patchcluster
