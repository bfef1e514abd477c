#include "patchcluster/matrix.hpp"

#include <algorithm>
#include <map>
#include <memory>
#include <set>

#include <nlohmann/json.hpp>

#include "parallel.hpp"
#include "patchcluster/error.hpp"

namespace patchcluster {

using json = nlohmann::json;
using ordered_json = nlohmann::ordered_json;

std::optional<std::size_t> ExecutionMatrix::patch_index(std::string_view id) const {
  auto it = std::lower_bound(patch_ids.begin(), patch_ids.end(), id);
  if (it == patch_ids.end() || *it != id) return std::nullopt;
  return static_cast<std::size_t>(it - patch_ids.begin());
}

void ExecutionMatrix::check_invariants() const {
  if (outcomes.size() != patch_ids.size() * tests.size()) {
    throw Error(ErrorKind::InvariantViolation, "matrix is not total");
  }
  if (!std::is_sorted(patch_ids.begin(), patch_ids.end()) ||
      std::adjacent_find(patch_ids.begin(), patch_ids.end()) != patch_ids.end()) {
    throw Error(ErrorKind::InvariantViolation, "matrix patch ids are not strictly ascending");
  }
  for (std::size_t i = 1; i < tests.size(); ++i) {
    if (!(tests[i - 1].key < tests[i].key)) {
      throw Error(ErrorKind::InvariantViolation, "matrix tests are not strictly ascending");
    }
  }
  for (const auto& o : outcomes) {
    if ((o.status == Status::Pass) != o.message.empty()) {
      throw Error(ErrorKind::InvariantViolation, "outcome message must be empty iff status is pass");
    }
  }
}

fs::path workspace_root(const fs::path& work_dir) { return work_dir / "ws"; }

namespace {

std::string dir_name(std::string_view id) {
  std::string out;
  for (char c : id) out.push_back(c == '/' || c == '\\' || c == ':' || c == '#' ? '_' : c);
  return out;
}

struct PatchGeneration {
  std::vector<RawSuite> suites;
  std::vector<GenerationFailure> failures;
  std::vector<TestKey> flaky;
};

PatchGeneration generate_for_patch(const ProgramSnapshot& snapshot, const Patch& patch,
                                   const std::vector<GeneratorSpec>& generators, const ExecutorSpec& executor,
                                   int n_runs, const ExecutionOptions& options) {
  PatchGeneration out;
  const detail::ScopedDir ws(workspace_root(options.work_dir) / dir_name(patch.id));
  std::error_code ec;
  fs::remove_all(ws.path(), ec);
  apply_patch(snapshot, patch, ws.path());

  const bool many_files = patch.files_touched.size() > 1;
  for (const auto& gen : generators) {
    for (std::size_t k = 0; k < patch.files_touched.size(); ++k) {
      const auto& file = patch.files_touched[k];
      std::string suite_id = gen.name + ":" + patch.id;
      if (many_files) suite_id += "#" + std::to_string(k);
      const auto suite_dir = options.work_dir / "suites" / dir_name(suite_id);
      auto result = run_generator(gen, ws.path(), file, patch.id, suite_id, suite_dir);
      if (result.failure) {
        out.failures.push_back(std::move(*result.failure));
        continue;
      }
      if (result.suite->test_ids.empty()) {
        out.failures.push_back({gen.name, patch.id, file, "no tests generated"});
        continue;
      }
      RawSuite kept = flakiness_filter(executor, ws.path(), *result.suite, n_runs,
                                       options.work_dir / "flaky" / dir_name(suite_id), options.rules);
      for (const auto& id : result.suite->test_ids) {
        if (!std::binary_search(kept.test_ids.begin(), kept.test_ids.end(), id)) {
          out.flaky.push_back({suite_id, id});
        }
      }
      if (!kept.test_ids.empty()) out.suites.push_back(std::move(kept));
    }
  }
  return out;
}

std::vector<TestCase> tests_of(const std::vector<RawSuite>& suites) {
  std::vector<TestCase> tests;
  for (const auto& s : suites) {
    for (const auto& id : s.test_ids) {
      auto d = s.descriptions.find(id);
      tests.push_back({{s.suite_id, id}, s.generator, s.origin_patch, d == s.descriptions.end() ? "" : d->second});
    }
  }
  std::sort(tests.begin(), tests.end(), [](const TestCase& a, const TestCase& b) { return a.key < b.key; });
  return tests;
}

ExecutionMatrix empty_matrix(const PatchSet& patches, const TestCaseGeneration& tcg) {
  ExecutionMatrix m;
  m.bug_id = patches.bug_id;
  m.patch_ids = patches.ids();
  m.tests = tcg.tests;
  m.outcomes.resize(m.patch_ids.size() * m.tests.size());
  return m;
}

std::map<std::string, std::size_t> suite_positions(const TestCaseGeneration& tcg) {
  std::map<std::string, std::size_t> pos;
  for (std::size_t i = 0; i < tcg.suites.size(); ++i) pos[tcg.suites[i].suite_id] = i;
  return pos;
}

fs::path results_path(const ExecutionOptions& options, const std::string& patch_id, const std::string& suite_id) {
  return options.work_dir / "results" / dir_name(patch_id) / (dir_name(suite_id) + ".jsonl");
}

}  // namespace

TestCaseGeneration generate_all_tests(const ProgramSnapshot& snapshot, const PatchSet& patches,
                                      const std::vector<GeneratorSpec>& generators,
                                      const ExecutorSpec& executor, int n_runs, const ExecutionOptions& options) {
  for (const auto& g : generators) g.validate();
  executor.validate();
  std::vector<PatchGeneration> per_patch(patches.patches.size());
  detail::parallel_for(per_patch.size(), options.workers, [&](std::size_t i) {
    per_patch[i] = generate_for_patch(snapshot, patches.patches[i], generators, executor, n_runs, options);
  });

  TestCaseGeneration tcg;
  for (auto& pg : per_patch) {
    std::move(pg.suites.begin(), pg.suites.end(), std::back_inserter(tcg.suites));
    std::move(pg.failures.begin(), pg.failures.end(), std::back_inserter(tcg.failures));
    std::move(pg.flaky.begin(), pg.flaky.end(), std::back_inserter(tcg.flaky));
  }
  std::sort(tcg.suites.begin(), tcg.suites.end(),
            [](const RawSuite& a, const RawSuite& b) { return a.suite_id < b.suite_id; });
  std::sort(tcg.flaky.begin(), tcg.flaky.end());
  tcg.tests = tests_of(tcg.suites);
  return tcg;
}

ExecutionMatrix cross_execute(const ProgramSnapshot& snapshot, const PatchSet& patches,
                              const TestCaseGeneration& tcg, const ExecutorSpec& executor,
                              const ExecutionOptions& options) {
  executor.validate();
  ExecutionMatrix m = empty_matrix(patches, tcg);
  const std::size_t n_patches = patches.patches.size();
  const std::size_t n_suites = tcg.suites.size();

  std::vector<std::unique_ptr<detail::ScopedDir>> workspaces(n_patches);
  for (std::size_t p = 0; p < n_patches; ++p) {
    workspaces[p] = std::make_unique<detail::ScopedDir>(workspace_root(options.work_dir) /
                                                        dir_name(patches.patches[p].id));
  }
  detail::parallel_for(n_patches, options.workers, [&](std::size_t p) {
    std::error_code ec;
    fs::remove_all(workspaces[p]->path(), ec);
    apply_patch(snapshot, patches.patches[p], workspaces[p]->path());
  });

  std::vector<OutcomeMap> grid(n_patches * n_suites);
  detail::parallel_for(grid.size(), options.workers, [&](std::size_t cell) {
    const std::size_t p = cell / n_suites;
    const std::size_t s = cell % n_suites;
    grid[cell] = run_suite(executor, workspaces[p]->path(), tcg.suites[s],
                           results_path(options, patches.patches[p].id, tcg.suites[s].suite_id), options.rules);
  });

  const auto pos = suite_positions(tcg);
  for (std::size_t p = 0; p < n_patches; ++p) {
    for (std::size_t t = 0; t < m.tests.size(); ++t) {
      const auto& key = m.tests[t].key;
      m.at(p, t) = grid[p * n_suites + pos.at(key.suite_id)].at(key.test_id);
    }
  }
  m.check_invariants();
  return m;
}

ExecutionMatrix cross_execute_serial(const ProgramSnapshot& snapshot, const PatchSet& patches,
                                     const TestCaseGeneration& tcg, const ExecutorSpec& executor,
                                     const ExecutionOptions& options) {
  executor.validate();
  ExecutionMatrix m = empty_matrix(patches, tcg);
  const auto pos = suite_positions(tcg);
  for (std::size_t p = 0; p < patches.patches.size(); ++p) {
    const auto& patch = patches.patches[p];
    const detail::ScopedDir ws(workspace_root(options.work_dir) / dir_name(patch.id));
    std::error_code ec;
    fs::remove_all(ws.path(), ec);
    apply_patch(snapshot, patch, ws.path());
    std::map<std::string, OutcomeMap> by_suite;
    for (std::size_t t = 0; t < m.tests.size(); ++t) {
      const auto& key = m.tests[t].key;
      auto it = by_suite.find(key.suite_id);
      if (it == by_suite.end()) {
        const auto& suite = tcg.suites[pos.at(key.suite_id)];
        it = by_suite
                 .emplace(key.suite_id, run_suite(executor, ws.path(), suite,
                                                  results_path(options, patch.id, suite.suite_id), options.rules))
                 .first;
      }
      m.at(p, t) = it->second.at(key.test_id);
    }
  }
  m.check_invariants();
  return m;
}

// ---------------------------------------------------------------------------

std::string matrix_to_json(const ExecutionMatrix& m) {
  ordered_json j;
  j["bug_id"] = m.bug_id;
  j["patch_ids"] = m.patch_ids;
  j["tests"] = ordered_json::array();
  for (const auto& t : m.tests) {
    ordered_json tj;
    tj["suite_id"] = t.key.suite_id;
    tj["test_id"] = t.key.test_id;
    tj["generator"] = t.generator;
    tj["origin_patch"] = t.origin_patch;
    j["tests"].push_back(std::move(tj));
  }
  j["outcomes"] = ordered_json::array();
  for (std::size_t p = 0; p < m.patch_ids.size(); ++p) {
    for (std::size_t t = 0; t < m.tests.size(); ++t) {
      const auto& o = m.at(p, t);
      ordered_json oj;
      oj["patch_id"] = m.patch_ids[p];
      oj["suite_id"] = m.tests[t].key.suite_id;
      oj["test_id"] = m.tests[t].key.test_id;
      oj["status"] = std::string(to_string(o.status));
      oj["message"] = o.message;
      j["outcomes"].push_back(std::move(oj));
    }
  }
  return j.dump(2, ' ', false, json::error_handler_t::replace) + "\n";
}

namespace {

[[noreturn]] void schema(const std::string& what) { throw Error(ErrorKind::Schema, "matrix.json: " + what); }

std::string str_field(const json& obj, const char* name) {
  if (!obj.is_object() || !obj.contains(name) || !obj[name].is_string()) {
    schema(std::string("missing string field '") + name + "'");
  }
  return obj[name].get<std::string>();
}

}  // namespace

ExecutionMatrix matrix_from_json(std::string_view text) {
  json j = json::parse(text, nullptr, false);
  if (j.is_discarded() || !j.is_object()) schema("not a JSON object");
  ExecutionMatrix m;
  m.bug_id = str_field(j, "bug_id");
  if (!j.contains("patch_ids") || !j["patch_ids"].is_array()) schema("missing patch_ids");
  if (!j.contains("tests") || !j["tests"].is_array()) schema("missing tests");
  if (!j.contains("outcomes") || !j["outcomes"].is_array()) schema("missing outcomes");
  for (const auto& id : j["patch_ids"]) {
    if (!id.is_string()) schema("patch id must be a string");
    m.patch_ids.push_back(id.get<std::string>());
  }
  std::sort(m.patch_ids.begin(), m.patch_ids.end());
  if (std::adjacent_find(m.patch_ids.begin(), m.patch_ids.end()) != m.patch_ids.end()) schema("duplicate patch id");
  if (m.patch_ids.empty()) schema("no patches");
  for (const auto& t : j["tests"]) {
    m.tests.push_back({{str_field(t, "suite_id"), str_field(t, "test_id")}, str_field(t, "generator"),
                       str_field(t, "origin_patch"), ""});
  }
  std::sort(m.tests.begin(), m.tests.end(), [](const TestCase& a, const TestCase& b) { return a.key < b.key; });
  for (std::size_t i = 1; i < m.tests.size(); ++i) {
    if (m.tests[i - 1].key == m.tests[i].key) schema("duplicate test key");
  }

  std::map<TestKey, std::size_t> test_pos;
  for (std::size_t t = 0; t < m.tests.size(); ++t) test_pos[m.tests[t].key] = t;
  m.outcomes.resize(m.patch_ids.size() * m.tests.size());
  std::vector<bool> seen(m.outcomes.size(), false);
  for (const auto& o : j["outcomes"]) {
    const auto p = m.patch_index(str_field(o, "patch_id"));
    if (!p) schema("outcome for unknown patch");
    auto tp = test_pos.find({str_field(o, "suite_id"), str_field(o, "test_id")});
    if (tp == test_pos.end()) schema("outcome for unknown test");
    const auto status = parse_status(str_field(o, "status"));
    if (!status) schema("bad status");
    std::string message = str_field(o, "message");
    if ((*status == Status::Pass) != message.empty()) schema("message must be empty iff status is pass");
    const std::size_t cell = *p * m.tests.size() + tp->second;
    if (seen[cell]) schema("duplicate outcome");
    seen[cell] = true;
    m.outcomes[cell] = {*status, std::move(message)};
  }
  if (std::find(seen.begin(), seen.end(), false) != seen.end()) schema("outcomes are not total");
  return m;
}

}  // namespace patchcluster
