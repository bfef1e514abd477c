#include "patchcluster/adapters.hpp"

#include <set>

#include <nlohmann/json.hpp>

#include "patchcluster/error.hpp"
#include "patchcluster/sim.hpp"
#include "patchcluster/subprocess.hpp"

namespace patchcluster {

using json = nlohmann::json;
using ordered_json = nlohmann::ordered_json;

std::string_view to_string(Status status) {
  switch (status) {
    case Status::Pass: return "pass";
    case Status::Fail: return "fail";
    case Status::Error: return "error";
    case Status::Timeout: return "timeout";
  }
  return "error";
}

std::optional<Status> parse_status(std::string_view text) {
  if (text == "pass") return Status::Pass;
  if (text == "fail") return Status::Fail;
  if (text == "error") return Status::Error;
  if (text == "timeout") return Status::Timeout;
  return std::nullopt;
}

// ---------------------------------------------------------------------------

MessageRules MessageRules::compile(const std::vector<std::pair<std::string, std::string>>& pairs) {
  MessageRules out;
  for (const auto& [pattern, replacement] : pairs) {
    try {
      out.rules_.push_back({pattern, replacement, std::regex(pattern, std::regex::ECMAScript)});
    } catch (const std::regex_error& e) {
      throw Error(ErrorKind::Config, "invalid message rule /" + pattern + "/: " + e.what());
    }
  }
  return out;
}

namespace {

std::string regex_escape(std::string_view s) {
  static constexpr std::string_view special = R"(\^$.|?*+()[]{}/)";
  std::string out;
  for (char c : s) {
    if (special.find(c) != std::string_view::npos) out.push_back('\\');
    out.push_back(c);
  }
  return out;
}

}  // namespace

MessageRules MessageRules::defaults(const fs::path& workspace_root) {
  // Word boundaries keep the hex rule from re-matching its own "0xADDR".
  std::vector<std::pair<std::string, std::string>> pairs = {{R"(\b0x[0-9a-fA-F]+\b)", "0xADDR"}};
  if (!workspace_root.empty()) {
    // The first component under the root names the per-patch workspace.
    pairs.emplace_back(regex_escape(workspace_root.lexically_normal().generic_string()) + R"(/[^/\s]+)", "<WS>");
  }
  pairs.emplace_back(R"(\d+ms)", "Nms");
  return compile(pairs);
}

std::string MessageRules::apply(std::string text) const {
  for (const auto& r : rules_) text = std::regex_replace(text, r.regex, r.replacement);
  return text;
}

std::string normalize_message(std::string_view raw, const MessageRules& rules) {
  return std::string(trim(rules.apply(std::string(trim(raw)))));
}

// ---------------------------------------------------------------------------

void GeneratorSpec::validate() const {
  if (name.empty()) throw Error(ErrorKind::Config, "generator without a name");
  if (timeout_s <= 0) throw Error(ErrorKind::Config, "generator " + name + ": timeout_s must be positive");
  if (kind == AdapterKind::Command) {
    for (auto ph : {"{program_dir}", "{out_dir}"}) {
      if (command_template.find(ph) == std::string::npos) {
        throw Error(ErrorKind::Config, "generator " + name + ": command lacks " + ph);
      }
    }
  }
}

ExecutorSpec ExecutorSpec::simulated(std::string name, int timeout_s) {
  ExecutorSpec spec;
  spec.name = std::move(name);
  spec.kind = AdapterKind::Simulated;
  spec.timeout_s = timeout_s;
  spec.sim_state = std::make_shared<SimExecutorState>();
  return spec;
}

void ExecutorSpec::validate() const {
  if (timeout_s <= 0) throw Error(ErrorKind::Config, "executor " + name + ": timeout_s must be positive");
  if (kind == AdapterKind::Command) {
    for (auto ph : {"{program_dir}", "{suite_dir}", "{results_file}"}) {
      if (command_template.find(ph) == std::string::npos) {
        throw Error(ErrorKind::Config, "executor " + name + ": command lacks " + ph);
      }
    }
  } else if (!sim_state) {
    throw Error(ErrorKind::Config, "executor " + name + ": simulated executor without state");
  }
}

// ---------------------------------------------------------------------------

std::string format_result_record(const ResultRecord& record) {
  ordered_json j;
  j["test_id"] = record.test_id;
  j["status"] = std::string(to_string(record.status));
  j["message"] = record.message;
  j["duration_ms"] = record.duration_ms;
  return j.dump(-1, ' ', false, json::error_handler_t::replace) + "\n";
}

std::vector<ResultRecord> parse_results(std::string_view text, bool truncated_tail_ok) {
  std::vector<ResultRecord> out;
  const auto lines = split_lines(text);
  for (std::size_t i = 0; i < lines.size(); ++i) {
    const auto line = trim(lines[i]);
    if (line.empty()) continue;
    const bool last = i + 1 == lines.size();
    auto bad = [&](const std::string& why) -> bool {
      if (truncated_tail_ok && last) return true;
      throw Error(ErrorKind::ResultParse, "results line " + std::to_string(i + 1) + ": " + why);
    };
    json j = json::parse(line, nullptr, false);
    if (j.is_discarded() || !j.is_object()) {
      bad("not a JSON object");
      continue;
    }
    if (!j.contains("test_id") || !j["test_id"].is_string()) {
      bad("missing test_id");
      continue;
    }
    if (!j.contains("status") || !j["status"].is_string()) {
      bad("missing status");
      continue;
    }
    auto status = parse_status(j["status"].get<std::string>());
    if (!status || *status == Status::Timeout) {
      bad("status must be pass, fail or error");
      continue;
    }
    if (!j.contains("message") || !j["message"].is_string()) {
      bad("missing message");
      continue;
    }
    if (j.contains("duration_ms") && !j["duration_ms"].is_number_integer()) {
      bad("duration_ms must be an integer");
      continue;
    }
    out.push_back({j["test_id"].get<std::string>(), *status, j["message"].get<std::string>(),
                   j.value("duration_ms", std::int64_t{0})});
  }
  return out;
}

void write_suite_manifest(const fs::path& out_dir, const std::vector<std::string>& test_ids,
                          const std::map<std::string, std::string>& descriptions) {
  ordered_json j;
  j["test_ids"] = test_ids;
  if (!descriptions.empty()) j["descriptions"] = descriptions;
  write_file(out_dir / "suite.json", j.dump(2) + "\n");
}

// ---------------------------------------------------------------------------

GenerationOutcome run_generator(const GeneratorSpec& spec, const fs::path& program_dir,
                                const std::string& target_file, const std::string& origin_patch,
                                const std::string& suite_id, const fs::path& out_dir) {
  spec.validate();
  auto failed = [&](std::string reason) {
    return GenerationOutcome{std::nullopt, GenerationFailure{spec.name, origin_patch, target_file, std::move(reason)}};
  };

  std::error_code ec;
  fs::remove_all(out_dir, ec);
  fs::create_directories(out_dir, ec);
  if (ec) throw Error(ErrorKind::Workspace, "cannot create " + out_dir.string());

  if (spec.kind == AdapterKind::Simulated) {
    if (!sim_generate(program_dir, target_file, spec.seed, spec.max_tests, out_dir)) {
      return failed("target file missing");
    }
  } else {
    std::string cmd = spec.command_template;
    cmd = substitute(cmd, "program_dir", shell_quote(program_dir.string()));
    cmd = substitute(cmd, "target_file", shell_quote(target_file));
    cmd = substitute(cmd, "out_dir", shell_quote(out_dir.string()));
    cmd = substitute(cmd, "seed", std::to_string(spec.seed));
    cmd = substitute(cmd, "timeout_s", std::to_string(spec.timeout_s));
    const auto res = run_shell(cmd, spec.timeout_s, fs::path(out_dir.string() + ".log"));
    if (res.timed_out) return failed("timeout");
    if (res.exit_code != 0) return failed("exit status " + std::to_string(res.exit_code));
  }

  const auto manifest = out_dir / "suite.json";
  if (!fs::is_regular_file(manifest, ec)) return failed("missing suite manifest");
  json j = json::parse(read_file(manifest), nullptr, false);
  if (j.is_discarded() || !j.is_object() || !j.contains("test_ids") || !j["test_ids"].is_array()) {
    return failed("malformed suite manifest");
  }
  RawSuite suite;
  suite.suite_id = suite_id;
  suite.generator = spec.name;
  suite.origin_patch = origin_patch;
  suite.target_file = target_file;
  suite.suite_dir = out_dir;
  std::set<std::string> seen;
  for (const auto& id : j["test_ids"]) {
    if (!id.is_string()) return failed("malformed suite manifest");
    if (!seen.insert(id.get<std::string>()).second) return failed("duplicate test id " + id.get<std::string>());
    suite.test_ids.push_back(id.get<std::string>());
  }
  std::sort(suite.test_ids.begin(), suite.test_ids.end());
  if (j.contains("descriptions") && j["descriptions"].is_object()) {
    for (const auto& [k, v] : j["descriptions"].items()) {
      if (v.is_string() && seen.contains(k)) suite.descriptions[k] = v.get<std::string>();
    }
  }
  return {std::move(suite), std::nullopt};
}

OutcomeMap run_suite(const ExecutorSpec& spec, const fs::path& program_dir, const RawSuite& suite,
                     const fs::path& results_file, const MessageRules& rules) {
  spec.validate();
  std::error_code ec;
  fs::remove(results_file, ec);
  if (results_file.has_parent_path()) fs::create_directories(results_file.parent_path(), ec);

  ProcessResult res;
  if (spec.kind == AdapterKind::Simulated) {
    res = sim_execute(program_dir, suite.suite_dir, results_file, *spec.sim_state);
  } else {
    std::string cmd = spec.command_template;
    cmd = substitute(cmd, "program_dir", shell_quote(program_dir.string()));
    cmd = substitute(cmd, "suite_dir", shell_quote(suite.suite_dir.string()));
    cmd = substitute(cmd, "results_file", shell_quote(results_file.string()));
    res = run_shell(cmd, spec.timeout_s, fs::path(results_file.string() + ".log"));
  }

  std::string text;
  if (fs::is_regular_file(results_file, ec)) text = read_file(results_file);
  const auto records = parse_results(text, res.timed_out);

  std::map<std::string, TestOutcome> reported;
  for (const auto& r : records) {
    TestOutcome o;
    o.status = r.status;
    if (r.status != Status::Pass) {
      o.message = normalize_message(r.message, rules);
      if (o.message.empty()) o.message = "(no message)";
    }
    if (!reported.emplace(r.test_id, std::move(o)).second) {
      throw Error(ErrorKind::ResultParse, "duplicate result for test " + r.test_id + " in " + results_file.string());
    }
  }

  OutcomeMap out;
  for (const auto& id : suite.test_ids) {
    if (auto it = reported.find(id); it != reported.end()) {
      out.emplace(id, it->second);
    } else if (res.timed_out) {
      out.emplace(id, TestOutcome::timeout(std::string(kHarnessTimeout)));
    } else {
      out.emplace(id, TestOutcome::error(std::string(kMissingResult)));
    }
  }
  return out;
}

RawSuite flakiness_filter(const ExecutorSpec& spec, const fs::path& program_dir, const RawSuite& suite,
                          int n_runs, const fs::path& scratch_dir, const MessageRules& rules) {
  if (n_runs < 2) throw Error(ErrorKind::Config, "flakiness check needs at least 2 runs");
  std::vector<OutcomeMap> runs;
  for (int k = 0; k < n_runs; ++k) {
    runs.push_back(run_suite(spec, program_dir, suite, scratch_dir / ("run" + std::to_string(k) + ".jsonl"), rules));
  }
  RawSuite kept = suite;
  kept.test_ids.clear();
  kept.descriptions.clear();
  for (const auto& id : suite.test_ids) {
    const auto& first = runs.front().at(id);
    const bool stable = std::all_of(runs.begin() + 1, runs.end(), [&](const OutcomeMap& m) { return m.at(id) == first; });
    if (stable) {
      kept.test_ids.push_back(id);
      if (auto d = suite.descriptions.find(id); d != suite.descriptions.end()) kept.descriptions.insert(*d);
    }
  }
  return kept;
}

}  // namespace patchcluster
