#include "patchcluster/sim.hpp"

#include <algorithm>
#include <cctype>
#include <cstdio>
#include <numeric>
#include <set>
#include <tuple>

#include "patchcluster/adapters.hpp"
#include "patchcluster/error.hpp"

namespace patchcluster {

std::uint64_t SimExecutorState::next_invocation(const std::string& key) {
  std::lock_guard lock(mutex_);
  return ++counters_[key];
}

std::vector<SimRule> parse_sim_rules(std::string_view text) {
  std::vector<SimRule> rules;
  for (const auto& raw : split_lines(text)) {
    const auto line = trim(raw);
    if (line.empty() || line.starts_with("#") || line.starts_with("//")) continue;
    const auto arrow = line.find("->");
    if (arrow == std::string_view::npos) continue;
    auto input = trim(line.substr(0, arrow));
    auto output = trim(line.substr(arrow + 2));
    if (input.empty() || input.find_first_of(" \t") != std::string_view::npos) continue;
    rules.push_back({std::string(input), std::string(output)});
  }
  return rules;
}

std::optional<std::string> sim_lookup(const fs::path& program_dir, const std::string& file,
                                      const std::string& input) {
  std::error_code ec;
  const auto path = program_dir / file;
  if (!fs::is_regular_file(path, ec)) return std::nullopt;
  for (const auto& r : parse_sim_rules(read_file(path))) {
    if (r.input == input) return r.output;
  }
  return std::nullopt;
}

namespace {

std::string resolve_flaky(const std::string& output, std::uint64_t invocation) {
  const auto alts = output.substr(std::string_view("!flaky ").size());
  const auto bar = alts.find('|');
  if (bar == std::string::npos) return alts;
  return invocation % 2 == 1 ? alts.substr(0, bar) : alts.substr(bar + 1);
}

std::string sanitize(std::string_view s) {
  std::string out;
  for (char c : s) out.push_back(std::isalnum(static_cast<unsigned char>(c)) || c == '_' || c == '-' ? c : '_');
  return out;
}

}  // namespace

bool sim_generate(const fs::path& program_dir, const std::string& target_file, std::int64_t seed,
                  std::size_t max_tests, const fs::path& out_dir) {
  std::error_code ec;
  const auto path = program_dir / target_file;
  if (!fs::is_regular_file(path, ec)) return false;

  std::vector<SimRule> rules;
  std::set<std::string> seen;
  for (auto& r : parse_sim_rules(read_file(path))) {
    if (seen.insert(r.input).second) rules.push_back(std::move(r));
  }

  std::vector<std::size_t> chosen(rules.size());
  std::iota(chosen.begin(), chosen.end(), 0);
  if (max_tests > 0 && max_tests < rules.size()) {
    SplitMix64 rng(static_cast<std::uint64_t>(seed) ^ fnv1a64(target_file));
    for (std::size_t i = chosen.size(); i > 1; --i) {
      std::swap(chosen[i - 1], chosen[rng.below(i)]);
    }
    chosen.resize(max_tests);
    std::sort(chosen.begin(), chosen.end());
  }

  std::vector<std::string> ids;
  std::map<std::string, std::string> descriptions;
  std::string tsv;
  for (std::size_t k = 0; k < chosen.size(); ++k) {
    const auto& r = rules[chosen[k]];
    char num[32];
    std::snprintf(num, sizeof num, "t%03zu_", k);
    std::string id = num + sanitize(r.input);
    std::string expected = r.output.starts_with("!flaky ") ? resolve_flaky(r.output, 1) : r.output;
    tsv += id + "\t" + target_file + "\t" + r.input + "\t" + expected + "\n";
    descriptions[id] = target_file + ": " + r.input + " -> " + expected;
    ids.push_back(std::move(id));
  }
  fs::create_directories(out_dir, ec);
  write_file(out_dir / "tests.tsv", tsv);
  write_suite_manifest(out_dir, ids, descriptions);
  return true;
}

ProcessResult sim_execute(const fs::path& program_dir, const fs::path& suite_dir, const fs::path& results_file,
                          SimExecutorState& state) {
  const auto invocation = state.next_invocation(program_dir.string() + "|" + suite_dir.string());
  std::string out;
  ProcessResult result{0, false};
  for (const auto& line : split_lines(read_file(suite_dir / "tests.tsv"))) {
    if (line.empty()) continue;
    std::vector<std::string> cols;
    std::size_t start = 0;
    for (;;) {
      auto tab = line.find('\t', start);
      cols.push_back(line.substr(start, tab == std::string::npos ? std::string::npos : tab - start));
      if (tab == std::string::npos) break;
      start = tab + 1;
    }
    if (cols.size() != 4) throw Error(ErrorKind::ResultParse, "bad tests.tsv line in " + suite_dir.string());
    const auto& [id, file, input, expected] = std::tie(cols[0], cols[1], cols[2], cols[3]);

    ResultRecord rec{id, Status::Pass, "", 0};
    auto actual = sim_lookup(program_dir, file, input);
    if (!actual) {
      rec.status = Status::Error;
      rec.message = "no rule for input " + input;
    } else if (*actual == "!hang") {
      result.timed_out = true;
      result.exit_code = -1;
      break;
    } else if (actual->starts_with("!crash")) {
      rec.status = Status::Error;
      rec.message = std::string(trim(std::string_view(*actual).substr(6)));
      if (rec.message.empty()) rec.message = "crash";
    } else {
      const auto value = actual->starts_with("!flaky ") ? resolve_flaky(*actual, invocation) : *actual;
      if (value != expected) {
        rec.status = Status::Fail;
        rec.message = "expected " + expected + " but was " + value;
        result.exit_code = 1;
      }
    }
    out += format_result_record(rec);
  }
  write_file(results_file, out);
  return result;
}

}  // namespace patchcluster
