#include "patchcluster/config.hpp"

#include <set>

#define TOML_EXCEPTIONS 1
#include <toml.hpp>

#include "patchcluster/error.hpp"

namespace patchcluster {

void RunConfig::validate() const {
  std::error_code ec;
  if (!fs::is_directory(program_root, ec)) throw Error(ErrorKind::Config, "program_root does not exist: " + program_root.string());
  if (!fs::is_directory(patches_dir, ec)) throw Error(ErrorKind::Config, "patches_dir does not exist: " + patches_dir.string());
  if (out_dir.empty()) throw Error(ErrorKind::Config, "out_dir is required");
  if (workers < 1) throw Error(ErrorKind::Config, "workers must be >= 1");
  if (n_flaky_runs < 2) throw Error(ErrorKind::Config, "n_flaky_runs must be >= 2");
  if (random_repetitions < 1) throw Error(ErrorKind::Config, "random_repetitions must be >= 1");
  if (existing_suite_timeout_s < 1) throw Error(ErrorKind::Config, "existing_suite_timeout_s must be >= 1");
  if (existing_suite_cmd && existing_suite_cmd->find("{program_dir}") == std::string::npos) {
    throw Error(ErrorKind::Config, "existing_suite_cmd lacks {program_dir}");
  }
  if (generators.empty()) throw Error(ErrorKind::Config, "at least one generator is required");
  std::set<std::string> names;
  for (const auto& g : generators) {
    g.validate();
    if (!names.insert(g.name).second) throw Error(ErrorKind::Config, "duplicate generator name " + g.name);
  }
  executor.validate();
  compile_rules({});
}

MessageRules RunConfig::compile_rules(const fs::path& workspace_root) const {
  std::vector<std::pair<std::string, std::string>> pairs;
  if (default_message_rules) {
    const auto defaults = MessageRules::defaults(workspace_root);
    for (const auto& r : defaults.rules()) pairs.emplace_back(r.pattern, r.replacement);
  }
  pairs.insert(pairs.end(), message_rules.begin(), message_rules.end());
  return MessageRules::compile(pairs);
}

namespace {

[[noreturn]] void config_error(const std::string& what) { throw Error(ErrorKind::Config, "config: " + what); }

void check_keys(const toml::table& t, std::initializer_list<std::string_view> allowed, const std::string& where) {
  for (const auto& [k, v] : t) {
    if (std::find(allowed.begin(), allowed.end(), k.str()) == allowed.end()) {
      config_error("unknown key '" + std::string(k.str()) + "' in " + where);
    }
  }
}

template <class T>
std::optional<T> get(const toml::table& t, std::string_view key, const std::string& where) {
  const toml::node* n = t.get(key);
  if (n == nullptr) return std::nullopt;
  auto v = n->value<T>();
  if (!v) config_error("'" + std::string(key) + "' in " + where + " has the wrong type");
  return v;
}

template <class T>
T require(const toml::table& t, std::string_view key, const std::string& where) {
  auto v = get<T>(t, key, where);
  if (!v) config_error("missing '" + std::string(key) + "' in " + where);
  return *v;
}

fs::path resolve(const fs::path& base, const std::string& p) {
  fs::path path(p);
  return path.is_absolute() ? path : (base / path).lexically_normal();
}

AdapterKind parse_kind(const std::string& kind, const std::string& where) {
  if (kind == "command") return AdapterKind::Command;
  if (kind == "sim") return AdapterKind::Simulated;
  config_error("kind in " + where + " must be \"command\" or \"sim\"");
}

int to_int(std::int64_t v, const std::string& what) {
  if (v < INT32_MIN || v > INT32_MAX) config_error(what + " out of range");
  return static_cast<int>(v);
}

}  // namespace

RunConfig parse_config(std::string_view toml_text, const fs::path& base_dir) {
  toml::table root;
  try {
    root = toml::parse(toml_text);
  } catch (const toml::parse_error& e) {
    config_error(std::string(e.description()) + " at line " + std::to_string(e.source().begin.line));
  }
  check_keys(root,
             {"program_root", "patches_dir", "out_dir", "bug_id", "existing_suite_cmd", "existing_suite_timeout_s",
              "generators", "executor", "n_flaky_runs", "strategy", "workers", "default_message_rules",
              "message_rules", "comment_prefixes", "random_repetitions", "evaluation_seed"},
             "top level");

  RunConfig cfg;
  cfg.config_hash = sha256_hex(toml_text);
  cfg.program_root = resolve(base_dir, require<std::string>(root, "program_root", "top level"));
  cfg.patches_dir = resolve(base_dir, require<std::string>(root, "patches_dir", "top level"));
  cfg.out_dir = resolve(base_dir, require<std::string>(root, "out_dir", "top level"));
  cfg.bug_id = get<std::string>(root, "bug_id", "top level").value_or("");
  cfg.existing_suite_cmd = get<std::string>(root, "existing_suite_cmd", "top level");
  cfg.existing_suite_timeout_s =
      to_int(get<std::int64_t>(root, "existing_suite_timeout_s", "top level").value_or(600), "existing_suite_timeout_s");
  cfg.n_flaky_runs = to_int(get<std::int64_t>(root, "n_flaky_runs", "top level").value_or(3), "n_flaky_runs");
  cfg.workers = to_int(get<std::int64_t>(root, "workers", "top level").value_or(1), "workers");
  cfg.strategy = SelectionStrategy::parse(get<std::string>(root, "strategy", "top level").value_or("shortest"));
  cfg.default_message_rules = get<bool>(root, "default_message_rules", "top level").value_or(true);
  cfg.random_repetitions = get<std::int64_t>(root, "random_repetitions", "top level").value_or(100);
  cfg.evaluation_seed = get<std::int64_t>(root, "evaluation_seed", "top level").value_or(0);

  if (const auto* prefixes = root.get_as<toml::array>("comment_prefixes")) {
    cfg.comment_prefixes.clear();
    for (const auto& n : *prefixes) {
      auto s = n.value<std::string>();
      if (!s) config_error("comment_prefixes must be strings");
      cfg.comment_prefixes.push_back(*s);
    }
  } else if (root.contains("comment_prefixes")) {
    config_error("comment_prefixes must be an array");
  }

  if (const auto* rules = root.get_as<toml::array>("message_rules")) {
    for (const auto& n : *rules) {
      const auto* t = n.as_table();
      if (t == nullptr) config_error("message_rules entries must be tables");
      check_keys(*t, {"pattern", "replacement"}, "message_rules");
      cfg.message_rules.emplace_back(require<std::string>(*t, "pattern", "message_rules"),
                                     require<std::string>(*t, "replacement", "message_rules"));
    }
  }

  const auto* gens = root.get_as<toml::array>("generators");
  if (gens == nullptr) config_error("missing [[generators]]");
  for (const auto& n : *gens) {
    const auto* t = n.as_table();
    if (t == nullptr) config_error("generators entries must be tables");
    const std::string where = "generators";
    check_keys(*t, {"name", "kind", "command", "timeout_s", "seed", "max_tests"}, where);
    GeneratorSpec g;
    g.name = require<std::string>(*t, "name", where);
    g.kind = parse_kind(get<std::string>(*t, "kind", where).value_or("command"), where);
    g.command_template = get<std::string>(*t, "command", where).value_or("");
    g.timeout_s = to_int(get<std::int64_t>(*t, "timeout_s", where).value_or(60), "timeout_s");
    g.seed = get<std::int64_t>(*t, "seed", where).value_or(0);
    const auto max_tests = get<std::int64_t>(*t, "max_tests", where).value_or(0);
    if (max_tests < 0) config_error("max_tests must be >= 0");
    g.max_tests = static_cast<std::size_t>(max_tests);
    cfg.generators.push_back(std::move(g));
  }

  const auto* ex = root.get_as<toml::table>("executor");
  if (ex == nullptr) config_error("missing [executor]");
  check_keys(*ex, {"name", "kind", "command", "timeout_s"}, "executor");
  const auto kind = parse_kind(get<std::string>(*ex, "kind", "executor").value_or("command"), "executor");
  const auto name = get<std::string>(*ex, "name", "executor").value_or("executor");
  const int timeout = to_int(get<std::int64_t>(*ex, "timeout_s", "executor").value_or(120), "timeout_s");
  if (kind == AdapterKind::Simulated) {
    cfg.executor = ExecutorSpec::simulated(name, timeout);
  } else {
    cfg.executor.name = name;
    cfg.executor.kind = kind;
    cfg.executor.timeout_s = timeout;
    cfg.executor.command_template = get<std::string>(*ex, "command", "executor").value_or("");
  }
  return cfg;
}

RunConfig load_config(const fs::path& file) {
  std::error_code ec;
  if (!fs::is_regular_file(file, ec)) throw Error(ErrorKind::Config, "no such config file: " + file.string());
  return parse_config(read_file(file), fs::absolute(file).parent_path());
}

}  // namespace patchcluster
