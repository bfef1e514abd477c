#include <gtest/gtest.h>

#include <sys/wait.h>

#include <chrono>
#include <cstdio>
#include <functional>

#include <nlohmann/json.hpp>

#include "patchcluster/error.hpp"
#include "patchcluster/pipeline.hpp"
#include "test_support.hpp"

namespace patchcluster {
namespace {

using testing::TempDir;

const fs::path kFixture = fs::path(PC_FIXTURES_DIR) / "bug-calc-001";

ErrorKind kind_of(const std::function<void()>& f) {
  try {
    f();
  } catch (const Error& e) {
    return e.kind();
  }
  ADD_FAILURE() << "no error thrown";
  return ErrorKind::InvariantViolation;
}

class PipelineTest : public ::testing::Test {
 protected:
  void SetUp() override {
    fs::copy(kFixture, dir_.path() / "fx", fs::copy_options::recursive);
    config_ = load_config(dir_ / "fx/config.toml");
    config_.out_dir = dir_ / "out";
  }

  fs::path bug_out() const { return dir_ / "out/bug-calc-001"; }

  TempDir dir_;
  RunConfig config_;
};

TEST_F(PipelineTest, FixtureEndToEnd) {
  const auto t0 = std::chrono::steady_clock::now();
  const auto report = run(config_);
  EXPECT_LT(std::chrono::steady_clock::now() - t0, std::chrono::seconds(5));

  EXPECT_EQ(report.status, kStatusCompleted);
  EXPECT_EQ(report.input_patches, (std::vector<std::string>{"p1", "p2", "p3", "p4"}));
  EXPECT_EQ(report.surviving_patches, (std::vector<std::string>{"p1", "p3", "p4"}));
  ASSERT_EQ(report.discarded.size(), 1u);
  EXPECT_EQ(report.discarded[0].patch_id, "p2");
  EXPECT_EQ(report.discarded[0].reason, "duplicate");
  EXPECT_EQ(report.discarded[0].kept_id, "p1");

  ASSERT_EQ(report.clusters.size(), 2u);
  EXPECT_EQ(report.clusters[0].members, (std::vector<std::string>{"p1", "p4"}));
  EXPECT_EQ(report.clusters[1].members, std::vector<std::string>{"p3"});
  // p3 breaks div_6_2, so it fails the div test of p1 and p4 (both generators);
  // p1 and p4 fail the div tests that p3's suites expect.
  EXPECT_EQ(report.clusters[0].signature.entries.size(), 2u);
  EXPECT_EQ(report.clusters[1].signature.entries.size(), 4u);

  ASSERT_TRUE(report.metrics);
  EXPECT_EQ(render_decimal(report.metrics->reduction), "33.33");
  ASSERT_TRUE(report.metrics->purity);
  EXPECT_EQ(report.metrics->purity->bug_class, BugClass::OnlyPure);
  EXPECT_FALSE(report.metrics->random_selection);

  ASSERT_EQ(report.distinctions.size(), 1u);
  EXPECT_FALSE(report.distinctions[0].tests.empty());
  for (const auto& d : report.distinctions[0].tests) EXPECT_NE(d.outcome_a, d.outcome_b);

  ASSERT_EQ(report.selections.size(), 2u);
  EXPECT_EQ(report.selections[0].chosen, "p1");
  EXPECT_TRUE(report.representative_diffs.contains("p1"));
  EXPECT_TRUE(report.origin_failures.empty());

  for (const char* f : {"patchset.json", "tcg.json", "matrix.json", "clusters.json", "report.json", "report.md"}) {
    EXPECT_TRUE(fs::exists(bug_out() / f)) << f;
  }
  EXPECT_FALSE(fs::exists(bug_out() / "work/ws/p1"));
}

TEST_F(PipelineTest, ReportIsByteIdenticalAcrossRuns) {
  run(config_);
  const auto first = read_file(bug_out() / "report.json");
  const auto first_md = read_file(bug_out() / "report.md");
  config_.workers = 4;
  run(config_);
  EXPECT_EQ(read_file(bug_out() / "report.json"), first);
  EXPECT_EQ(read_file(bug_out() / "report.md"), first_md);
}

TEST_F(PipelineTest, ImplausiblePatchesAreDiscarded) {
  config_.existing_suite_cmd = "grep -qx 'div_6_2 -> 3' {program_dir}/calc.rules && grep -qx 'mul_2_3 -> 6' {program_dir}/calc.rules";
  const auto report = run(config_);
  EXPECT_EQ(report.surviving_patches, (std::vector<std::string>{"p1", "p4"}));
  ASSERT_EQ(report.discarded.size(), 2u);
  EXPECT_EQ(report.discarded[1].patch_id, "p3");
  EXPECT_EQ(report.discarded[1].reason, "not-plausible");
  ASSERT_EQ(report.clusters.size(), 1u);
  EXPECT_EQ(render_decimal(report.metrics->reduction), "50.00");
}

TEST_F(PipelineTest, TooFewPatchesIsSkipped) {
  config_.existing_suite_cmd = "false {program_dir}";
  const auto report = run(config_);
  EXPECT_EQ(report.status, kStatusTooFewPatches);
  EXPECT_TRUE(report.clusters.empty());
  EXPECT_FALSE(report.metrics);
  EXPECT_TRUE(fs::exists(bug_out() / "report.json"));
}

TEST_F(PipelineTest, NoTestsIsSkipped) {
  config_.generators = {{"empty", AdapterKind::Command, R"(echo '{"test_ids":[]}' > {out_dir}/suite.json; : {program_dir})", 10,
                         0, 0}};
  const auto report = run(config_);
  EXPECT_EQ(report.status, kStatusNoTests);
  EXPECT_EQ(report.generation_failures.size(), 3u);
  EXPECT_FALSE(fs::exists(bug_out() / "matrix.json"));
}

TEST_F(PipelineTest, MissingPlausibilityCommandWarns) {
  config_.existing_suite_cmd.reset();
  const auto report = run(config_);
  EXPECT_EQ(report.status, kStatusCompleted);
  EXPECT_FALSE(report.warnings.empty());
}

TEST_F(PipelineTest, MalformedDiffStopsAtIngest) {
  write_file(dir_ / "fx/patches/bug-calc-001/p5.diff", "--- a/calc.rules\n+++ b/calc.rules\n@@ -1,2 +1,2 @@\n-x\n");
  try {
    run(config_);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::MalformedDiff);
    EXPECT_EQ(e.stage(), "ingest");
  }
}

TEST_F(PipelineTest, StaleHunkIsHunkMismatch) {
  write_file(dir_ / "fx/patches/bug-calc-001/p5.diff",
             "--- a/calc.rules\n+++ b/calc.rules\n@@ -1,1 +1,1 @@\n-nope -> 1\n+nope -> 2\n");
  EXPECT_EQ(kind_of([&] { run(config_); }), ErrorKind::HunkMismatch);
}

TEST_F(PipelineTest, ReplayMatchesRun) {
  const auto report = run(config_);
  ReplayOptions opts;
  const auto agg = replay({bug_out() / "matrix.json"}, dir_ / "fx/patches", opts);
  ASSERT_EQ(agg.bugs.size(), 1u);
  EXPECT_EQ(clusters_to_json(agg.bugs[0].clusters), clusters_to_json(report.clusters));
  EXPECT_EQ(selections_to_json(agg.bugs[0].selections), selections_to_json(report.selections));
  EXPECT_EQ(metrics_to_json(agg.bugs[0].metrics), metrics_to_json(*report.metrics));
  EXPECT_EQ(render_decimal(agg.median_reduction), "33.33");
  EXPECT_EQ(agg.bug_classes.at("only-pure"), 1);
}

TEST_F(PipelineTest, ReplayErrors) {
  run(config_);
  ReplayOptions opts;
  EXPECT_EQ(kind_of([&] { replay({}, dir_ / "fx/patches", opts); }), ErrorKind::Schema);
  EXPECT_EQ(kind_of([&] { replay({bug_out() / "matrix.json", bug_out() / "matrix.json"}, dir_ / "fx/patches", opts); }),
            ErrorKind::Schema);
  // Without diffs the shortest strategy has no lengths.
  EXPECT_EQ(kind_of([&] { replay({bug_out() / "matrix.json"}, dir_ / "nowhere", opts); }), ErrorKind::Schema);
  opts.strategy = SelectionStrategy::random(1);
  const auto agg = replay({bug_out() / "matrix.json"}, dir_ / "nowhere", opts);
  EXPECT_FALSE(agg.bugs[0].metrics.purity);
}

// --- configuration ----------------------------------------------------------

const char* kMinimalConfig = R"(
program_root = "prog"
patches_dir = "patches"
out_dir = "out"

[[generators]]
name = "g"
command = "gen {program_dir} {out_dir}"

[executor]
command = "exec {program_dir} {suite_dir} {results_file}"
)";

TEST(Config, ParsesAndResolvesPaths) {
  auto cfg = parse_config(kMinimalConfig, "/base");
  EXPECT_EQ(cfg.program_root, fs::path("/base/prog"));
  EXPECT_EQ(cfg.patches_dir, fs::path("/base/patches"));
  EXPECT_EQ(cfg.n_flaky_runs, 3);
  EXPECT_EQ(cfg.workers, 1);
  EXPECT_EQ(cfg.generators[0].timeout_s, 60);
  EXPECT_EQ(cfg.executor.timeout_s, 120);
  EXPECT_EQ(cfg.strategy.kind, SelectionStrategy::Kind::Shortest);
  EXPECT_EQ(cfg.config_hash, sha256_hex(kMinimalConfig));
  EXPECT_EQ(kind_of([&] { cfg.validate(); }), ErrorKind::Config);

  TempDir dir;
  fs::create_directories(dir / "prog");
  fs::create_directories(dir / "patches");
  cfg = parse_config(kMinimalConfig, dir.path());
  EXPECT_NO_THROW(cfg.validate());
}

TEST(Config, Rejections) {
  const std::string base = kMinimalConfig;
  TempDir dir;
  fs::create_directories(dir / "prog");
  fs::create_directories(dir / "patches");
  auto expect_config_error = [&](const std::string& text, const char* what) {
    try {
      parse_config(text, dir.path()).validate();
      ADD_FAILURE() << what;
    } catch (const Error& e) {
      EXPECT_EQ(e.kind(), ErrorKind::Config) << what;
    }
  };
  expect_config_error("colour = 1\n" + base, "unknown key");
  expect_config_error("program_root = [", "syntax");
  expect_config_error("n_flaky_runs = 1\n" + base, "n_flaky_runs below 2");
  expect_config_error("workers = 0\n" + base, "workers");
  expect_config_error("strategy = \"longest\"\n" + base, "strategy");
  expect_config_error("existing_suite_cmd = \"make test\"\n" + base, "suite placeholder");
  expect_config_error(R"(program_root = "prog"
patches_dir = "patches"
out_dir = "o"
[[generators]]
name = "g"
command = "gen {program_dir}"
[executor]
kind = "sim"
)",
                      "generator placeholder");
  expect_config_error(R"(program_root = "prog"
patches_dir = "patches"
out_dir = "o"
[[generators]]
name = "g"
kind = "sim"
)",
                      "missing executor");
  expect_config_error(base + "[[message_rules]]\npattern = \"([\"\nreplacement = \"\"\n", "bad regex");
}

TEST(Config, DocumentedExampleParses) {
  const auto cfg = load_config(fs::path(PC_DOCS_DIR) / "config.example.toml");
  EXPECT_EQ(cfg.generators.size(), 2u);
  EXPECT_EQ(cfg.generators[1].kind, AdapterKind::Simulated);
  EXPECT_EQ(cfg.executor.kind, AdapterKind::Command);
  EXPECT_EQ(cfg.workers, 4);
  EXPECT_EQ(cfg.message_rules.size(), 1u);
  for (const auto& g : cfg.generators) EXPECT_NO_THROW(g.validate());
  EXPECT_NO_THROW(cfg.executor.validate());
}

TEST(Config, MessageRulesAppendAfterDefaults) {
  auto cfg = parse_config(std::string(kMinimalConfig) + "[[message_rules]]\npattern = 'line \\d+'\nreplacement = 'line N'\n", "/b");
  auto rules = cfg.compile_rules("/w/ws");
  EXPECT_EQ(normalize_message("at 0xff line 12, 3ms", rules), "at 0xADDR line N, Nms");
  cfg.default_message_rules = false;
  rules = cfg.compile_rules("/w/ws");
  EXPECT_EQ(normalize_message("at 0xff line 12", rules), "at 0xff line N");
}

// --- command line -------------------------------------------------------------

int run_cli(const std::string& args, std::string* out = nullptr) {
  const std::string cmd = shell_quote(PC_CLI_PATH) + " " + args + " 2>/dev/null";
  FILE* pipe = ::popen(cmd.c_str(), "r");
  if (pipe == nullptr) return -1;
  std::string text;
  char buf[4096];
  while (std::size_t n = std::fread(buf, 1, sizeof buf, pipe)) text.append(buf, n);
  const int status = ::pclose(pipe);
  if (out != nullptr) *out = text;
  return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

TEST_F(PipelineTest, CliRunAndReplay) {
  std::string out;
  ASSERT_EQ(run_cli("run --config " + shell_quote((dir_ / "fx/config.toml").string()), &out), 0);
  const auto j = nlohmann::json::parse(out);
  EXPECT_EQ(j["metrics"]["reduction"]["value"], "33.33");

  const auto matrix = dir_ / "fx/out/bug-calc-001/matrix.json";
  ASSERT_EQ(run_cli("replay --labels " + shell_quote((dir_ / "fx/patches").string()) + " " +
                        shell_quote(matrix.string()) + " --out " + shell_quote((dir_ / "agg.json").string()),
                    &out),
            0);
  const auto agg = nlohmann::json::parse(out);
  EXPECT_EQ(agg["reduction"]["median"]["value"], "33.33");
  EXPECT_EQ(read_file(dir_ / "agg.json"), out);
}

TEST_F(PipelineTest, CliExitCodes) {
  const auto cfg = shell_quote((dir_ / "fx/config.toml").string());
  EXPECT_EQ(run_cli("run"), 2);
  EXPECT_EQ(run_cli("bogus"), 2);
  EXPECT_EQ(run_cli("run --config /nonexistent.toml"), 2);
  EXPECT_EQ(run_cli("run --config " + cfg + " --strategy longest"), 2);
  EXPECT_EQ(run_cli("run --config " + cfg + " --strategy 'external:echo nobody'"), 3);
  write_file(dir_ / "bad.json", "{\"bug_id\": 1}");
  EXPECT_EQ(run_cli("replay --labels /tmp " + shell_quote((dir_ / "bad.json").string())), 2);
  write_file(dir_ / "fx/patches/bug-calc-001/p9.diff", "--- a/calc.rules\n+++ b/calc.rules\n@@ -1 +1 @@\n-zzz\n+yyy\n");
  EXPECT_EQ(run_cli("run --config " + cfg), 3);
}

}  // namespace
}  // namespace patchcluster
