#include <gtest/gtest.h>

#include "patchcluster/adapters.hpp"
#include "patchcluster/error.hpp"
#include "patchcluster/sim.hpp"
#include "test_support.hpp"

namespace patchcluster {
namespace {

using testing::TempDir;

TEST(NormalizeMessage, DefaultRules) {
  const auto rules = MessageRules::defaults("/tmp/work/ws");
  EXPECT_EQ(normalize_message("NullPointerException at 0x7f3a9c", rules), "NullPointerException at 0xADDR");
  EXPECT_EQ(normalize_message("  expected 3 but was 4  ", rules), "expected 3 but was 4");
  EXPECT_EQ(normalize_message("", rules), "");
  EXPECT_EQ(normalize_message("took 153ms", rules), "took Nms");
  EXPECT_EQ(normalize_message("at /tmp/work/ws/p1/src/A.java:12", rules), "at <WS>/src/A.java:12");
}

TEST(NormalizeMessage, DefaultRulesAreIdempotent) {
  const auto rules = MessageRules::defaults("/w/ws");
  for (std::string raw : {"0xdeadBEEF and 0x1 in 12ms", "  /w/ws/p9/a.c: 0xADDR  ", "0xADDR", "plain", "5ms 0x0ms",
                          "/w/ws/p1/x 0x12 /w/ws/p2 77ms"}) {
    const auto once = normalize_message(raw, rules);
    EXPECT_EQ(normalize_message(once, rules), once) << raw;
  }
}

TEST(NormalizeMessage, InvalidRegexIsConfigError) {
  try {
    MessageRules::compile({{"([", "x"}});
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::Config);
  }
}

TEST(NormalizeMessage, CustomRulesApplyInOrder) {
  const auto rules = MessageRules::compile({{"a+", "b"}, {"b+", "c"}});
  EXPECT_EQ(normalize_message(" aaa-b ", rules), "c-c");
}

TEST(ResultsFormat, RoundTripAndValidation) {
  const ResultRecord rec{"t1", Status::Fail, "expected \"3\"", 12};
  const auto line = format_result_record(rec);
  EXPECT_EQ(line, R"({"test_id":"t1","status":"fail","message":"expected \"3\"","duration_ms":12})"
                  "\n");
  const auto parsed = parse_results(line);
  ASSERT_EQ(parsed.size(), 1u);
  EXPECT_EQ(parsed[0].test_id, "t1");
  EXPECT_EQ(parsed[0].status, Status::Fail);
  EXPECT_EQ(parsed[0].message, "expected \"3\"");
  EXPECT_EQ(parsed[0].duration_ms, 12);

  for (std::string bad : {"not json", R"({"status":"pass","message":""})", R"({"test_id":"t","status":"timeout","message":""})",
                          R"({"test_id":"t","status":"pass","message":"","duration_ms":"slow"})"}) {
    try {
      parse_results(bad);
      ADD_FAILURE() << bad;
    } catch (const Error& e) {
      EXPECT_EQ(e.kind(), ErrorKind::ResultParse);
    }
  }
  const std::string truncated = format_result_record({"a", Status::Pass, "", 1}) + R"({"test_id":"b","sta)";
  EXPECT_EQ(parse_results(truncated, true).size(), 1u);
}

TEST(GeneratorSpec, PlaceholdersRequired) {
  GeneratorSpec g{"g", AdapterKind::Command, "gen {program_dir}", 60, 0, 0};
  EXPECT_THROW(g.validate(), Error);
  g.command_template = "gen {program_dir} {out_dir}";
  EXPECT_NO_THROW(g.validate());
  g.timeout_s = 0;
  EXPECT_THROW(g.validate(), Error);
  ExecutorSpec e{"e", AdapterKind::Command, "run {program_dir} {suite_dir}", 10, nullptr};
  EXPECT_THROW(e.validate(), Error);
}

class CommandAdapterTest : public ::testing::Test {
 protected:
  void SetUp() override { write_file(dir_ / "prog/a.txt", "x\n"); }

  RawSuite suite_with(std::vector<std::string> ids) {
    RawSuite s;
    s.suite_id = "g:p1";
    s.generator = "g";
    s.origin_patch = "p1";
    s.test_ids = std::move(ids);
    s.suite_dir = dir_ / "suite";
    fs::create_directories(s.suite_dir);
    return s;
  }

  ExecutorSpec script_executor(const std::string& script, int timeout_s = 30) {
    write_file(dir_ / "exec.sh", script);
    return {"sh", AdapterKind::Command, "sh " + shell_quote((dir_ / "exec.sh").string()) + " {program_dir} {suite_dir} {results_file}",
            timeout_s, nullptr};
  }

  TempDir dir_;
};

TEST_F(CommandAdapterTest, GeneratorManifestPassthrough) {
  GeneratorSpec g{"g", AdapterKind::Command,
                  R"(test -d {program_dir} && echo '{"test_ids":["t5","t1","t2","t3","t4"]}' > {out_dir}/suite.json)", 60, 7, 0};
  const auto out = run_generator(g, dir_ / "prog", "a.txt", "p1", "g:p1", dir_ / "gen");
  ASSERT_TRUE(out.suite);
  EXPECT_FALSE(out.failure);
  EXPECT_EQ(out.suite->test_ids.size(), 5u);
  EXPECT_EQ(out.suite->test_ids.front(), "t1");
  EXPECT_EQ(out.suite->suite_id, "g:p1");
}

TEST_F(CommandAdapterTest, GeneratorPlaceholdersAreSubstituted) {
  GeneratorSpec g{"g", AdapterKind::Command,
                  R"(printf '{"test_ids":["%s_%s_%s"]}' {target_file} {seed} {timeout_s} > {out_dir}/suite.json; : {program_dir})", 9,
                  42, 0};
  const auto out = run_generator(g, dir_ / "prog", "a.txt", "p1", "g:p1", dir_ / "gen");
  ASSERT_TRUE(out.suite);
  EXPECT_EQ(out.suite->test_ids, std::vector<std::string>{"a.txt_42_9"});
}

TEST_F(CommandAdapterTest, GeneratorTimeoutIsAbsentWithFailure) {
  GeneratorSpec g{"slow", AdapterKind::Command, "sleep 10; : {program_dir} {out_dir}", 1, 0, 0};
  const auto out = run_generator(g, dir_ / "prog", "a.txt", "p1", "slow:p1", dir_ / "gen");
  EXPECT_FALSE(out.suite);
  ASSERT_TRUE(out.failure);
  EXPECT_EQ(out.failure->reason, "timeout");
  EXPECT_EQ(out.failure->generator, "slow");
  EXPECT_EQ(out.failure->file, "a.txt");
}

TEST_F(CommandAdapterTest, GeneratorNonzeroExitAndEmptyManifest) {
  GeneratorSpec bad{"bad", AdapterKind::Command, "exit 3; : {program_dir} {out_dir}", 5, 0, 0};
  const auto failed = run_generator(bad, dir_ / "prog", "a.txt", "p1", "bad:p1", dir_ / "gen");
  ASSERT_TRUE(failed.failure);
  EXPECT_EQ(failed.failure->reason, "exit status 3");

  GeneratorSpec empty{"empty", AdapterKind::Command, R"(echo '{"test_ids":[]}' > {out_dir}/suite.json; : {program_dir})", 5, 0, 0};
  const auto out = run_generator(empty, dir_ / "prog", "a.txt", "p1", "empty:p1", dir_ / "gen");
  ASSERT_TRUE(out.suite);
  EXPECT_TRUE(out.suite->test_ids.empty());
}

TEST_F(CommandAdapterTest, SuiteAllPass) {
  const auto exec = script_executor(R"(for t in a b c; do printf '{"test_id":"%s","status":"pass","message":"ignored","duration_ms":1}\n' $t; done > "$3")");
  const auto out = run_suite(exec, dir_ / "prog", suite_with({"a", "b", "c"}), dir_ / "r.jsonl", MessageRules::defaults());
  ASSERT_EQ(out.size(), 3u);
  for (const auto& [id, o] : out) {
    EXPECT_EQ(o.status, Status::Pass);
    EXPECT_EQ(o.message, "");
  }
}

TEST_F(CommandAdapterTest, SuiteFailureMessagePassthroughAndMissingResult) {
  const auto exec = script_executor(
      R"(printf '{"test_id":"a","status":"fail","message":"expected 3 but was 4","duration_ms":3}\n' > "$3"
printf '{"test_id":"c","status":"error","message":"","duration_ms":3}\n' >> "$3"
exit 1)");
  const auto out = run_suite(exec, dir_ / "prog", suite_with({"a", "b", "c"}), dir_ / "r.jsonl", MessageRules::defaults());
  EXPECT_EQ(out.at("a"), TestOutcome::fail("expected 3 but was 4"));
  EXPECT_EQ(out.at("b"), TestOutcome::error("missing-result"));
  EXPECT_EQ(out.at("c").status, Status::Error);
  EXPECT_FALSE(out.at("c").message.empty());
}

TEST_F(CommandAdapterTest, SuiteHarnessTimeout) {
  const auto exec = script_executor(
      R"(printf '{"test_id":"a","status":"pass","message":"","duration_ms":1}\n{"test_id":"b","sta' > "$3"; sleep 10)", 1);
  const auto out = run_suite(exec, dir_ / "prog", suite_with({"a", "b", "c"}), dir_ / "r.jsonl", MessageRules::defaults());
  EXPECT_EQ(out.at("a"), TestOutcome::pass());
  EXPECT_EQ(out.at("b"), TestOutcome::timeout("harness-timeout"));
  EXPECT_EQ(out.at("c"), TestOutcome::timeout("harness-timeout"));
}

TEST_F(CommandAdapterTest, SuiteMalformedResultsIsParseError) {
  const auto exec = script_executor(R"(echo 'garbage' > "$3")");
  try {
    run_suite(exec, dir_ / "prog", suite_with({"a"}), dir_ / "r.jsonl", MessageRules::defaults());
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::ResultParse);
  }
}

// --- built-in simulation adapter -------------------------------------------

class SimAdapterTest : public ::testing::Test {
 protected:
  void SetUp() override {
    write_file(dir_ / "prog/calc.rules",
               "# toy calculator\n"
               "add_1_1 -> 2\n"
               "mul_2_3 -> 6\n"
               "div_1_0 -> !crash ArithmeticException at 0x55aa\n"
               "coin -> !flaky heads|tails\n"
               "wrong -> 5\n");
  }

  RawSuite generate(std::size_t max_tests = 0, std::int64_t seed = 1) {
    GeneratorSpec g{"sim", AdapterKind::Simulated, "", 60, seed, max_tests};
    auto out = run_generator(g, dir_ / "prog", "calc.rules", "p1", "sim:p1", dir_ / "suite");
    EXPECT_TRUE(out.suite);
    return *out.suite;
  }

  TempDir dir_;
};

TEST_F(SimAdapterTest, GeneratesOneTestPerRule) {
  const auto suite = generate();
  EXPECT_EQ(suite.test_ids.size(), 5u);
  EXPECT_EQ(suite.descriptions.at("t001_mul_2_3"), "calc.rules: mul_2_3 -> 6");
}

TEST_F(SimAdapterTest, SamplingIsDeterministicUnderSeed) {
  EXPECT_EQ(generate(3, 11).test_ids.size(), 3u);
  const auto a = generate(3, 11).test_ids;
  const auto b = generate(3, 11).test_ids;
  EXPECT_EQ(a, b);
}

TEST_F(SimAdapterTest, MissingTargetIsGenerationFailure) {
  GeneratorSpec g{"sim", AdapterKind::Simulated, "", 60, 0, 0};
  const auto out = run_generator(g, dir_ / "prog", "nope.rules", "p1", "sim:p1", dir_ / "suite");
  EXPECT_FALSE(out.suite);
  ASSERT_TRUE(out.failure);
}

TEST_F(SimAdapterTest, ExecutionOutcomes) {
  const auto suite = generate();
  write_file(dir_ / "prog2/calc.rules", "add_1_1 -> 3\nmul_2_3 -> 6\ndiv_1_0 -> !crash boom at 0x1234\ncoin -> heads\n");
  const auto exec = ExecutorSpec::simulated("sim");
  const auto rules = MessageRules::defaults();
  const auto out = run_suite(exec, dir_ / "prog2", suite, dir_ / "r.jsonl", rules);
  ASSERT_EQ(out.size(), suite.test_ids.size());
  EXPECT_EQ(out.at("t000_add_1_1"), TestOutcome::fail("expected 2 but was 3"));
  EXPECT_EQ(out.at("t001_mul_2_3"), TestOutcome::pass());
  EXPECT_EQ(out.at("t002_div_1_0"), TestOutcome::error("boom at 0xADDR"));
  EXPECT_EQ(out.at("t003_coin"), TestOutcome::pass());
  EXPECT_EQ(out.at("t004_wrong"), TestOutcome::error("no rule for input wrong"));
}

TEST_F(SimAdapterTest, HangBecomesHarnessTimeout) {
  const auto suite = generate();
  write_file(dir_ / "prog2/calc.rules", "add_1_1 -> 2\nmul_2_3 -> !hang\n");
  const auto out = run_suite(ExecutorSpec::simulated("sim"), dir_ / "prog2", suite, dir_ / "r.jsonl", MessageRules::defaults());
  EXPECT_EQ(out.at("t000_add_1_1"), TestOutcome::pass());
  EXPECT_EQ(out.at("t001_mul_2_3").status, Status::Timeout);
  EXPECT_EQ(out.at("t004_wrong").status, Status::Timeout);
}

TEST_F(SimAdapterTest, FlakinessFilter) {
  const auto suite = generate();
  const auto exec = ExecutorSpec::simulated("sim");
  const auto rules = MessageRules::defaults();
  const auto kept = flakiness_filter(exec, dir_ / "prog", suite, 3, dir_ / "flaky", rules);
  // coin alternates heads/tails; div_1_0 errors identically every run and stays.
  EXPECT_EQ(kept.test_ids,
            (std::vector<std::string>{"t000_add_1_1", "t001_mul_2_3", "t002_div_1_0", "t004_wrong"}));
  EXPECT_FALSE(kept.descriptions.contains("t003_coin"));
  // Deterministic suite is a fixed point.
  EXPECT_EQ(flakiness_filter(exec, dir_ / "prog", kept, 3, dir_ / "flaky2", rules).test_ids, kept.test_ids);
  EXPECT_THROW(flakiness_filter(exec, dir_ / "prog", suite, 1, dir_ / "flaky3", rules), Error);
}

}  // namespace
}  // namespace patchcluster
