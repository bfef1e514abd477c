#include <gtest/gtest.h>

#include <algorithm>

#include "patchcluster/error.hpp"
#include "patchcluster/select.hpp"
#include "test_support.hpp"

namespace patchcluster {
namespace {

PatchSet with_lengths(const std::vector<std::pair<std::string, std::size_t>>& lengths) {
  PatchSet set;
  set.bug_id = "b";
  for (const auto& [id, len] : lengths) {
    Patch p;
    p.id = id;
    p.length = len;
    set.patches.push_back(p);
  }
  std::sort(set.patches.begin(), set.patches.end(), [](const Patch& a, const Patch& b) { return a.id < b.id; });
  return set;
}

Cluster cluster(std::string id, std::vector<std::string> members) { return {std::move(id), {}, std::move(members)}; }

TEST(Strategy, ParseAndPrint) {
  EXPECT_EQ(SelectionStrategy::parse("shortest").kind, SelectionStrategy::Kind::Shortest);
  const auto r = SelectionStrategy::parse("random:-12");
  EXPECT_EQ(r.kind, SelectionStrategy::Kind::Random);
  EXPECT_EQ(r.seed, -12);
  EXPECT_EQ(r.to_string(), "random:-12");
  EXPECT_EQ(SelectionStrategy::parse("external:pick --x").command, "pick --x");
  for (const char* bad : {"", "longest", "random:", "random:1x", "external:"}) {
    try {
      SelectionStrategy::parse(bad);
      ADD_FAILURE() << bad;
    } catch (const Error& e) {
      EXPECT_EQ(e.kind(), ErrorKind::Config);
    }
  }
}

TEST(Shortest, PicksMinimumLength) {
  const auto set = with_lengths({{"a", 5}, {"b", 3}, {"c", 7}});
  const auto sel = select_patches({cluster("c0", {"a", "b", "c"})}, set, SelectionStrategy::shortest());
  ASSERT_EQ(sel.size(), 1u);
  EXPECT_EQ(sel[0].chosen, "b");
  EXPECT_EQ(sel[0].co_minimal, std::vector<std::string>{"b"});
}

TEST(Shortest, TieBreaksOnSmallestId) {
  const auto set = with_lengths({{"q", 2}, {"m", 2}, {"a", 9}});
  auto [chosen, tied] = shortest_of({"q", "a", "m"}, set);
  EXPECT_EQ(chosen, "m");
  EXPECT_EQ(tied, (std::vector<std::string>{"m", "q"}));
}

TEST(Shortest, AllEqual) {
  const auto set = with_lengths({{"x", 4}, {"y", 4}, {"z", 4}});
  auto [chosen, tied] = shortest_of({"z", "y", "x"}, set);
  EXPECT_EQ(chosen, "x");
  EXPECT_EQ(tied.size(), 3u);
}

TEST(Shortest, UnknownPatch) {
  EXPECT_THROW(shortest_of({"ghost"}, with_lengths({{"a", 1}})), Error);
}

TEST(Random, DeterministicAndOrderIndependent) {
  const std::vector<std::string> members = {"p1", "p2", "p3", "p4", "p5"};
  for (std::int64_t seed = -5; seed < 50; ++seed) {
    const auto a = random_of(members, seed);
    EXPECT_EQ(random_of(members, seed), a);
    EXPECT_EQ(random_of({"p5", "p3", "p1", "p4", "p2"}, seed), a);
    EXPECT_NE(std::find(members.begin(), members.end(), a), members.end());
  }
}

TEST(Random, UniformOverTwoMembers) {
  int first = 0;
  for (std::int64_t seed = 0; seed < 10000; ++seed) first += random_of({"a", "b"}, seed) == "a";
  EXPECT_NEAR(first, 5000, 300);
}

TEST(Random, UniformOverFiveMembers) {
  std::map<std::string, int> counts;
  for (std::int64_t seed = 0; seed < 10000; ++seed) ++counts[random_of({"a", "b", "c", "d", "e"}, seed * 7919)];
  ASSERT_EQ(counts.size(), 5u);
  for (const auto& [id, n] : counts) EXPECT_NEAR(n, 2000, 200) << id;
}

TEST(Random, SelectionVariesAcrossClustersWithOneSeed) {
  const auto set = with_lengths({{"a", 1}, {"b", 1}});
  std::vector<Cluster> clusters;
  for (int i = 0; i < 64; ++i) clusters.push_back(cluster("c" + std::to_string(i), {"a", "b"}));
  const auto sel = select_patches(clusters, set, SelectionStrategy::random(3));
  const auto as = std::count_if(sel.begin(), sel.end(), [](const Selection& s) { return s.chosen == "a"; });
  EXPECT_GT(as, 0);
  EXPECT_LT(as, 64);
  const auto again = select_patches(clusters, set, SelectionStrategy::random(3));
  for (std::size_t i = 0; i < sel.size(); ++i) EXPECT_EQ(sel[i].chosen, again[i].chosen);
}

TEST(External, PicksFromStdinAndGetsMatrixPath) {
  testing::TempDir dir;
  write_file(dir / "matrix.json", "{}");
  const auto set = with_lengths({{"a", 1}, {"b", 1}, {"c", 1}});
  const auto strategy = SelectionStrategy::external("test -f {matrix_file} && tail -n 1");
  const auto sel = select_patches({cluster("c0", {"a", "b", "c"}), cluster("c1", {"a"})}, set, strategy,
                                  dir / "matrix.json");
  EXPECT_EQ(sel[0].chosen, "c");
  EXPECT_EQ(sel[1].chosen, "a");
  // Without a placeholder the path is appended as an argument.
  const auto appended = select_patches({cluster("c0", {"a", "b"})}, set,
                                       SelectionStrategy::external("sh -c 'test -f \"$0\" && echo b'"),
                                       dir / "matrix.json");
  EXPECT_EQ(appended[0].chosen, "b");
}

TEST(External, NonMemberOrFailureIsError) {
  const auto set = with_lengths({{"a", 1}, {"b", 1}});
  for (const char* cmd : {"echo zzz #", "false #", "cat > /dev/null; echo #"}) {
    try {
      select_patches({cluster("c0", {"a", "b"})}, set, SelectionStrategy::external(cmd), "/nonexistent");
      ADD_FAILURE() << cmd;
    } catch (const Error& e) {
      EXPECT_EQ(e.kind(), ErrorKind::ExternalStrategy) << cmd;
    }
  }
}

}  // namespace
}  // namespace patchcluster
