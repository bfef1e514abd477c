// Compares the OpenMP kernels against their serial references:
//   clustering   hashed grouping (parallel signatures) vs linear scan
//   execution    cross_execute (parallel grid) vs cross_execute_serial
//
//   bench_parallel [workers] [patches]

#include <chrono>
#include <cstdio>
#include <cstdlib>
#include <string>

#include <unistd.h>

#include "patchcluster/cluster.hpp"
#include "patchcluster/matrix.hpp"

using namespace patchcluster;

namespace {

template <class F>
double seconds(F&& f) {
  const auto t0 = std::chrono::steady_clock::now();
  f();
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

ExecutionMatrix synthetic_matrix(std::size_t patches, std::size_t tests, std::size_t behaviours) {
  ExecutionMatrix m;
  m.bug_id = "bench";
  for (std::size_t p = 0; p < patches; ++p) {
    char id[32];
    std::snprintf(id, sizeof id, "p%06zu", p);
    m.patch_ids.push_back(id);
  }
  for (std::size_t t = 0; t < tests; ++t) {
    char id[32];
    std::snprintf(id, sizeof id, "t%06zu", t);
    m.tests.push_back({{"gen:s", id}, "gen", m.patch_ids[0], ""});
  }
  SplitMix64 rng(42);
  m.outcomes.resize(patches * tests);
  for (std::size_t p = 0; p < patches; ++p) {
    const auto b = rng.below(behaviours);
    for (std::size_t t = 0; t < tests; ++t) {
      if ((t + b) % 7 == 0) m.at(p, t) = TestOutcome::fail("expected " + std::to_string(b));
    }
  }
  return m;
}

void bench_execution(int workers, std::size_t n_patches) {
  const fs::path root = fs::temp_directory_path() / ("pc_bench_" + std::to_string(::getpid()));
  fs::remove_all(root);
  std::string rules;
  for (int i = 0; i < 200; ++i) rules += "in" + std::to_string(i) + " -> out" + std::to_string(i) + "\n";
  write_file(root / "program" / "main.rules", rules);
  const auto snapshot = snapshot_of(root / "program");

  std::vector<Patch> patches;
  for (std::size_t p = 0; p < n_patches; ++p) {
    const std::string line = "in" + std::to_string(p % 200);
    const std::string diff = "--- a/main.rules\n+++ b/main.rules\n@@ -" + std::to_string(p % 200 + 1) +
                             ",1 +" + std::to_string(p % 200 + 1) + ",1 @@\n-" + line + " -> out" +
                             std::to_string(p % 200) + "\n+" + line + " -> patched" + std::to_string(p) + "\n";
    patches.push_back(parse_patch(diff, "p" + std::to_string(1000 + p), "bench"));
  }
  const auto set = dedup(patches, snapshot, "bench");
  GeneratorSpec gen{"sim", AdapterKind::Simulated, "", 60, 1, 20};
  auto executor = ExecutorSpec::simulated("sim");
  ExecutionOptions opts{root / "work", workers, MessageRules::defaults(workspace_root(root / "work"))};
  const auto tcg = generate_all_tests(snapshot, set, {gen}, executor, 2, opts);

  ExecutionMatrix par, ser;
  const double tp = seconds([&] { par = cross_execute(snapshot, set, tcg, executor, opts); });
  const double ts = seconds([&] { ser = cross_execute_serial(snapshot, set, tcg, executor, opts); });
  std::printf("execution  %zu patches x %zu tests: serial %.3fs  parallel(%d) %.3fs  speedup %.2fx  %s\n",
              set.patches.size(), tcg.tests.size(), ts, workers, tp, tp > 0 ? ts / tp : 0.0,
              par.outcomes == ser.outcomes ? "identical" : "MISMATCH");
  fs::remove_all(root);
}

}  // namespace

int main(int argc, char** argv) {
  const int workers = argc > 1 ? std::atoi(argv[1]) : 4;
  const std::size_t n_patches = argc > 2 ? static_cast<std::size_t>(std::atoi(argv[2])) : 32;

  for (std::size_t patches : {200u, 1000u, 2000u}) {
    const auto m = synthetic_matrix(patches, 400, patches / 10 + 1);
    std::vector<Cluster> a, b;
    const double tl = seconds([&] { a = cluster_patches_linear(m); });
    const double th = seconds([&] { b = cluster_patches(m, workers); });
    bool agree = a.size() == b.size();
    for (std::size_t i = 0; agree && i < a.size(); ++i) agree = a[i].members == b[i].members;
    std::printf("clustering %5zu patches x 400 tests: linear %.4fs  hashed(%d) %.4fs  clusters %zu  %s\n", patches,
                tl, workers, th, b.size(), agree ? "agree" : "MISMATCH");
  }
  bench_execution(workers, n_patches);
  return 0;
}
