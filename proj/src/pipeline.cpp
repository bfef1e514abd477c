#include "patchcluster/pipeline.hpp"

#include <algorithm>
#include <set>

#include <nlohmann/json.hpp>

#include "parallel.hpp"
#include "patchcluster/error.hpp"
#include "patchcluster/subprocess.hpp"

namespace patchcluster {

using ordered_json = nlohmann::ordered_json;

namespace {

template <class F>
auto in_stage(const char* stage, F&& f) -> decltype(f()) {
  try {
    return f();
  } catch (const Error& e) {
    if (!e.stage().empty()) throw;
    throw e.with_stage(stage);
  }
}

bool labels_cover(const std::vector<Cluster>& clusters, const std::map<std::string, Label>& labels) {
  for (const auto& c : clusters) {
    for (const auto& m : c.members) {
      if (!labels.contains(m)) return false;
    }
  }
  return true;
}

std::string patchset_to_json(const PatchSet& set, const std::vector<DiscardRecord>& discarded) {
  ordered_json j;
  j["bug_id"] = set.bug_id;
  j["patches"] = ordered_json::array();
  for (const auto& p : set.patches) {
    ordered_json pj;
    pj["id"] = p.id;
    pj["tool"] = p.tool;
    pj["files_touched"] = p.files_touched;
    pj["length"] = p.length;
    pj["label"] = p.label ? ordered_json(std::string(to_string(*p.label))) : ordered_json(nullptr);
    j["patches"].push_back(std::move(pj));
  }
  j["discarded"] = ordered_json::array();
  for (const auto& d : discarded) {
    ordered_json dj;
    dj["patch_id"] = d.patch_id;
    dj["reason"] = d.reason;
    if (!d.kept_id.empty()) dj["kept_id"] = d.kept_id;
    j["discarded"].push_back(std::move(dj));
  }
  return j.dump(2) + "\n";
}

std::string tcg_to_json(const TestCaseGeneration& tcg) {
  ordered_json j;
  j["suites"] = ordered_json::array();
  for (const auto& s : tcg.suites) {
    ordered_json sj;
    sj["suite_id"] = s.suite_id;
    sj["generator"] = s.generator;
    sj["origin_patch"] = s.origin_patch;
    sj["target_file"] = s.target_file;
    sj["test_ids"] = s.test_ids;
    j["suites"].push_back(std::move(sj));
  }
  j["failures"] = ordered_json::array();
  for (const auto& f : tcg.failures) {
    j["failures"].push_back({{"generator", f.generator}, {"origin_patch", f.origin_patch}, {"file", f.file},
                             {"reason", f.reason}});
  }
  j["flaky"] = ordered_json::array();
  for (const auto& k : tcg.flaky) j["flaky"].push_back({{"suite_id", k.suite_id}, {"test_id", k.test_id}});
  return j.dump(2) + "\n";
}

std::string resolve_bug_id(const RunConfig& cfg) {
  if (!cfg.bug_id.empty()) return cfg.bug_id;
  std::vector<std::string> dirs;
  for (const auto& e : fs::directory_iterator(cfg.patches_dir)) {
    if (e.is_directory()) dirs.push_back(e.path().filename().string());
  }
  if (dirs.size() != 1) {
    throw Error(ErrorKind::Config, "patches_dir holds " + std::to_string(dirs.size()) +
                                       " bug directories; set bug_id to pick one");
  }
  return dirs.front();
}

void write_report_files(const fs::path& bug_out, const RunReport& report) {
  write_file(bug_out / "report.json", report_to_json(report));
  write_file(bug_out / "report.md", report_to_markdown(report));
}

}  // namespace

bool check_plausibility(const ProgramSnapshot& snapshot, const Patch& patch, const std::string& existing_suite_cmd,
                        const fs::path& workspace, int timeout_s) {
  const detail::ScopedDir ws(workspace);
  std::error_code ec;
  fs::remove_all(workspace, ec);
  apply_patch(snapshot, patch, workspace);
  const auto cmd = substitute(existing_suite_cmd, "program_dir", shell_quote(workspace.string()));
  return run_shell(cmd, timeout_s, fs::path(workspace.string() + ".log")).ok();
}

BugMetrics compute_metrics(const std::string& bug_id, const std::vector<Cluster>& clusters, const PatchSet& patches,
                           const std::map<std::string, Label>& labels, bool lengths_known,
                           const MetricsOptions& options) {
  BugMetrics m;
  for (const auto& c : clusters) m.n_patches += static_cast<std::int64_t>(c.members.size());
  m.n_clusters = static_cast<std::int64_t>(clusters.size());
  m.reduction = reduction(m.n_patches, m.n_clusters);
  if (!labels_cover(clusters, labels)) return m;

  LabeledRun run{bug_id, clusters, {}};
  for (const auto& c : clusters) {
    for (const auto& id : c.members) run.labels[id] = labels.at(id);
  }
  m.purity = purity(run);
  const bool any_mixed = std::any_of(m.purity->per_cluster.begin(), m.purity->per_cluster.end(),
                                     [](const auto& pc) { return pc.second == ClusterPurity::Mixed; });
  if (any_mixed) {
    m.random_selection = eval_random_selection(run, options.random_repetitions, options.seed);
    if (lengths_known) m.shortest_selection = eval_shortest_selection(run, patches);
  }
  return m;
}

std::vector<ClusterPairDistinction> distinguish_clusters(const ExecutionMatrix& matrix,
                                                         const std::vector<Cluster>& clusters) {
  std::vector<ClusterPairDistinction> out;
  for (std::size_t a = 0; a < clusters.size(); ++a) {
    for (std::size_t b = a + 1; b < clusters.size(); ++b) {
      const auto pa = matrix.patch_index(clusters[a].members.front());
      const auto pb = matrix.patch_index(clusters[b].members.front());
      if (!pa || !pb) throw Error(ErrorKind::UnknownPatch, "cluster member missing from matrix");
      ClusterPairDistinction d{clusters[a].cluster_id, clusters[b].cluster_id, {}};
      for (std::size_t t = 0; t < matrix.tests.size(); ++t) {
        const auto& oa = matrix.at(*pa, t);
        const auto& ob = matrix.at(*pb, t);
        if (!(oa == ob)) d.tests.push_back({matrix.tests[t].key, matrix.tests[t].description, oa, ob});
      }
      out.push_back(std::move(d));
    }
  }
  return out;
}

RunReport run(const RunConfig& config) {
  in_stage("config", [&] { config.validate(); });
  RunReport report;
  report.bug_id = in_stage("config", [&] { return resolve_bug_id(config); });
  report.provenance.config_hash = config.config_hash;
  report.provenance.strategy = config.strategy.to_string();
  for (const auto& g : config.generators) report.provenance.generator_seeds[g.name] = g.seed;
  report.provenance.evaluation_seed = config.evaluation_seed;
  report.provenance.random_repetitions = config.random_repetitions;

  const fs::path bug_out = fs::absolute(config.out_dir / report.bug_id);
  std::error_code ec;
  fs::remove_all(bug_out, ec);
  fs::create_directories(bug_out, ec);
  if (ec) throw Error(ErrorKind::Workspace, "cannot create " + bug_out.string()).with_stage("ingest");
  const fs::path work_dir = bug_out / "work";

  // Ingest
  const auto snapshot = in_stage("ingest", [&] { return snapshot_of(fs::absolute(config.program_root)); });
  auto patches = in_stage("ingest", [&] {
    return load_patch_dir(config.patches_dir / report.bug_id, config.comment_prefixes);
  });
  for (const auto& p : patches) report.input_patches.push_back(p.id);

  // Plausibility
  std::vector<Patch> plausible;
  if (config.existing_suite_cmd) {
    std::vector<char> ok(patches.size(), 0);
    in_stage("plausibility", [&] {
      detail::parallel_for(patches.size(), config.workers, [&](std::size_t i) {
        ok[i] = check_plausibility(snapshot, patches[i], *config.existing_suite_cmd,
                                   work_dir / "plausibility" / patches[i].id, config.existing_suite_timeout_s);
      });
    });
    for (std::size_t i = 0; i < patches.size(); ++i) {
      if (ok[i]) {
        plausible.push_back(std::move(patches[i]));
      } else {
        report.discarded.push_back({patches[i].id, "not-plausible", ""});
      }
    }
  } else {
    report.warnings.push_back("plausibility check skipped: existing_suite_cmd not configured");
    plausible = std::move(patches);
  }

  // Dedup
  const PatchSet set = in_stage("dedup", [&] { return dedup(std::move(plausible), snapshot, report.bug_id); });
  for (const auto& d : set.duplicates) report.discarded.push_back({d.patch_id, "duplicate", d.kept_id});
  std::sort(report.discarded.begin(), report.discarded.end(),
            [](const DiscardRecord& a, const DiscardRecord& b) { return a.patch_id < b.patch_id; });
  report.surviving_patches = set.ids();
  write_file(bug_out / "patchset.json", patchset_to_json(set, report.discarded));
  if (report.surviving_patches.size() + report.discarded.size() != report.input_patches.size()) {
    throw Error(ErrorKind::InvariantViolation, "patch conservation violated").with_stage("dedup");
  }
  if (set.patches.size() < 2) {
    report.status = std::string(kStatusTooFewPatches);
    write_report_files(bug_out, report);
    return report;
  }

  ExecutionOptions exec{work_dir, config.workers, config.compile_rules(workspace_root(work_dir))};

  // Test generation
  const auto tcg = in_stage("generation", [&] {
    return generate_all_tests(snapshot, set, config.generators, config.executor, config.n_flaky_runs, exec);
  });
  report.generation_failures = tcg.failures;
  report.flaky_tests = tcg.flaky;
  report.tests = tcg.tests;
  write_file(bug_out / "tcg.json", tcg_to_json(tcg));
  if (tcg.tests.empty()) {
    report.status = std::string(kStatusNoTests);
    write_report_files(bug_out, report);
    return report;
  }

  // Cross execution
  const auto matrix = in_stage("execution", [&] { return cross_execute(snapshot, set, tcg, config.executor, exec); });
  const fs::path matrix_file = bug_out / "matrix.json";
  write_file(matrix_file, matrix_to_json(matrix));
  for (std::size_t t = 0; t < matrix.tests.size(); ++t) {
    const auto& tc = matrix.tests[t];
    const auto p = matrix.patch_index(tc.origin_patch);
    if (p && matrix.at(*p, t).status != Status::Pass) {
      report.origin_failures.push_back({tc.key, tc.origin_patch, matrix.at(*p, t)});
      report.warnings.push_back("test " + tc.key.suite_id + "/" + tc.key.test_id + " does not pass on its origin patch");
    }
  }

  // Clustering, selection, metrics
  report.clusters = in_stage("clustering", [&] { return cluster_patches(matrix, config.workers); });
  write_file(bug_out / "clusters.json", clusters_to_json(report.clusters));
  report.selections = in_stage("selection", [&] {
    return select_patches(report.clusters, set, config.strategy, matrix_file);
  });
  for (const auto& s : report.selections) report.representative_diffs[s.chosen] = set.find(s.chosen)->diff_text;
  report.distinctions = in_stage("report", [&] { return distinguish_clusters(matrix, report.clusters); });

  std::map<std::string, Label> labels;
  for (const auto& p : set.patches) {
    if (p.label) labels[p.id] = *p.label;
  }
  if (!labels_cover(report.clusters, labels) && !labels.empty()) {
    report.warnings.push_back("labels incomplete; label-based metrics skipped");
  }
  report.metrics = in_stage("metrics", [&] {
    return compute_metrics(report.bug_id, report.clusters, set, labels, true,
                           {config.random_repetitions, config.evaluation_seed});
  });

  report.status = std::string(kStatusCompleted);
  write_report_files(bug_out, report);
  return report;
}

AggregateReport replay(const std::vector<fs::path>& matrix_files, const fs::path& labels_dir,
                       const ReplayOptions& options) {
  if (matrix_files.empty()) throw Error(ErrorKind::Schema, "replay needs at least one matrix file");
  AggregateReport agg;
  agg.strategy = options.strategy.to_string();
  std::set<std::string> seen;
  std::vector<Rational> reductions;
  std::vector<Rational> random_fractions;
  Rational random_per_run = 0;

  for (const auto& file : matrix_files) {
    ExecutionMatrix m;
    try {
      m = matrix_from_json(read_file(file));
    } catch (const Error& e) {
      throw Error(ErrorKind::Schema, file.string() + ": " + e.what());
    }
    if (!seen.insert(m.bug_id).second) throw Error(ErrorKind::Schema, "bug " + m.bug_id + " replayed twice");

    const fs::path bug_dir = labels_dir / m.bug_id;
    std::error_code ec;
    const auto labels = fs::is_directory(bug_dir, ec) ? load_labels(bug_dir) : std::map<std::string, Label>{};
    PatchSet set;
    set.bug_id = m.bug_id;
    bool lengths_known = true;
    for (const auto& id : m.patch_ids) {
      const auto diff = bug_dir / (id + ".diff");
      if (fs::is_regular_file(diff, ec)) {
        Patch p = parse_patch(read_file(diff), id, "unknown");
        p.length = patch_length(p, options.comment_prefixes);
        set.patches.push_back(std::move(p));
      } else {
        lengths_known = false;
        set.patches.push_back(Patch{id, "unknown", "", {}, std::nullopt, 0, {}});
      }
    }
    if (options.strategy.kind == SelectionStrategy::Kind::Shortest && !lengths_known) {
      throw Error(ErrorKind::Schema, "shortest selection for " + m.bug_id + " needs the patch diffs in " + bug_dir.string());
    }

    ReplayBug bug;
    bug.bug_id = m.bug_id;
    bug.clusters = cluster_patches(m);
    bug.selections = select_patches(bug.clusters, set, options.strategy, file);
    bug.metrics = compute_metrics(m.bug_id, bug.clusters, set, labels, lengths_known, options.metrics);

    reductions.push_back(bug.metrics.reduction);
    if (bug.metrics.purity) {
      ++agg.labeled_bugs;
      ++agg.bug_classes[std::string(to_string(bug.metrics.purity->bug_class))];
    }
    if (bug.metrics.random_selection) {
      for (const auto& c : bug.metrics.random_selection->per_cluster) random_fractions.push_back(c.correct_fraction);
      random_per_run += bug.metrics.random_selection->avg_correct_clusters_per_run;
    }
    if (bug.metrics.shortest_selection) {
      for (const auto& e : *bug.metrics.shortest_selection) {
        ++agg.shortest_categories[std::string(to_string(e.category))];
        if (e.all_equal_length) ++agg.shortest_all_equal_length;
        if (e.category != ShortestCategory::ShortestAllIncorrect) ++agg.shortest_includes_correct;
      }
    }
    agg.bugs.push_back(std::move(bug));
  }

  agg.median_reduction = lower_median(reductions);
  agg.mean_reduction = mean(reductions);
  agg.mixed_clusters = static_cast<std::int64_t>(random_fractions.size());
  if (!random_fractions.empty()) {
    agg.random_avg_fraction_over_clusters = mean(random_fractions);
    agg.random_avg_correct_clusters_per_run = random_per_run;
  }
  return agg;
}

}  // namespace patchcluster
