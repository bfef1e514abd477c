#pragma once

#include <map>
#include <optional>
#include <string>
#include <vector>

#include "patchcluster/cluster.hpp"
#include "patchcluster/config.hpp"
#include "patchcluster/matrix.hpp"
#include "patchcluster/metrics.hpp"
#include "patchcluster/select.hpp"

namespace patchcluster {

inline constexpr std::string_view kToolVersion = "patchcluster 1.0.0";
inline constexpr std::string_view kStatusCompleted = "completed";
inline constexpr std::string_view kStatusTooFewPatches = "skipped: needs >=2 plausible patches";
inline constexpr std::string_view kStatusNoTests = "skipped: no tests generated";

struct DiscardRecord {
  std::string patch_id;
  std::string reason;  // "duplicate" or "not-plausible"
  std::string kept_id;  // duplicates only
};

struct DistinguishingTest {
  TestKey key;
  std::string description;
  TestOutcome outcome_a;
  TestOutcome outcome_b;
};

/// Tests whose outcome differs between two clusters' first members.
struct ClusterPairDistinction {
  std::string cluster_a;
  std::string cluster_b;
  std::vector<DistinguishingTest> tests;
};

struct OriginFailure {
  TestKey key;
  std::string origin_patch;
  TestOutcome outcome;
};

struct BugMetrics {
  std::int64_t n_patches = 0;
  std::int64_t n_clusters = 0;
  Rational reduction;
  std::optional<PurityReport> purity;
  std::optional<RandomSelectionEval> random_selection;
  std::optional<std::vector<ShortestClusterEval>> shortest_selection;
};

struct Provenance {
  std::string config_hash;
  std::string strategy;
  std::string rng_algorithm{SplitMix64::kAlgorithm};
  std::map<std::string, std::int64_t> generator_seeds;
  std::int64_t evaluation_seed = 0;
  std::int64_t random_repetitions = 100;
  std::string tool_version{kToolVersion};
};

struct RunReport {
  std::string bug_id;
  std::string status;
  std::vector<std::string> input_patches;
  std::vector<std::string> surviving_patches;
  std::vector<DiscardRecord> discarded;
  std::vector<std::string> warnings;
  std::vector<GenerationFailure> generation_failures;
  std::vector<TestKey> flaky_tests;
  std::vector<TestCase> tests;
  std::vector<OriginFailure> origin_failures;
  std::vector<Cluster> clusters;
  std::vector<Selection> selections;
  std::map<std::string, std::string> representative_diffs;
  std::vector<ClusterPairDistinction> distinctions;
  std::optional<BugMetrics> metrics;
  Provenance provenance;
};

/// Runs the developer suite on the patched program; true iff it exits 0.
bool check_plausibility(const ProgramSnapshot& snapshot, const Patch& patch, const std::string& existing_suite_cmd,
                        const fs::path& workspace, int timeout_s);

struct MetricsOptions {
  std::int64_t random_repetitions = 100;
  std::int64_t seed = 0;
};

/// Everything the report derives from (clusters, labels, lengths).
BugMetrics compute_metrics(const std::string& bug_id, const std::vector<Cluster>& clusters, const PatchSet& patches,
                           const std::map<std::string, Label>& labels, bool lengths_known,
                           const MetricsOptions& options);

std::vector<ClusterPairDistinction> distinguish_clusters(const ExecutionMatrix& matrix,
                                                         const std::vector<Cluster>& clusters);

/// Full run for one bug. Writes every stage artifact under
/// `<out_dir>/<bug_id>/` and returns the report.
RunReport run(const RunConfig& config);

struct ReplayOptions {
  SelectionStrategy strategy;
  MetricsOptions metrics;
  std::vector<std::string> comment_prefixes = kDefaultCommentPrefixes;
};

struct ReplayBug {
  std::string bug_id;
  std::vector<Cluster> clusters;
  std::vector<Selection> selections;
  BugMetrics metrics;
};

struct AggregateReport {
  std::vector<ReplayBug> bugs;
  Rational median_reduction;  // lower median
  Rational mean_reduction;
  std::map<std::string, std::int64_t> bug_classes;
  std::int64_t labeled_bugs = 0;
  std::int64_t mixed_clusters = 0;
  std::optional<Rational> random_avg_fraction_over_clusters;
  std::optional<Rational> random_avg_correct_clusters_per_run;
  std::map<std::string, std::int64_t> shortest_categories;
  std::int64_t shortest_all_equal_length = 0;
  std::int64_t shortest_includes_correct = 0;
  std::string strategy;
};

/// Recomputes clusters, selections and metrics from persisted matrices.
/// Labels and diffs are read from `<labels_dir>/<bug_id>/`.
AggregateReport replay(const std::vector<fs::path>& matrix_files, const fs::path& labels_dir,
                       const ReplayOptions& options);

// Serialization ------------------------------------------------------------

std::string report_to_json(const RunReport& report);
std::string report_to_markdown(const RunReport& report);
std::string aggregate_to_json(const AggregateReport& report);
std::string aggregate_to_markdown(const AggregateReport& report);

/// The JSON fragments shared by run and replay reports, for comparing them.
std::string clusters_to_json(const std::vector<Cluster>& clusters);
std::string selections_to_json(const std::vector<Selection>& selections);
std::string metrics_to_json(const BugMetrics& metrics);

}  // namespace patchcluster
