#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include <boost/rational.hpp>

#include "patchcluster/cluster.hpp"
#include "patchcluster/diffkit.hpp"

namespace patchcluster {

using Rational = boost::rational<std::int64_t>;

/// Fixed-point rendering, rounding half away from zero.
std::string render_decimal(const Rational& value, int places = 2);

/// ((n_patches - n_clusters) / n_patches) * 100, exact. Throws
/// InvariantViolation unless 1 <= n_clusters <= n_patches.
Rational reduction(std::int64_t n_patches, std::int64_t n_clusters);

/// Lower median for even counts. Throws InvariantViolation on empty input.
Rational lower_median(std::vector<Rational> values);
Rational mean(const std::vector<Rational>& values);

struct LabeledRun {
  std::string bug_id;
  std::vector<Cluster> clusters;
  std::map<std::string, Label> labels;
};

enum class ClusterPurity { PureCorrect, PureIncorrect, Mixed };
enum class BugClass { OnlyPure, AtLeastOneMixed, AllCorrectByConstruction, AllIncorrectByConstruction };

std::string_view to_string(ClusterPurity p);
std::string_view to_string(BugClass c);

struct PurityReport {
  std::vector<std::pair<std::string, ClusterPurity>> per_cluster;  // cluster order
  BugClass bug_class = BugClass::OnlyPure;
  Rational purity_ratio;
};

/// Throws MissingLabel when a clustered patch has no label.
PurityReport purity(const LabeledRun& run);

struct RandomClusterEval {
  std::string cluster_id;
  std::int64_t correct_draws = 0;
  std::int64_t repetitions = 0;
  Rational correct_fraction;
};

struct RandomSelectionEval {
  std::vector<RandomClusterEval> per_cluster;  // mixed clusters only
  /// Mean over clusters of each cluster's correct fraction.
  Rational avg_correct_fraction;
  /// Mean over repetitions of the number of clusters where a correct patch
  /// was drawn ("x out of N clusters").
  Rational avg_correct_clusters_per_run;
};

/// Throws NoMixedClusters or MissingLabel.
RandomSelectionEval eval_random_selection(const LabeledRun& run, std::int64_t repetitions, std::int64_t seed);

enum class ShortestCategory {
  AllShortestCorrect,
  ShortestMixedMajorityCorrect,  // correct fraction >= 1/2
  ShortestIncludesCorrect,       // 0 < correct fraction < 1/2
  ShortestAllIncorrect,
};

std::string_view to_string(ShortestCategory c);

struct ShortestClusterEval {
  std::string cluster_id;
  ShortestCategory category;
  Rational correct_fraction;  // within co_minimal
  std::vector<std::string> co_minimal;
  bool all_equal_length = false;  // every member ties for the minimum
};

/// Mixed clusters only, in cluster order. Throws MissingLabel.
std::vector<ShortestClusterEval> eval_shortest_selection(const LabeledRun& run, const PatchSet& patches);

}  // namespace patchcluster
