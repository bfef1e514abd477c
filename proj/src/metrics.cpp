#include "patchcluster/metrics.hpp"

#include <algorithm>

#include "patchcluster/error.hpp"
#include "patchcluster/select.hpp"

namespace patchcluster {

std::string render_decimal(const Rational& value, int places) {
  std::int64_t scale = 1;
  for (int i = 0; i < places; ++i) scale *= 10;
  const bool negative = value < Rational(0);
  const Rational mag = negative ? -value : value;
  // round(mag * scale) with ties away from zero
  const Rational scaled = mag * scale;
  std::int64_t units = scaled.numerator() / scaled.denominator();
  if ((scaled - units) * 2 >= Rational(1)) ++units;
  std::string out = (negative && units != 0 ? "-" : "") + std::to_string(units / scale);
  if (places > 0) {
    std::string frac = std::to_string(units % scale);
    out += "." + std::string(static_cast<std::size_t>(places) - frac.size(), '0') + frac;
  }
  return out;
}

Rational reduction(std::int64_t n_patches, std::int64_t n_clusters) {
  if (n_patches < 1 || n_clusters < 1 || n_clusters > n_patches) {
    throw Error(ErrorKind::InvariantViolation, "reduction needs 1 <= clusters <= patches, got " +
                                                   std::to_string(n_clusters) + " clusters for " +
                                                   std::to_string(n_patches) + " patches");
  }
  return Rational(n_patches - n_clusters, n_patches) * 100;
}

Rational lower_median(std::vector<Rational> values) {
  if (values.empty()) throw Error(ErrorKind::InvariantViolation, "median of an empty list");
  std::sort(values.begin(), values.end());
  return values[(values.size() - 1) / 2];
}

Rational mean(const std::vector<Rational>& values) {
  if (values.empty()) throw Error(ErrorKind::InvariantViolation, "mean of an empty list");
  Rational sum = 0;
  for (const auto& v : values) sum += v;
  return sum / static_cast<std::int64_t>(values.size());
}

std::string_view to_string(ClusterPurity p) {
  switch (p) {
    case ClusterPurity::PureCorrect: return "pure-correct";
    case ClusterPurity::PureIncorrect: return "pure-incorrect";
    case ClusterPurity::Mixed: return "mixed";
  }
  return "mixed";
}

std::string_view to_string(BugClass c) {
  switch (c) {
    case BugClass::OnlyPure: return "only-pure";
    case BugClass::AtLeastOneMixed: return "at-least-one-mixed";
    case BugClass::AllCorrectByConstruction: return "all-correct-by-construction";
    case BugClass::AllIncorrectByConstruction: return "all-incorrect-by-construction";
  }
  return "only-pure";
}

std::string_view to_string(ShortestCategory c) {
  switch (c) {
    case ShortestCategory::AllShortestCorrect: return "all-shortest-correct";
    case ShortestCategory::ShortestMixedMajorityCorrect: return "shortest-mixed-majority-correct";
    case ShortestCategory::ShortestIncludesCorrect: return "shortest-includes-correct";
    case ShortestCategory::ShortestAllIncorrect: return "shortest-all-incorrect";
  }
  return "shortest-all-incorrect";
}

namespace {

Label label_of(const LabeledRun& run, const std::string& id) {
  auto it = run.labels.find(id);
  if (it == run.labels.end()) throw Error(ErrorKind::MissingLabel, "bug " + run.bug_id + ": no label for patch " + id);
  return it->second;
}

ClusterPurity classify(const LabeledRun& run, const Cluster& c) {
  std::size_t correct = 0;
  for (const auto& m : c.members) correct += label_of(run, m) == Label::Correct ? 1 : 0;
  if (correct == c.members.size()) return ClusterPurity::PureCorrect;
  if (correct == 0) return ClusterPurity::PureIncorrect;
  return ClusterPurity::Mixed;
}

}  // namespace

PurityReport purity(const LabeledRun& run) {
  if (run.clusters.empty()) throw Error(ErrorKind::InvariantViolation, "purity of a run without clusters");
  PurityReport report;
  std::int64_t pure = 0;
  bool any_correct = false;
  bool any_incorrect = false;
  for (const auto& c : run.clusters) {
    const auto p = classify(run, c);
    report.per_cluster.emplace_back(c.cluster_id, p);
    if (p != ClusterPurity::Mixed) ++pure;
    any_correct |= p != ClusterPurity::PureIncorrect;
    any_incorrect |= p != ClusterPurity::PureCorrect;
  }
  report.purity_ratio = Rational(pure, static_cast<std::int64_t>(run.clusters.size()));
  if (!any_incorrect) {
    report.bug_class = BugClass::AllCorrectByConstruction;
  } else if (!any_correct) {
    report.bug_class = BugClass::AllIncorrectByConstruction;
  } else if (pure == static_cast<std::int64_t>(run.clusters.size())) {
    report.bug_class = BugClass::OnlyPure;
  } else {
    report.bug_class = BugClass::AtLeastOneMixed;
  }
  return report;
}

RandomSelectionEval eval_random_selection(const LabeledRun& run, std::int64_t repetitions, std::int64_t seed) {
  if (repetitions < 1) throw Error(ErrorKind::InvariantViolation, "repetitions must be positive");
  RandomSelectionEval eval;
  std::int64_t correct_total = 0;
  for (const auto& c : run.clusters) {
    if (classify(run, c) != ClusterPurity::Mixed) continue;
    SplitMix64 stream(static_cast<std::uint64_t>(seed) ^ fnv1a64(c.cluster_id));
    RandomClusterEval ce{c.cluster_id, 0, repetitions, 0};
    for (std::int64_t r = 0; r < repetitions; ++r) {
      const auto chosen = random_of(c.members, static_cast<std::int64_t>(stream.next()));
      if (label_of(run, chosen) == Label::Correct) ++ce.correct_draws;
    }
    ce.correct_fraction = Rational(ce.correct_draws, repetitions);
    correct_total += ce.correct_draws;
    eval.per_cluster.push_back(std::move(ce));
  }
  if (eval.per_cluster.empty()) throw Error(ErrorKind::NoMixedClusters, "bug " + run.bug_id + " has no mixed cluster");
  std::vector<Rational> fractions;
  for (const auto& ce : eval.per_cluster) fractions.push_back(ce.correct_fraction);
  eval.avg_correct_fraction = mean(fractions);
  eval.avg_correct_clusters_per_run = Rational(correct_total, repetitions);
  return eval;
}

std::vector<ShortestClusterEval> eval_shortest_selection(const LabeledRun& run, const PatchSet& patches) {
  std::vector<ShortestClusterEval> out;
  for (const auto& c : run.clusters) {
    if (classify(run, c) != ClusterPurity::Mixed) continue;
    auto [chosen, tied] = shortest_of(c.members, patches);
    std::int64_t correct = 0;
    for (const auto& id : tied) correct += label_of(run, id) == Label::Correct ? 1 : 0;
    ShortestClusterEval e;
    e.cluster_id = c.cluster_id;
    e.correct_fraction = Rational(correct, static_cast<std::int64_t>(tied.size()));
    e.all_equal_length = tied.size() == c.members.size();
    if (e.correct_fraction == Rational(1)) {
      e.category = ShortestCategory::AllShortestCorrect;
    } else if (e.correct_fraction == Rational(0)) {
      e.category = ShortestCategory::ShortestAllIncorrect;
    } else if (e.correct_fraction * 2 >= Rational(1)) {
      e.category = ShortestCategory::ShortestMixedMajorityCorrect;
    } else {
      e.category = ShortestCategory::ShortestIncludesCorrect;
    }
    e.co_minimal = std::move(tied);
    out.push_back(std::move(e));
  }
  return out;
}

}  // namespace patchcluster
