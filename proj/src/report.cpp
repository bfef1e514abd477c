#include <sstream>

#include <nlohmann/json.hpp>

#include "patchcluster/pipeline.hpp"

namespace patchcluster {

using json = nlohmann::json;
using ordered_json = nlohmann::ordered_json;

namespace {

std::string dump(const ordered_json& j) { return j.dump(2, ' ', false, json::error_handler_t::replace) + "\n"; }

std::string exact(const Rational& r) {
  return std::to_string(r.numerator()) + (r.denominator() == 1 ? "" : "/" + std::to_string(r.denominator()));
}

ordered_json rational(const Rational& r, int places) {
  return {{"value", render_decimal(r, places)}, {"exact", exact(r)}};
}

ordered_json key_json(const TestKey& k) { return {{"suite_id", k.suite_id}, {"test_id", k.test_id}}; }

ordered_json outcome_json(const TestOutcome& o) {
  return {{"status", std::string(to_string(o.status))}, {"message", o.message}};
}

ordered_json clusters_json(const std::vector<Cluster>& clusters) {
  ordered_json arr = ordered_json::array();
  for (const auto& c : clusters) {
    ordered_json cj;
    cj["cluster_id"] = c.cluster_id;
    cj["members"] = c.members;
    cj["signature"] = ordered_json::array();
    for (const auto& e : c.signature.entries) {
      ordered_json ej = key_json(e.key);
      ej["status"] = std::string(to_string(e.status));
      ej["message"] = e.message;
      cj["signature"].push_back(std::move(ej));
    }
    arr.push_back(std::move(cj));
  }
  return arr;
}

ordered_json selections_json(const std::vector<Selection>& selections) {
  ordered_json arr = ordered_json::array();
  for (const auto& s : selections) {
    arr.push_back({{"cluster_id", s.cluster_id},
                   {"chosen", s.chosen},
                   {"co_minimal", s.co_minimal},
                   {"rationale", s.rationale}});
  }
  return arr;
}

ordered_json metrics_json(const BugMetrics& m) {
  ordered_json j;
  j["n_patches"] = m.n_patches;
  j["n_clusters"] = m.n_clusters;
  j["reduction"] = rational(m.reduction, 2);
  if (m.purity) {
    ordered_json pj;
    pj["bug_class"] = std::string(to_string(m.purity->bug_class));
    pj["purity_ratio"] = rational(m.purity->purity_ratio, 4);
    pj["per_cluster"] = ordered_json::object();
    for (const auto& [id, p] : m.purity->per_cluster) pj["per_cluster"][id] = std::string(to_string(p));
    j["purity"] = std::move(pj);
  } else {
    j["purity"] = nullptr;
  }
  if (m.random_selection) {
    ordered_json rj;
    rj["avg_correct_fraction"] = rational(m.random_selection->avg_correct_fraction, 4);
    rj["avg_correct_clusters_per_run"] = rational(m.random_selection->avg_correct_clusters_per_run, 2);
    rj["per_cluster"] = ordered_json::array();
    for (const auto& c : m.random_selection->per_cluster) {
      rj["per_cluster"].push_back({{"cluster_id", c.cluster_id},
                                   {"correct_draws", c.correct_draws},
                                   {"repetitions", c.repetitions},
                                   {"correct_fraction", rational(c.correct_fraction, 4)}});
    }
    j["random_selection"] = std::move(rj);
  } else {
    j["random_selection"] = nullptr;
  }
  if (m.shortest_selection) {
    ordered_json arr = ordered_json::array();
    for (const auto& e : *m.shortest_selection) {
      arr.push_back({{"cluster_id", e.cluster_id},
                     {"category", std::string(to_string(e.category))},
                     {"correct_fraction", rational(e.correct_fraction, 4)},
                     {"co_minimal", e.co_minimal},
                     {"all_equal_length", e.all_equal_length}});
    }
    j["shortest_selection"] = std::move(arr);
  } else {
    j["shortest_selection"] = nullptr;
  }
  return j;
}

std::string outcome_text(const TestOutcome& o) {
  if (o.status == Status::Pass) return "pass";
  return std::string(to_string(o.status)) + " (" + o.message + ")";
}

std::string md_escape(std::string s) {
  std::string out;
  for (char c : s) {
    if (c == '|') out += "\\|";
    else if (c == '\n') out += ' ';
    else out.push_back(c);
  }
  return out;
}

}  // namespace

std::string clusters_to_json(const std::vector<Cluster>& clusters) { return dump(clusters_json(clusters)); }
std::string selections_to_json(const std::vector<Selection>& selections) { return dump(selections_json(selections)); }
std::string metrics_to_json(const BugMetrics& metrics) { return dump(metrics_json(metrics)); }

std::string report_to_json(const RunReport& r) {
  ordered_json j;
  j["bug_id"] = r.bug_id;
  j["status"] = r.status;
  j["input_patches"] = r.input_patches;
  j["surviving_patches"] = r.surviving_patches;
  j["discarded"] = ordered_json::array();
  for (const auto& d : r.discarded) {
    ordered_json dj{{"patch_id", d.patch_id}, {"reason", d.reason}};
    if (!d.kept_id.empty()) dj["kept_id"] = d.kept_id;
    j["discarded"].push_back(std::move(dj));
  }
  j["warnings"] = r.warnings;
  j["generation_failures"] = ordered_json::array();
  for (const auto& f : r.generation_failures) {
    j["generation_failures"].push_back(
        {{"generator", f.generator}, {"origin_patch", f.origin_patch}, {"file", f.file}, {"reason", f.reason}});
  }
  j["flaky_tests"] = ordered_json::array();
  for (const auto& k : r.flaky_tests) j["flaky_tests"].push_back(key_json(k));
  j["tests"] = ordered_json::array();
  for (const auto& t : r.tests) {
    ordered_json tj = key_json(t.key);
    tj["generator"] = t.generator;
    tj["origin_patch"] = t.origin_patch;
    tj["description"] = t.description;
    j["tests"].push_back(std::move(tj));
  }
  j["origin_failures"] = ordered_json::array();
  for (const auto& o : r.origin_failures) {
    ordered_json oj = key_json(o.key);
    oj["origin_patch"] = o.origin_patch;
    oj["outcome"] = outcome_json(o.outcome);
    j["origin_failures"].push_back(std::move(oj));
  }
  j["clusters"] = clusters_json(r.clusters);
  j["selections"] = selections_json(r.selections);
  j["representative_diffs"] = r.representative_diffs;
  j["distinguishing_tests"] = ordered_json::array();
  for (const auto& d : r.distinctions) {
    ordered_json dj{{"cluster_a", d.cluster_a}, {"cluster_b", d.cluster_b}, {"tests", ordered_json::array()}};
    for (const auto& t : d.tests) {
      ordered_json tj = key_json(t.key);
      tj["description"] = t.description;
      tj["outcome_a"] = outcome_json(t.outcome_a);
      tj["outcome_b"] = outcome_json(t.outcome_b);
      dj["tests"].push_back(std::move(tj));
    }
    j["distinguishing_tests"].push_back(std::move(dj));
  }
  j["metrics"] = r.metrics ? metrics_json(*r.metrics) : ordered_json(nullptr);
  const auto& p = r.provenance;
  j["provenance"] = {{"config_hash", p.config_hash},
                     {"strategy", p.strategy},
                     {"rng_algorithm", p.rng_algorithm},
                     {"generator_seeds", p.generator_seeds},
                     {"evaluation_seed", p.evaluation_seed},
                     {"random_repetitions", p.random_repetitions},
                     {"tool_version", p.tool_version}};
  return dump(j);
}

std::string report_to_markdown(const RunReport& r) {
  std::ostringstream md;
  md << "# Patch clustering report: " << r.bug_id << "\n\n";
  md << "Status: **" << r.status << "**\n\n";
  md << "- Input patches: " << r.input_patches.size() << "\n";
  md << "- Surviving patches: " << r.surviving_patches.size() << "\n";
  md << "- Discarded: " << r.discarded.size() << "\n";
  md << "- Generated tests: " << r.tests.size() << " (" << r.flaky_tests.size() << " flaky removed, "
     << r.generation_failures.size() << " generation failures)\n";
  if (r.metrics) {
    md << "- Clusters: " << r.metrics->n_clusters << "\n";
    md << "- Reduction: " << render_decimal(r.metrics->reduction) << "%\n";
    if (r.metrics->purity) md << "- Purity: " << to_string(r.metrics->purity->bug_class) << "\n";
  }
  md << "\n";

  if (!r.discarded.empty()) {
    md << "## Discarded patches\n\n| patch | reason |\n|---|---|\n";
    for (const auto& d : r.discarded) {
      md << "| " << d.patch_id << " | " << d.reason << (d.kept_id.empty() ? "" : " of " + d.kept_id) << " |\n";
    }
    md << "\n";
  }
  if (!r.warnings.empty()) {
    md << "## Warnings\n\n";
    for (const auto& w : r.warnings) md << "- " << w << "\n";
    md << "\n";
  }

  if (!r.clusters.empty()) {
    md << "## Clusters\n\n";
    for (std::size_t i = 0; i < r.clusters.size(); ++i) {
      const auto& c = r.clusters[i];
      md << "### " << c.cluster_id << " (" << c.members.size() << (c.members.size() == 1 ? " patch" : " patches") << ")\n\n";
      md << "Members: ";
      for (std::size_t k = 0; k < c.members.size(); ++k) md << (k ? ", " : "") << c.members[k];
      md << "\n\n";
      if (c.signature.empty()) {
        md << "Passes every generated test.\n\n";
      } else {
        md << "Failing tests: " << c.signature.entries.size() << "\n\n";
      }
      if (i < r.selections.size()) {
        const auto& s = r.selections[i];
        md << "Representative: **" << s.chosen << "** (" << s.rationale << ")\n\n";
        if (auto d = r.representative_diffs.find(s.chosen); d != r.representative_diffs.end()) {
          md << "```diff\n" << d->second << (d->second.ends_with('\n') ? "" : "\n") << "```\n\n";
        }
      }
    }
  }

  if (!r.distinctions.empty()) {
    md << "## Distinguishing tests\n\n";
    for (const auto& d : r.distinctions) {
      md << "### " << d.cluster_a << " vs " << d.cluster_b << "\n\n";
      md << "| test | input | " << d.cluster_a << " | " << d.cluster_b << " |\n|---|---|---|---|\n";
      for (const auto& t : d.tests) {
        md << "| " << md_escape(t.key.suite_id + "/" + t.key.test_id) << " | " << md_escape(t.description) << " | "
           << md_escape(outcome_text(t.outcome_a)) << " | " << md_escape(outcome_text(t.outcome_b)) << " |\n";
      }
      md << "\n";
    }
  }

  if (!r.generation_failures.empty()) {
    md << "## Generation failures\n\n| generator | patch | file | reason |\n|---|---|---|---|\n";
    for (const auto& f : r.generation_failures) {
      md << "| " << f.generator << " | " << f.origin_patch << " | " << f.file << " | " << f.reason << " |\n";
    }
    md << "\n";
  }
  return md.str();
}

std::string aggregate_to_json(const AggregateReport& a) {
  ordered_json j;
  j["strategy"] = a.strategy;
  j["bugs"] = ordered_json::array();
  for (const auto& b : a.bugs) {
    j["bugs"].push_back({{"bug_id", b.bug_id},
                         {"clusters", clusters_json(b.clusters)},
                         {"selections", selections_json(b.selections)},
                         {"metrics", metrics_json(b.metrics)}});
  }
  ordered_json red;
  red["median"] = rational(a.median_reduction, 2);
  red["mean"] = rational(a.mean_reduction, 2);
  red["per_bug"] = ordered_json::array();
  for (const auto& b : a.bugs) red["per_bug"].push_back(render_decimal(b.metrics.reduction));
  j["reduction"] = std::move(red);
  j["purity"] = {{"labeled_bugs", a.labeled_bugs}, {"bug_classes", a.bug_classes}};
  ordered_json sel;
  sel["mixed_clusters"] = a.mixed_clusters;
  sel["random_avg_fraction_over_clusters"] =
      a.random_avg_fraction_over_clusters ? rational(*a.random_avg_fraction_over_clusters, 4) : ordered_json(nullptr);
  sel["random_avg_correct_clusters_per_run"] = a.random_avg_correct_clusters_per_run
                                                   ? rational(*a.random_avg_correct_clusters_per_run, 2)
                                                   : ordered_json(nullptr);
  sel["shortest_categories"] = a.shortest_categories;
  sel["shortest_includes_correct"] = a.shortest_includes_correct;
  sel["shortest_all_equal_length"] = a.shortest_all_equal_length;
  j["selection"] = std::move(sel);
  return dump(j);
}

std::string aggregate_to_markdown(const AggregateReport& a) {
  std::ostringstream md;
  md << "# Replay summary (" << a.bugs.size() << " bugs, strategy " << a.strategy << ")\n\n";
  md << "## Reduction\n\n| bug | patches | clusters | reduction |\n|---|---|---|---|\n";
  for (const auto& b : a.bugs) {
    md << "| " << b.bug_id << " | " << b.metrics.n_patches << " | " << b.metrics.n_clusters << " | "
       << render_decimal(b.metrics.reduction) << "% |\n";
  }
  md << "\nMedian (lower): " << render_decimal(a.median_reduction) << "%, mean: " << render_decimal(a.mean_reduction)
     << "%\n\n";
  md << "## Purity\n\n| class | bugs |\n|---|---|\n";
  for (const auto& [cls, n] : a.bug_classes) md << "| " << cls << " | " << n << " |\n";
  md << "\nLabeled bugs: " << a.labeled_bugs << "\n\n";
  md << "## Selection on mixed clusters\n\n| | clusters |\n|---|---|\n";
  md << "| Total mixed clusters | " << a.mixed_clusters << " |\n";
  for (const auto& [cat, n] : a.shortest_categories) md << "| Shortest: " << cat << " | " << n << " |\n";
  md << "| Shortest includes a correct patch | " << a.shortest_includes_correct << " |\n";
  md << "| All members tie on length | " << a.shortest_all_equal_length << " |\n";
  if (a.random_avg_correct_clusters_per_run) {
    md << "| Random: correct per run (avg) | " << render_decimal(*a.random_avg_correct_clusters_per_run) << " of "
       << a.mixed_clusters << " |\n";
    md << "| Random: mean correct fraction | " << render_decimal(*a.random_avg_fraction_over_clusters * 100) << "% |\n";
  }
  return md.str();
}

}  // namespace patchcluster
