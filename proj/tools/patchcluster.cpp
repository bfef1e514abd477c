// patchcluster: test-based clustering of candidate repair patches.
//
//   patchcluster run --config <file> [--strategy S] [--workers N] [--format json|markdown]
//   patchcluster replay --labels <dir> <matrix.json>... [--strategy S] [--format json|markdown]

#include <iostream>

#include <CLI11.hpp>

#include "patchcluster/error.hpp"
#include "patchcluster/pipeline.hpp"

using namespace patchcluster;

int main(int argc, char** argv) {
  CLI::App app{"Cluster automatically generated repair patches by cross-executed test behavior"};
  app.require_subcommand(1);

  std::string strategy_text;
  std::string format = "json";

  auto* run_cmd = app.add_subcommand("run", "Run the full pipeline for one bug");
  std::string config_file;
  int workers = 0;
  run_cmd->add_option("--config", config_file, "TOML run configuration")->required();
  run_cmd->add_option("--strategy", strategy_text, "shortest | random:<seed> | external:<cmd>");
  run_cmd->add_option("--workers", workers, "Parallel adapter invocations")->check(CLI::PositiveNumber);
  run_cmd->add_option("--format", format, "Report printed on stdout")->check(CLI::IsMember({"json", "markdown"}));

  auto* replay_cmd = app.add_subcommand("replay", "Recompute clusters and metrics from persisted matrices");
  std::string labels_dir;
  std::vector<std::string> matrix_files;
  std::int64_t repetitions = 100;
  std::int64_t seed = 0;
  std::string out_file;
  replay_cmd->add_option("--labels", labels_dir, "Directory of <bug_id>/manifest.json (and diffs)")->required();
  replay_cmd->add_option("matrices", matrix_files, "matrix.json files");
  replay_cmd->add_option("--strategy", strategy_text, "shortest | random:<seed> | external:<cmd>");
  replay_cmd->add_option("--format", format, "Output format")->check(CLI::IsMember({"json", "markdown"}));
  replay_cmd->add_option("--repetitions", repetitions, "Random-selection repetitions")->check(CLI::PositiveNumber);
  replay_cmd->add_option("--seed", seed, "Random-selection evaluation seed");
  replay_cmd->add_option("--out", out_file, "Also write the aggregate report here");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? 0 : 2;
  }

  try {
    if (*run_cmd) {
      RunConfig config = load_config(config_file);
      if (!strategy_text.empty()) config.strategy = SelectionStrategy::parse(strategy_text);
      if (workers > 0) config.workers = workers;
      const auto report = run(config);
      std::cout << (format == "json" ? report_to_json(report) : report_to_markdown(report));
      return 0;
    }
    ReplayOptions options;
    options.strategy = strategy_text.empty() ? SelectionStrategy::shortest() : SelectionStrategy::parse(strategy_text);
    options.metrics = {repetitions, seed};
    std::vector<fs::path> files(matrix_files.begin(), matrix_files.end());
    const auto agg = replay(files, labels_dir, options);
    const auto text = format == "json" ? aggregate_to_json(agg) : aggregate_to_markdown(agg);
    if (!out_file.empty()) write_file(out_file, text);
    std::cout << text;
    return 0;
  } catch (const Error& e) {
    std::cerr << "patchcluster: " << to_string(e.kind()) << ": " << e.what() << "\n";
    return exit_code_for(e.kind());
  } catch (const std::exception& e) {
    std::cerr << "patchcluster: internal error: " << e.what() << "\n";
    return 4;
  }
}
