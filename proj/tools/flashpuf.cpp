// flashpuf: run disturb-based PUF extractions on simulated NAND chips and
// analyse the resulting signatures.

#include "flashpuf/commands.hpp"

#include <CLI11.hpp>

#include <iostream>

int main(int argc, char** argv) {
  using namespace flashpuf;

  CLI::App app{"Simulated NAND flash PUF extraction and analysis"};
  app.require_subcommand(1);

  std::string config;
  std::string out_dir;
  std::uint64_t seed = 0;
  std::uint64_t experiment_seed = 0;
  bool quiet = false;

  auto* run = app.add_subcommand("run", "run an extraction and write a result directory");
  run->add_option("--config", config, "experiment config (key = value)")->required();
  run->add_option("--out", out_dir, "output directory")->required();
  auto* seed_opt = run->add_option("--seed", seed, "override chip_seed");
  auto* exp_seed_opt = run->add_option("--experiment-seed", experiment_seed, "override experiment_seed");
  run->add_flag("--quiet", quiet, "suppress the summary");

  std::string sig_a;
  std::string sig_b;
  auto* compare = app.add_subcommand("compare", "compare two signature files");
  compare->add_option("a", sig_a, "first signature.bin")->required();
  compare->add_option("b", sig_b, "second signature.bin")->required();

  std::string trace_path;
  auto* fit = app.add_subcommand("fit", "fit exponential first-flip curves to sweep summaries");
  fit->add_option("trace", trace_path, "trace.log with SUMMARY records")->required();

  std::string plot_sig;
  std::vector<std::string> plot_outputs;
  auto* plot = app.add_subcommand("plot", "render a signature heatmap");
  plot->add_option("signature", plot_sig, "signature.bin")->required();
  plot->add_option("outputs", plot_outputs, "output files (.svg, .csv)")->required();

  std::string replay_dir;
  auto* replay = app.add_subcommand("replay", "re-run a result directory and check outputs");
  replay->add_option("--out", replay_dir, "result directory holding manifest.txt")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? exit_code::kOk : exit_code::kUsage;
  }

  if (*run) {
    RunOptions options;
    if (*seed_opt) options.chip_seed = seed;
    if (*exp_seed_opt) options.experiment_seed = experiment_seed;
    options.quiet = quiet;
    return cmd_run(config, out_dir, options, std::cout, std::cerr);
  }
  if (*compare) return cmd_compare(sig_a, sig_b, std::cout, std::cerr);
  if (*fit) return cmd_fit(trace_path, std::cout, std::cerr);
  if (*plot) {
    std::vector<std::filesystem::path> outputs(plot_outputs.begin(), plot_outputs.end());
    return cmd_plot(plot_sig, outputs, std::cout, std::cerr);
  }
  if (*replay) return cmd_replay(replay_dir, std::cout, std::cerr);
  return exit_code::kUsage;
}
