#include <CLI11.hpp>

#include <iostream>
#include <optional>

#include "recip/harness/config.hpp"
#include "recip/harness/plot.hpp"
#include "recip/harness/runner.hpp"

namespace {

struct Overrides {
  std::optional<unsigned long long> seed;
  std::optional<int> episodes;
  std::optional<std::string> out;
  std::optional<int> lanes;

  void apply(recip::harness::ExperimentConfig& c) const {
    if (seed) c.seeds = {*seed};
    if (episodes) c.episodes = *episodes;
    if (out) c.output = *out;
    if (lanes) c.lanes = *lanes;
    c.validate();
  }
};

void add_overrides(CLI::App* cmd, Overrides& o) {
  cmd->add_option("--seed", o.seed, "Run this single seed instead of the configured list");
  cmd->add_option("--episodes", o.episodes, "Episodes per run")->check(CLI::PositiveNumber);
  cmd->add_option("--out", o.out, "Output directory");
  cmd->add_option("--lanes", o.lanes, "Parallel lanes (batch size)")->check(CLI::PositiveNumber);
}

void print_summary(const recip::harness::ExperimentConfig& c, const recip::harness::RunOutcome& r) {
  std::cout << c.name << " summary over " << r.summary[0].n << " seed(s), last " << c.summary_window
            << " episode(s):\n";
  for (std::size_t m = 0; m < recip::harness::kMetricNames.size(); ++m)
    std::cout << "  " << recip::harness::kMetricNames[m] << " = " << r.summary[m].mean << " +- "
              << r.summary[m].stderr_ << '\n';
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Reciprocator experiments: IPD and Coins training, tournaments and plot data"};
  app.require_subcommand(1);

  std::string config_path;
  Overrides run_over, rr_over;
  auto* run = app.add_subcommand("run", "Train the configured pair for every seed");
  run->add_option("config", config_path, "Experiment config (INI)")->required()->check(CLI::ExistingFile);
  add_overrides(run, run_over);

  auto* rr = app.add_subcommand("round-robin", "Train every ordered roster pair in ipd-analytic");
  rr->add_option("config", config_path, "Experiment config (INI)")->required()->check(CLI::ExistingFile);
  add_overrides(rr, rr_over);

  std::string plot_dir, plot_out;
  auto* plot = app.add_subcommand("emit-plot-data", "Convert metrics CSVs into tidy long format");
  plot->add_option("dir", plot_dir, "Directory with metrics CSVs")->required();
  plot->add_option("--out", plot_out, "Output directory (default: the input directory)");

  CLI11_PARSE(app, argc, argv);

  try {
    if (*run) {
      auto c = recip::harness::load_config(config_path);
      run_over.apply(c);
      const auto outcome = recip::harness::run(c, &std::cerr);
      print_summary(c, outcome);
      return outcome.ok() ? 0 : 3;
    }
    if (*rr) {
      auto c = recip::harness::load_config(config_path);
      rr_over.apply(c);
      const auto cells = recip::harness::round_robin(c, &std::cerr);
      std::cout << "row,col,row_return,col_return,cooperative\n";
      for (const auto& cell : cells)
        std::cout << cell.row << ',' << cell.col << ',' << cell.row_return.mean << ',' << cell.col_return.mean << ','
                  << (cell.cooperative ? "yes" : "no") << '\n';
      return 0;
    }
    if (*plot) {
      const auto res = recip::harness::emit_plot_data(plot_dir, plot_out);
      for (const auto& w : res.warnings) std::cerr << "warning: " << w << '\n';
      std::cout << "read " << res.files_read << " metrics file(s), wrote " << res.rows_written << " rows\n";
      return 0;
    }
  } catch (const recip::ConfigError& e) {
    std::cerr << "config error: " << e.what() << '\n';
    return 2;
  } catch (const recip::TrainingError& e) {
    std::cerr << "training error: " << e.what() << '\n';
    return 3;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  }
  return 0;
}
