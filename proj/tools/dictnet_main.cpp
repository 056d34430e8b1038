#include <cstdio>
#include <exception>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "dictnet/config.hpp"
#include "dictnet/error.hpp"
#include "dictnet/experiment.hpp"

namespace {
// Exit codes: 0 success, 1 config error, 2 data/format error,
// 3 every grid cell diverged.
constexpr int kOk = 0;
constexpr int kConfigError = 1;
constexpr int kDataError = 2;
constexpr int kAllDiverged = 3;

int cmd_run(const std::string& config_path) {
  const dictnet::ExperimentConfig cfg = dictnet::parse_config_file(config_path);
  const dictnet::RunResult result = dictnet::run_experiment(cfg);
  std::printf("wrote %zu rows to %s\n", result.cells.size(), result.csv_path.c_str());
  for (const auto& cell : result.cells) {
    if (cell.diverged)
      std::printf("  %-24s f=%.4f  DIVERGED\n", cell.strategy.c_str(), cell.fraction);
    else
      std::printf("  %-24s f=%.4f  dyn=%zu  test_err=%.4f  (%.1fs)\n",
                  cell.strategy.c_str(), cell.fraction, cell.dynamic, cell.test_error,
                  cell.wall_seconds);
  }
  return result.all_diverged ? kAllDiverged : kOk;
}
}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"dictnet - networks with dictionary-factored weights"};
  app.require_subcommand(1);

  std::string config_path;
  auto* run = app.add_subcommand("run", "run an experiment config");
  run->add_option("config", config_path, "experiment config file")->required();

  std::string ckpt_path, out_path;
  std::size_t layer_index = 0;
  auto* render = app.add_subcommand("render", "render checkpoint features as a PGM grid");
  render->add_option("checkpoint", ckpt_path, "checkpoint file")->required();
  render->add_option("--layer", layer_index, "layer index (default 0)");
  render->add_option("--out", out_path, "output PGM path")->required();

  std::vector<std::string> csvs;
  std::string merged;
  auto* report = app.add_subcommand("report", "merge result CSVs");
  report->add_option("csvs", csvs, "input CSV files")->required();
  report->add_option("--out", merged, "merged CSV path")->required();

  CLI11_PARSE(app, argc, argv);

  try {
    if (run->parsed()) return cmd_run(config_path);
    if (render->parsed()) {
      dictnet::render_filters(ckpt_path, layer_index, out_path);
      std::printf("wrote %s\n", out_path.c_str());
      return kOk;
    }
    if (report->parsed()) {
      dictnet::merge_reports(csvs, merged);
      std::printf("wrote %s\n", merged.c_str());
      return kOk;
    }
  } catch (const dictnet::ConfigError& e) {
    std::fprintf(stderr, "config error: %s\n", e.what());
    return kConfigError;
  } catch (const dictnet::FormatError& e) {
    std::fprintf(stderr, "data error: %s\n", e.what());
    return kDataError;
  } catch (const dictnet::DataError& e) {
    std::fprintf(stderr, "data error: %s\n", e.what());
    return kDataError;
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return kDataError;
  }
  return kOk;
}
