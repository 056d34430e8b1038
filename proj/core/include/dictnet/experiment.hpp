#pragma once

#include <string>
#include <vector>

#include "dictnet/config.hpp"
#include "dictnet/data.hpp"
#include "dictnet/layer.hpp"
#include "dictnet/training.hpp"

namespace dictnet {

/// One (strategy, fraction) grid cell's outcome.
struct CellResult {
  std::string strategy;
  double fraction = 1.0;
  std::string columns;  // per-predictable-layer J, '/'-joined
  std::size_t dynamic = 0, static_count = 0, full_equiv = 0;
  double fraction_dynamic = 0.0;
  double train_error = 0.0, test_error = 0.0;
  std::size_t epochs = 0;
  std::uint64_t seed = 0;
  double wall_seconds = 0.0;
  bool diverged = false;
};

struct RunResult {
  std::vector<CellResult> cells;
  std::string csv_path;
  bool all_diverged = false;
};

/// Header + rows in the stable result schema. Wall seconds is the last
/// column so reruns can be compared by stripping it.
std::string cells_to_csv(const std::string& experiment_id, const std::string& arch_digest,
                         const std::vector<CellResult>& cells);

/// Hex digest of the architecture part of a config (layer lines + classes).
std::string architecture_digest(const ExperimentConfig& cfg);

/// Load or synthesize the datasets a config names. Relative paths are also
/// tried under $DICTNET_DATA.
void load_datasets(const ExperimentConfig& cfg, Dataset& train_set, Dataset& test_set);

/// Build one classify-task network for a strategy combo at a fraction:
/// samples index sets, constructs dictionaries (pretraining stepwise where
/// data-driven kernels need activations), autoencoder-pretrains hidden
/// layers, and appends the never-predicted softmax head.
Network build_cell_network(const ExperimentConfig& cfg,
                           const std::vector<std::string>& per_layer_strategy,
                           double fraction, const Tensor4& train_images,
                           std::size_t n_classes, std::uint64_t cell_seed);

/// Run the whole grid: one CSV row and one checkpoint per cell. Divergence
/// is recorded per cell and the run continues.
RunResult run_experiment(const ExperimentConfig& cfg);

/// Write the features of one checkpoint layer as a plain-text PGM tile
/// grid, one tile per feature, each tile normalized to [0, 255] (flat
/// tiles become mid-gray). Multi-channel features are channel-averaged.
void render_filters(const std::string& checkpoint_path, std::size_t layer_index,
                    const std::string& out_path);

/// Concatenate result CSVs (headers must agree) into one.
void merge_reports(const std::vector<std::string>& csv_paths, const std::string& out_path);

}  // namespace dictnet
