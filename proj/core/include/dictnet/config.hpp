#pragma once

#include <cstdint>
#include <string>
#include <vector>

namespace dictnet {

/// One architecture entry from a `layer = ...` line.
struct LayerSpec {
  enum class Kind { Dense, Conv, MaxPool };
  Kind kind = Kind::Dense;
  std::size_t units = 0;    // dense
  std::size_t filters = 0;  // conv
  std::size_t size = 0;     // conv filter / pool window
  std::size_t stride = 1;
  std::size_t columns = 1;  // J
  double sigma = 1.0;       // SE length scale for this layer
  double lambda = -1.0;     // ridge coefficient; < 0 means the kind default
  std::string strategy;     // fixed strategy when no [sweep] list is given
};

struct DataSpec {
  std::string kind;  // idx | cifar10 | synth_digits | synth_textures
  std::string train_images, train_labels, test_images, test_labels;  // idx
  std::string train_file, test_file;                                 // cifar10
  std::size_t train_count = 0, test_count = 0;  // 0 = use everything (file kinds)
};

struct TrainSpec {
  std::size_t epochs = 10;
  std::size_t batch = 100;
  double lr = 0.1;
  double momentum = 0.9;
  std::size_t pretrain_epochs = 0;
  double pretrain_lr = -1.0;  // < 0 means lr
  bool halve_lr_on_increase = true;
};

struct RicaSpec {
  std::size_t features = 64;
  std::size_t patch = 8;
  std::size_t patches = 40000;
  double sparsity = 0.5;
  double epsilon = 0.01;
  std::size_t pool = 2;
  std::size_t stride = 4;
  std::size_t epochs = 30;
  std::size_t batch = 200;
  double lr = 0.05;
  double momentum = 0.9;
  bool match_budget = true;  // predicted cells get features/fraction features
  std::size_t readout_epochs = 30;
  std::size_t readout_batch = 100;
  double readout_lr = 0.2;
  double sigma = 1.0;
  double lambda = -1.0;
};

/// A fully validated experiment description. Parsing enforces the schema
/// exhaustively (unknown sections or keys are errors) and requires every
/// seed to be explicit.
struct ExperimentConfig {
  std::string id;
  std::string task;  // classify | rica
  std::string output;
  std::uint64_t seed = 0;
  bool save_checkpoints = true;

  DataSpec data;
  std::vector<LayerSpec> layers;  // classify task
  std::size_t classes = 0;        // 0 = take from the dataset

  TrainSpec train;
  std::vector<std::string> strategies;  // combos like "SE-Emp"; empty = from layers
  std::vector<double> fractions;        // empty = {1.0}
  RicaSpec rica;
};

ExperimentConfig parse_config_file(const std::string& path);
ExperimentConfig parse_config_text(const std::string& text, const std::string& origin);

/// Number of strategy slots a combo must provide (dense + conv layers).
std::size_t predictable_layer_count(const ExperimentConfig& cfg);

/// Split a combo like "SE-Emp" into per-layer parts, validating names and
/// arity ("nokernel" and single names broadcast to every layer).
std::vector<std::string> split_strategy_combo(const ExperimentConfig& cfg,
                                              const std::string& combo);

}  // namespace dictnet
