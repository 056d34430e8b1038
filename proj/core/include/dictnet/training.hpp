#pragma once

#include <cstdint>
#include <vector>

#include "dictnet/layer.hpp"

namespace dictnet {

struct OptimizerConfig {
  double learning_rate = 0.1;   // > 0 (0 is accepted and leaves params fixed)
  double momentum = 0.9;        // [0, 1)
  std::size_t batch_size = 100; // >= 1
  std::size_t epochs = 10;
  std::uint64_t seed = 0;
  /// Halve the learning rate whenever the epoch-end training loss rose.
  bool halve_lr_on_increase = true;
};

struct PretrainPlan {
  std::size_t epochs = 0;  // 0 disables pretraining
  double learning_rate = 0.1;
  double momentum = 0.9;
  std::size_t batch_size = 100;
  std::uint64_t seed = 0;
};

struct EpochStats {
  std::size_t epoch = 0;
  double train_loss = 0.0;
  double train_error = 0.0;
  double test_error = -1.0;  // -1 when no test set was given
  double wall_seconds = 0.0;
};
using TrainTrace = std::vector<EpochStats>;

/// Mean negative log-likelihood of the labels under row-wise probabilities.
double cross_entropy(const Matrix& probs, const std::vector<int>& labels);

/// Gradient of cross-entropy w.r.t. the softmax *pre-activations*:
/// (p - onehot(y)) / batch. Feed to Network::backward with
/// grad_is_preactivation = true.
Matrix cross_entropy_softmax_seed(const Matrix& probs, const std::vector<int>& labels);

std::vector<int> argmax_rows(const Matrix& m);
double classification_error(const Matrix& probs, const std::vector<int>& labels);

/// Plain SGD with momentum over parameter views.
class SgdOptimizer {
 public:
  SgdOptimizer(std::vector<ParamView> params, double learning_rate, double momentum);

  void step();
  void set_learning_rate(double lr) { lr_ = lr; }
  double learning_rate() const { return lr_; }

 private:
  std::vector<ParamView> params_;
  std::vector<std::vector<double>> velocity_;
  double lr_, momentum_;
};

/// Mini-batch SGD with cross-entropy loss on a softmax head. Updates only
/// dynamic parameters; deterministic given cfg.seed. Throws DivergenceError
/// on a non-finite loss. The train error is the running error over the
/// epoch's forward passes; the test error is a full pass when a test set is
/// given.
TrainTrace train(Network& net, const Tensor4& train_images,
                 const std::vector<int>& train_labels, const Tensor4* test_images,
                 const std::vector<int>* test_labels, const OptimizerConfig& cfg);

double evaluate_error(Network& net, const Tensor4& images, const std::vector<int>& labels,
                      std::size_t batch_size);

/// Greedy tied-weight autoencoder pretraining.
///
/// Walks the network input to output; every dense-kind hidden layer (all
/// but the last layer) is trained as a tied autoencoder on its input
/// activations with squared reconstruction error, then the activations
/// advance through it. Conv/pool/flatten layers and layers with trainable
/// (LowRank) dictionaries pass activations through untrained. Dictionaries
/// and kernels built before this phase stay frozen.
struct PretrainResult {
  /// layer_inputs[i] is the dense input batch seen by layer i; empty
  /// (0 x 0) when that layer consumes an image batch. These are the
  /// activation traces empirical kernels are built from.
  std::vector<Matrix> layer_inputs;
  /// Final reconstruction loss per pretrained layer (-1 for skipped ones).
  std::vector<double> reconstruction_loss;
};
PretrainResult pretrain_stack(Network& net, const Tensor4& data, const PretrainPlan& plan);

/// One layer's tied-autoencoder training on explicit inputs; returns the
/// last epoch's mean reconstruction loss (squared error, per sample).
double pretrain_layer_autoencoder(Layer& layer, const Matrix& inputs,
                                  const PretrainPlan& plan, std::uint64_t layer_seed);

/// Central-difference check of every dynamic parameter against backprop on
/// a small probe batch. Returns the worst relative error.
double grad_check(Network& net, const Signal& probe, const std::vector<int>& labels,
                  double step = 1e-6);

}  // namespace dictnet
