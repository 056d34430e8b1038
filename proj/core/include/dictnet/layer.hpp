#pragma once

#include <memory>
#include <string>
#include <variant>
#include <vector>

#include "dictnet/dictionary.hpp"
#include "dictnet/matrix.hpp"
#include "dictnet/tensor.hpp"

namespace dictnet {

enum class Activation { Linear, Sigmoid, Softmax };

Activation parse_activation(const std::string& name);
std::string activation_name(Activation a);

/// Apply the activation to a batch of pre-activations (rows = samples).
void activate_in_place(Activation act, Matrix& z);
/// Pre-activation gradient from the output gradient and the cached outputs.
Matrix activation_backward(Activation act, const Matrix& grad_out, const Matrix& out);

/// What flows between layers: dense batches or image batches.
using Signal = std::variant<Matrix, Tensor4>;

const Matrix& as_matrix(const Signal& s);
const Tensor4& as_tensor(const Signal& s);

/// Mutable view of one dynamic parameter block and its gradient.
struct ParamView {
  double* value = nullptr;
  double* grad = nullptr;
  std::size_t n = 0;
};

struct LayerCounts {
  std::size_t dynamic = 0;      // learned during training
  std::size_t static_count = 0; // computed once, then frozen (dictionary entries)
  std::size_t full_equiv = 0;   // unfactored n_v*n_h + biases equivalent
};

/// Which order a predicted layer evaluates in. Pooled computes v U_alpha
/// first; Materialized forms U_alpha W_alpha and proceeds like an ordinary
/// layer. Both compute the same function (to roundoff); Auto picks the
/// cheaper one by flop count.
enum class ComputeOrder { Auto, Pooled, Materialized };

class Layer {
 public:
  virtual ~Layer() = default;

  /// Runs the layer and caches whatever backward needs.
  virtual Signal forward(const Signal& in) = 0;

  /// Backpropagate. `upstream` is the gradient w.r.t. this layer's output;
  /// with grad_is_preactivation it is already w.r.t. the pre-activation
  /// (used to fuse softmax with cross-entropy). Parameter gradients
  /// accumulate, so call zero_grad() between steps. Returns the input
  /// gradient. Throws StateError if no forward pass is cached.
  virtual Signal backward(const Signal& upstream, bool grad_is_preactivation = false) = 0;

  virtual void zero_grad() = 0;
  /// Appends views of all dynamic parameters (never fixed dictionaries).
  virtual void params(std::vector<ParamView>& out) = 0;
  virtual LayerCounts counts() const = 0;
  virtual std::string kind() const = 0;
  virtual std::size_t output_units() const = 0;

  // Dense-kind hooks used by autoencoder pretraining; other layers refuse.
  virtual Matrix effective_weights() const;
  virtual void accumulate_weight_grad(const Matrix& g_w_eff);
  virtual std::vector<double>* bias_grad();
  virtual Activation activation() const;
};

/// Ordinary fully connected layer (the "nokernel" baseline).
class DenseLayer : public Layer {
 public:
  DenseLayer(std::size_t n_in, std::size_t n_out, Activation act, std::uint64_t seed);
  DenseLayer(Matrix w, std::vector<double> bias, Activation act);

  Signal forward(const Signal& in) override;
  Signal backward(const Signal& upstream, bool grad_is_preactivation) override;
  void zero_grad() override;
  void params(std::vector<ParamView>& out) override;
  LayerCounts counts() const override;
  std::string kind() const override { return "dense"; }
  std::size_t output_units() const override { return w.cols(); }

  Matrix effective_weights() const override { return w; }
  void accumulate_weight_grad(const Matrix& g_w_eff) override;
  std::vector<double>* bias_grad() override { return &gbias; }
  Activation activation() const override { return act; }

  Matrix w, gw;
  std::vector<double> bias, gbias;
  Activation act;

 private:
  Matrix in_, out_;
  bool cached_ = false;
};

/// One column of a predicted layer: a fixed dictionary plus its learned
/// coefficients feeding `units` hidden units.
struct PredictedColumn {
  BuiltDictionary dict;
  Matrix w_alpha, gw_alpha;  // n_alpha x units
  Matrix gu;                 // allocated only when dict.trainable
  std::size_t units = 0;
};

/// Fully connected layer whose weights are ⟦U_1 W_1, ..., U_J W_J⟧ with the
/// U_j fixed (except LowRank) and only the W_j and biases learned.
class PredictedDenseLayer : public Layer {
 public:
  PredictedDenseLayer(std::vector<BuiltDictionary> dicts, std::size_t total_units,
                      Activation act, std::uint64_t seed);
  PredictedDenseLayer(std::vector<PredictedColumn> columns, std::vector<double> bias,
                      Activation act);

  Signal forward(const Signal& in) override;
  Signal backward(const Signal& upstream, bool grad_is_preactivation) override;
  void zero_grad() override;
  void params(std::vector<ParamView>& out) override;
  LayerCounts counts() const override;
  std::string kind() const override { return "pdense"; }
  std::size_t output_units() const override;

  Matrix effective_weights() const override;
  void accumulate_weight_grad(const Matrix& g_w_eff) override;
  std::vector<double>* bias_grad() override { return &gbias; }
  Activation activation() const override { return act; }

  /// Hidden units per column: an even split with the remainder going to
  /// the first columns.
  static std::size_t units_for_column(std::size_t total, std::size_t j_count,
                                      std::size_t j);

  std::vector<PredictedColumn> columns;
  std::vector<double> bias, gbias;
  Activation act;
  ComputeOrder order = ComputeOrder::Auto;

 private:
  bool pick_materialized(std::size_t batch) const;

  Matrix in_, out_, w_eff_;
  std::vector<Matrix> pooled_;
  bool used_materialized_ = false;
  bool cached_ = false;
};

/// Ordinary valid-mode convolution layer with a learned filter bank.
class ConvLayer : public Layer {
 public:
  ConvLayer(std::size_t fh, std::size_t fw, std::size_t cin, std::size_t n_filters,
            std::size_t stride, Activation act, std::uint64_t seed);
  ConvLayer(Matrix bank, std::size_t fh, std::size_t fw, std::size_t cin,
            std::size_t stride, std::vector<double> bias, Activation act);

  Signal forward(const Signal& in) override;
  Signal backward(const Signal& upstream, bool grad_is_preactivation) override;
  void zero_grad() override;
  void params(std::vector<ParamView>& out) override;
  LayerCounts counts() const override;
  std::string kind() const override { return "conv"; }
  std::size_t output_units() const override { return bank.cols(); }

  Matrix bank, gbank;  // (fh*fw*cin) x n_filters
  std::size_t fh, fw, cin, stride;
  std::vector<double> bias, gbias;
  Activation act;

 private:
  Matrix cols_, out2d_;
  std::size_t in_h_ = 0, in_w_ = 0, in_b_ = 0;
  bool cached_ = false;
};

/// Convolution layer whose filter bank is U_alpha w_alpha over the filter
/// weight space: the input is either convolved with the fixed dictionary
/// filters first (pooled order) or with the materialized bank.
class PredictedConvLayer : public Layer {
 public:
  PredictedConvLayer(BuiltDictionary dict, std::size_t n_filters, std::size_t stride,
                     Activation act, std::uint64_t seed);
  PredictedConvLayer(BuiltDictionary dict, Matrix w_alpha, std::size_t stride,
                     std::vector<double> bias, Activation act);

  Signal forward(const Signal& in) override;
  Signal backward(const Signal& upstream, bool grad_is_preactivation) override;
  void zero_grad() override;
  void params(std::vector<ParamView>& out) override;
  LayerCounts counts() const override;
  std::string kind() const override { return "pconv"; }
  std::size_t output_units() const override { return w_alpha.cols(); }

  /// The materialized filter bank U_alpha w_alpha.
  Matrix effective_bank() const;

  BuiltDictionary dict;
  Matrix w_alpha, gw_alpha;  // n_alpha x n_filters
  Matrix gu;                 // trainable dictionaries only
  std::size_t fh = 0, fw = 0, cin = 0, stride = 1;
  std::vector<double> bias, gbias;
  Activation act;
  ComputeOrder order = ComputeOrder::Auto;

 private:
  Matrix cols_, pooled_, bank_, out2d_;
  std::size_t in_h_ = 0, in_w_ = 0, in_b_ = 0;
  bool used_materialized_ = false;
  bool cached_ = false;
};

/// Non-overlapping-or-strided max pooling over the spatial axes.
class MaxPoolLayer : public Layer {
 public:
  MaxPoolLayer(std::size_t size, std::size_t stride);

  Signal forward(const Signal& in) override;
  Signal backward(const Signal& upstream, bool grad_is_preactivation) override;
  void zero_grad() override {}
  void params(std::vector<ParamView>&) override {}
  LayerCounts counts() const override { return {}; }
  std::string kind() const override { return "maxpool"; }
  std::size_t output_units() const override { return 0; }

  std::size_t size, stride;

 private:
  std::vector<std::size_t> argmax_;
  std::size_t in_b_ = 0, in_h_ = 0, in_w_ = 0, in_c_ = 0, out_h_ = 0, out_w_ = 0;
  bool cached_ = false;
};

/// Reshapes image batches to dense batches (and back for gradients).
class FlattenLayer : public Layer {
 public:
  Signal forward(const Signal& in) override;
  Signal backward(const Signal& upstream, bool grad_is_preactivation) override;
  void zero_grad() override {}
  void params(std::vector<ParamView>&) override {}
  LayerCounts counts() const override { return {}; }
  std::string kind() const override { return "flatten"; }
  std::size_t output_units() const override { return 0; }

 private:
  std::size_t h_ = 0, w_ = 0, c_ = 0;
  bool cached_ = false;
};

/// An ordered stack of layers ending in a dense classifier/regressor.
struct Network {
  std::vector<std::unique_ptr<Layer>> layers;

  Matrix forward(const Signal& in);
  /// Backward from the output gradient (see Layer::backward for the flag).
  void backward(const Matrix& grad_out, bool grad_is_preactivation);
  void zero_grad();
  std::vector<ParamView> params();
};

}  // namespace dictnet
