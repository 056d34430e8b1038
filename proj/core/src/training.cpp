#include "dictnet/training.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <string>

#include "dictnet/error.hpp"
#include "dictnet/rng.hpp"

namespace dictnet {

double cross_entropy(const Matrix& probs, const std::vector<int>& labels) {
  if (probs.rows() != labels.size())
    throw ShapeError("cross_entropy: rows != labels");
  double loss = 0.0;
  for (std::size_t i = 0; i < probs.rows(); ++i) {
    const int y = labels[i];
    if (y < 0 || static_cast<std::size_t>(y) >= probs.cols())
      throw IndexError("cross_entropy: label out of range");
    loss -= std::log(std::max(probs(i, static_cast<std::size_t>(y)), 1e-300));
  }
  return loss / static_cast<double>(probs.rows());
}

Matrix cross_entropy_softmax_seed(const Matrix& probs, const std::vector<int>& labels) {
  if (probs.rows() != labels.size())
    throw ShapeError("cross_entropy_softmax_seed: rows != labels");
  Matrix g = probs;
  const double inv = 1.0 / static_cast<double>(probs.rows());
  for (std::size_t i = 0; i < probs.rows(); ++i) {
    g(i, static_cast<std::size_t>(labels[i])) -= 1.0;
    for (std::size_t j = 0; j < probs.cols(); ++j) g(i, j) *= inv;
  }
  return g;
}

std::vector<int> argmax_rows(const Matrix& m) {
  std::vector<int> out(m.rows());
  for (std::size_t i = 0; i < m.rows(); ++i) {
    const double* r = m.row(i);
    std::size_t best = 0;
    for (std::size_t j = 1; j < m.cols(); ++j)
      if (r[j] > r[best]) best = j;
    out[i] = static_cast<int>(best);
  }
  return out;
}

double classification_error(const Matrix& probs, const std::vector<int>& labels) {
  const auto pred = argmax_rows(probs);
  std::size_t wrong = 0;
  for (std::size_t i = 0; i < pred.size(); ++i)
    if (pred[i] != labels[i]) ++wrong;
  return static_cast<double>(wrong) / static_cast<double>(pred.size());
}

SgdOptimizer::SgdOptimizer(std::vector<ParamView> params, double learning_rate,
                           double momentum)
    : params_(std::move(params)), lr_(learning_rate), momentum_(momentum) {
  if (lr_ < 0.0) throw ConfigError("SgdOptimizer: learning rate must be >= 0");
  if (momentum_ < 0.0 || momentum_ >= 1.0)
    throw ConfigError("SgdOptimizer: momentum must be in [0, 1)");
  velocity_.reserve(params_.size());
  for (const auto& p : params_) velocity_.emplace_back(p.n, 0.0);
}

void SgdOptimizer::step() {
  for (std::size_t k = 0; k < params_.size(); ++k) {
    auto& p = params_[k];
    auto& v = velocity_[k];
    for (std::size_t i = 0; i < p.n; ++i) {
      v[i] = momentum_ * v[i] - lr_ * p.grad[i];
      p.value[i] += v[i];
    }
  }
}

namespace {
std::vector<std::size_t> shuffled_indices(std::size_t n, std::uint64_t seed) {
  std::vector<std::size_t> idx(n);
  for (std::size_t i = 0; i < n; ++i) idx[i] = i;
  Rng rng(seed);
  rng.shuffle(idx);
  return idx;
}

std::vector<int> gather_labels(const std::vector<int>& labels,
                               const std::vector<std::size_t>& idx, std::size_t begin,
                               std::size_t count) {
  std::vector<int> out(count);
  for (std::size_t i = 0; i < count; ++i) out[i] = labels[idx[begin + i]];
  return out;
}
}  // namespace

double evaluate_error(Network& net, const Tensor4& images, const std::vector<int>& labels,
                      std::size_t batch_size) {
  if (images.batch() != labels.size())
    throw ShapeError("evaluate_error: image count != label count");
  std::size_t wrong = 0;
  std::vector<std::size_t> idx(batch_size);
  for (std::size_t at = 0; at < images.batch(); at += batch_size) {
    const std::size_t n = std::min(batch_size, images.batch() - at);
    idx.resize(n);
    for (std::size_t i = 0; i < n; ++i) idx[i] = at + i;
    const Matrix probs = net.forward(images.gather(idx));
    const auto pred = argmax_rows(probs);
    for (std::size_t i = 0; i < n; ++i)
      if (pred[i] != labels[at + i]) ++wrong;
  }
  return static_cast<double>(wrong) / static_cast<double>(images.batch());
}

TrainTrace train(Network& net, const Tensor4& train_images,
                 const std::vector<int>& train_labels, const Tensor4* test_images,
                 const std::vector<int>* test_labels, const OptimizerConfig& cfg) {
  if (train_images.batch() != train_labels.size())
    throw ShapeError("train: image count != label count");
  if (cfg.batch_size == 0) throw ConfigError("train: batch size must be >= 1");
  if (net.layers.empty()) throw StateError("train: empty network");
  if (net.layers.back()->activation() != Activation::Softmax)
    throw ConfigError("train: classification training expects a softmax head");

  SgdOptimizer opt(net.params(), cfg.learning_rate, cfg.momentum);
  TrainTrace trace;
  double prev_loss = 0.0;
  const auto t0 = std::chrono::steady_clock::now();

  for (std::size_t epoch = 0; epoch < cfg.epochs; ++epoch) {
    const auto order = shuffled_indices(train_images.batch(),
                                        derive_seed(cfg.seed, 0xe90c + epoch));
    double loss_sum = 0.0;
    std::size_t seen = 0, wrong = 0;

    for (std::size_t at = 0; at < order.size(); at += cfg.batch_size) {
      const std::size_t n = std::min(cfg.batch_size, order.size() - at);
      std::vector<std::size_t> idx(order.begin() + at, order.begin() + at + n);
      const Tensor4 xb = train_images.gather(idx);
      const auto yb = gather_labels(train_labels, order, at, n);

      try {
        const Matrix probs = net.forward(xb);
        const double loss = cross_entropy(probs, yb);
        if (!std::isfinite(loss))
          throw DivergenceError("train: non-finite loss at epoch " + std::to_string(epoch));
        loss_sum += loss * static_cast<double>(n);
        const auto pred = argmax_rows(probs);
        for (std::size_t i = 0; i < n; ++i)
          if (pred[i] != yb[i]) ++wrong;
        seen += n;

        net.zero_grad();
        net.backward(cross_entropy_softmax_seed(probs, yb), /*grad_is_preactivation=*/true);
        opt.step();
      } catch (const NumericError& e) {
        throw DivergenceError("train: " + std::string(e.what()) + " at epoch " +
                              std::to_string(epoch));
      }
    }

    EpochStats st;
    st.epoch = epoch;
    st.train_loss = loss_sum / static_cast<double>(seen);
    st.train_error = static_cast<double>(wrong) / static_cast<double>(seen);
    if (test_images && test_labels)
      st.test_error = evaluate_error(net, *test_images, *test_labels, cfg.batch_size);
    st.wall_seconds =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    trace.push_back(st);

    if (cfg.halve_lr_on_increase && epoch > 0 && st.train_loss > prev_loss)
      opt.set_learning_rate(opt.learning_rate() * 0.5);
    prev_loss = st.train_loss;
  }
  return trace;
}

double pretrain_layer_autoencoder(Layer& layer, const Matrix& inputs,
                                  const PretrainPlan& plan, std::uint64_t layer_seed) {
  if (inputs.rows() == 0) throw DataError("pretrain_layer_autoencoder: no inputs");
  const std::size_t n_v = inputs.cols();
  const std::size_t n_h = layer.output_units();

  // Decoder bias is temporary training state, discarded afterwards.
  std::vector<double> dec_bias(n_v, 0.0), g_dec_bias(n_v, 0.0);
  std::vector<ParamView> params;
  layer.params(params);
  params.push_back({dec_bias.data(), g_dec_bias.data(), n_v});
  SgdOptimizer opt(params, plan.learning_rate, plan.momentum);

  double epoch_loss = 0.0;
  for (std::size_t epoch = 0; epoch < plan.epochs; ++epoch) {
    const auto order =
        shuffled_indices(inputs.rows(), derive_seed(layer_seed, 0xae00 + epoch));
    double loss_sum = 0.0;

    for (std::size_t at = 0; at < order.size(); at += plan.batch_size) {
      const std::size_t n = std::min(plan.batch_size, order.size() - at);
      std::vector<std::size_t> idx(order.begin() + at, order.begin() + at + n);
      const Matrix xb = inputs.gather_rows(idx);
      try {
        const Matrix w = layer.effective_weights();  // refreshed every step
        const Matrix h = as_matrix(layer.forward(xb));
        if (h.cols() != n_h) throw ShapeError("pretrain: unexpected hidden width");

        Matrix err = matmul_nt(h, w);  // reconstruction h W^T + c
        for (std::size_t i = 0; i < err.rows(); ++i)
          for (std::size_t j = 0; j < n_v; ++j) err(i, j) += dec_bias[j] - xb(i, j);

        double loss = 0.0;
        for (const double v : err.raw()) loss += v * v;
        loss /= static_cast<double>(n);
        if (!std::isfinite(loss))
          throw DivergenceError("pretrain: non-finite reconstruction loss at epoch " +
                                std::to_string(epoch));
        loss_sum += loss * static_cast<double>(n);

        scale_in_place(err, 2.0 / static_cast<double>(n));  // dL/d(reconstruction)
        layer.zero_grad();
        std::fill(g_dec_bias.begin(), g_dec_bias.end(), 0.0);
        // Decoder contributions: through W^T and the decoder bias.
        layer.accumulate_weight_grad(matmul_tn(err, h));
        for (std::size_t i = 0; i < err.rows(); ++i)
          for (std::size_t j = 0; j < n_v; ++j) g_dec_bias[j] += err(i, j);
        // Encoder contributions via the layer's own backward.
        layer.backward(Signal(matmul(err, w)), /*grad_is_preactivation=*/false);
        opt.step();
      } catch (const NumericError& e) {
        throw DivergenceError("pretrain: " + std::string(e.what()) + " at epoch " +
                              std::to_string(epoch));
      }
    }
    epoch_loss = loss_sum / static_cast<double>(order.size());
  }
  return epoch_loss;
}

namespace {
bool dense_kind(const Layer& l) {
  return l.kind() == "dense" || l.kind() == "pdense";
}

bool has_trainable_dictionary(const Layer& l) {
  if (const auto* p = dynamic_cast<const PredictedDenseLayer*>(&l)) {
    for (const auto& col : p->columns)
      if (col.dict.trainable) return true;
  }
  if (const auto* p = dynamic_cast<const PredictedConvLayer*>(&l))
    return p->dict.trainable;
  return false;
}
}  // namespace

PretrainResult pretrain_stack(Network& net, const Tensor4& data, const PretrainPlan& plan) {
  PretrainResult result;
  result.layer_inputs.resize(net.layers.size());
  result.reconstruction_loss.assign(net.layers.size(), -1.0);

  Signal s = data;
  for (std::size_t i = 0; i < net.layers.size(); ++i) {
    Layer& layer = *net.layers[i];
    if (const auto* m = std::get_if<Matrix>(&s)) result.layer_inputs[i] = *m;

    const bool hidden = i + 1 < net.layers.size();
    if (hidden && plan.epochs > 0 && dense_kind(layer) && !has_trainable_dictionary(layer)) {
      try {
        result.reconstruction_loss[i] = pretrain_layer_autoencoder(
            layer, as_matrix(s), plan, derive_seed(plan.seed, 0x5741 + i));
      } catch (const DivergenceError& e) {
        throw DivergenceError(std::string(e.what()) + " (layer " + std::to_string(i) + ")");
      }
    }
    s = layer.forward(s);
  }
  return result;
}

double grad_check(Network& net, const Signal& probe, const std::vector<int>& labels,
                  double step) {
  net.zero_grad();
  Matrix probs = net.forward(probe);
  net.backward(cross_entropy_softmax_seed(probs, labels), true);

  auto params = net.params();
  std::vector<std::vector<double>> analytic;
  analytic.reserve(params.size());
  for (const auto& p : params)
    analytic.emplace_back(p.grad, p.grad + p.n);

  const auto loss_at = [&]() {
    return cross_entropy(net.forward(probe), labels);
  };

  double worst = 0.0;
  for (std::size_t k = 0; k < params.size(); ++k) {
    auto& p = params[k];
    for (std::size_t i = 0; i < p.n; ++i) {
      const double orig = p.value[i];
      p.value[i] = orig + step;
      const double lp = loss_at();
      p.value[i] = orig - step;
      const double lm = loss_at();
      p.value[i] = orig;
      const double numeric = (lp - lm) / (2.0 * step);
      const double a = analytic[k][i];
      // Relative for large entries, absolute for small ones; a plain
      // relative quotient on near-zero entries only measures roundoff in
      // the differenced losses.
      const double rel = std::abs(a - numeric) / std::max({1.0, std::abs(a), std::abs(numeric)});
      worst = std::max(worst, rel);
    }
  }
  return worst;
}

}  // namespace dictnet
