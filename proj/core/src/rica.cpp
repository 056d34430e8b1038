#include "dictnet/rica.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "dictnet/error.hpp"
#include "dictnet/layer.hpp"
#include "dictnet/rng.hpp"

namespace dictnet {

RicaModel RicaModel::full(std::size_t n_v, std::size_t n_h, double sparsity,
                          double epsilon, std::uint64_t seed) {
  if (sparsity < 0.0 || !(epsilon > 0.0))
    throw ConfigError("RicaModel: sparsity must be >= 0 and epsilon > 0");
  RicaModel m;
  m.sparsity = sparsity;
  m.epsilon = epsilon;
  m.w = Matrix(n_v, n_h);
  Rng rng(derive_seed(seed, 0x52494341ULL));
  const double scale = 1.0 / std::sqrt(static_cast<double>(n_v));
  for (double& v : m.w.raw()) v = rng.normal(0.0, scale);
  return m;
}

RicaModel RicaModel::with_dictionary(BuiltDictionary dict, std::size_t n_h,
                                     double sparsity, double epsilon, std::uint64_t seed) {
  if (sparsity < 0.0 || !(epsilon > 0.0))
    throw ConfigError("RicaModel: sparsity must be >= 0 and epsilon > 0");
  RicaModel m;
  m.predicted = true;
  m.sparsity = sparsity;
  m.epsilon = epsilon;
  const std::size_t n_a = dict.n_alpha();
  m.dict = std::move(dict);
  m.w_alpha = Matrix(n_a, n_h);
  Rng rng(derive_seed(seed, 0x52494342ULL));
  const double scale = 1.0 / std::sqrt(static_cast<double>(n_a));
  for (double& v : m.w_alpha.raw()) v = rng.normal(0.0, scale);
  return m;
}

Matrix RicaModel::effective_features() const {
  return predicted ? predict_weights(dict, w_alpha) : w;
}

RicaObjective rica_objective(const RicaModel& model, const Matrix& patches,
                             ComputeOrder order) {
  if (patches.cols() != model.n_v())
    throw ShapeError("rica_objective: patch width " + std::to_string(patches.cols()) +
                     " != n_v " + std::to_string(model.n_v()));
  if (patches.rows() == 0) throw DataError("rica_objective: no patches");
  const double n = static_cast<double>(patches.rows());

  Matrix h, recon;
  Matrix w_eff;  // materialized lazily
  const bool pooled = model.predicted && (order == ComputeOrder::Pooled);
  if (pooled) {
    const Matrix xu = matmul(patches, model.dict.u);
    h = matmul(xu, model.w_alpha);
    recon = matmul_nt(matmul_nt(h, model.w_alpha), model.dict.u);
  } else {
    w_eff = model.effective_features();
    h = matmul(patches, w_eff);
    recon = matmul_nt(h, w_eff);
  }

  Matrix err = recon;
  sub_in_place(err, patches);

  RicaObjective out;
  double recon_loss = 0.0;
  for (const double v : err.raw()) recon_loss += v * v;
  double sparse_loss = 0.0;
  const double eps2 = model.epsilon * model.epsilon;
  for (const double z : h.raw())
    sparse_loss += std::sqrt(z * z + eps2) - model.epsilon;
  out.loss = (recon_loss + model.sparsity * sparse_loss) / n;
  if (!std::isfinite(out.loss)) throw DivergenceError("rica_objective: non-finite loss");

  // Gradient through the materialized features:
  //   dL/dW = (2/n) E^T H + X^T [ (2/n) E W + (s/n) phi'(H) ].
  if (w_eff.size() == 0) w_eff = model.effective_features();
  Matrix gh = matmul(err, w_eff);
  scale_in_place(gh, 2.0 / n);
  const double s_over_n = model.sparsity / n;
  for (std::size_t i = 0; i < gh.size(); ++i) {
    const double z = h.raw()[i];
    gh.raw()[i] += s_over_n * z / std::sqrt(z * z + eps2);
  }
  Matrix gw = matmul_tn(err, h);
  scale_in_place(gw, 2.0 / n);
  add_in_place(gw, matmul_tn(patches, gh));

  out.grad = model.predicted ? matmul_tn(model.dict.u, gw) : std::move(gw);
  return out;
}

std::vector<double> train_rica(RicaModel& model, const Matrix& patches,
                               const OptimizerConfig& cfg) {
  if (cfg.batch_size == 0) throw ConfigError("train_rica: batch size must be >= 1");
  Matrix& params = model.predicted ? model.w_alpha : model.w;
  Matrix grad_buf(params.rows(), params.cols());
  SgdOptimizer opt({{params.data(), grad_buf.data(), params.size()}}, cfg.learning_rate,
                   cfg.momentum);

  std::vector<double> trace;
  double prev = 0.0;
  for (std::size_t epoch = 0; epoch < cfg.epochs; ++epoch) {
    std::vector<std::size_t> order(patches.rows());
    for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
    Rng rng(derive_seed(cfg.seed, 0x41c0 + epoch));
    rng.shuffle(order);

    double loss_sum = 0.0;
    for (std::size_t at = 0; at < order.size(); at += cfg.batch_size) {
      const std::size_t nb = std::min(cfg.batch_size, order.size() - at);
      std::vector<std::size_t> idx(order.begin() + at, order.begin() + at + nb);
      const Matrix xb = patches.gather_rows(idx);
      try {
        RicaObjective obj = rica_objective(model, xb);
        loss_sum += obj.loss * static_cast<double>(nb);
        // Copy in place: the optimizer holds pointers into grad_buf.
        std::copy(obj.grad.raw().begin(), obj.grad.raw().end(), grad_buf.raw().begin());
        opt.step();
      } catch (const NumericError& e) {
        throw DivergenceError("train_rica: " + std::string(e.what()) + " at epoch " +
                              std::to_string(epoch));
      }
    }
    const double epoch_loss = loss_sum / static_cast<double>(order.size());
    if (!std::isfinite(epoch_loss))
      throw DivergenceError("train_rica: non-finite loss at epoch " + std::to_string(epoch));
    trace.push_back(epoch_loss);
    if (cfg.halve_lr_on_increase && epoch > 0 && epoch_loss > prev)
      opt.set_learning_rate(opt.learning_rate() * 0.5);
    prev = epoch_loss;
  }
  return trace;
}

void remove_patch_means(Matrix& patches) {
  for (std::size_t i = 0; i < patches.rows(); ++i) {
    double* r = patches.row(i);
    double mean = 0.0;
    for (std::size_t j = 0; j < patches.cols(); ++j) mean += r[j];
    mean /= static_cast<double>(patches.cols());
    for (std::size_t j = 0; j < patches.cols(); ++j) r[j] -= mean;
  }
}

Whitener fit_zca(const Matrix& patches, double reg) {
  if (patches.rows() < 2) throw DataError("fit_zca: need >= 2 patches");
  const std::size_t d = patches.cols();
  Whitener w;
  w.mean.assign(d, 0.0);
  for (std::size_t i = 0; i < patches.rows(); ++i)
    for (std::size_t j = 0; j < d; ++j) w.mean[j] += patches(i, j);
  for (double& m : w.mean) m /= static_cast<double>(patches.rows());

  Matrix centered = patches;
  for (std::size_t i = 0; i < centered.rows(); ++i)
    for (std::size_t j = 0; j < d; ++j) centered(i, j) -= w.mean[j];
  Matrix c = matmul_tn(centered, centered);
  scale_in_place(c, 1.0 / static_cast<double>(patches.rows()));
  for (std::size_t i = 0; i < d; ++i)
    for (std::size_t j = i + 1; j < d; ++j) c(j, i) = c(i, j);

  const SymmetricEigen eig = symmetric_eigen(c);
  // zca = V diag((lambda + reg)^(-1/2)) V^T
  Matrix scaled = eig.vectors;  // columns scaled by the inverse square roots
  for (std::size_t k = 0; k < d; ++k) {
    const double s = 1.0 / std::sqrt(std::max(eig.values[k], 0.0) + reg);
    for (std::size_t i = 0; i < d; ++i) scaled(i, k) *= s;
  }
  w.zca = matmul_nt(scaled, eig.vectors);
  return w;
}

Matrix whiten(const Whitener& w, const Matrix& patches) {
  if (patches.cols() != w.mean.size()) throw ShapeError("whiten: dimension mismatch");
  Matrix centered = patches;
  for (std::size_t i = 0; i < centered.rows(); ++i)
    for (std::size_t j = 0; j < centered.cols(); ++j) centered(i, j) -= w.mean[j];
  return matmul(centered, w.zca);  // zca is symmetric
}

namespace {
// Pooled |x W| features for one image set: for every image, encode all
// patches on the stride grid and average |h| within pool x pool cells.
Matrix pooled_features(const RicaModel& model, const Whitener* whitener,
                       const Tensor4& images, std::size_t patch, std::size_t stride,
                       std::size_t pool) {
  const std::size_t gy = (images.height() - patch) / stride + 1;
  const std::size_t gx = (images.width() - patch) / stride + 1;
  if (pool > gy || pool > gx)
    throw ConfigError("rica_classify: pool grid exceeds the patch grid");
  const Matrix w_eff = model.effective_features();
  const std::size_t n_h = w_eff.cols();
  Matrix features(images.batch(), pool * pool * n_h);

  // Process images in modest batches to bound the patch matrix size.
  const std::size_t image_block = 64;
  std::vector<std::size_t> idx;
  for (std::size_t at = 0; at < images.batch(); at += image_block) {
    const std::size_t nb = std::min(image_block, images.batch() - at);
    idx.resize(nb);
    for (std::size_t i = 0; i < nb; ++i) idx[i] = at + i;
    Matrix patches = im2col(images.gather(idx), patch, patch, stride);
    remove_patch_means(patches);
    if (whitener) patches = whiten(*whitener, patches);
    const Matrix h = matmul(patches, w_eff);  // rows ordered (image, gy, gx)

    for (std::size_t b = 0; b < nb; ++b) {
      double* frow = features.row(at + b);
      std::vector<std::size_t> cell_count(pool * pool, 0);
      for (std::size_t y = 0; y < gy; ++y)
        for (std::size_t x = 0; x < gx; ++x) {
          const std::size_t cy = y * pool / gy;
          const std::size_t cx = x * pool / gx;
          const std::size_t cell = cy * pool + cx;
          ++cell_count[cell];
          const double* hr = h.row((b * gy + y) * gx + x);
          double* dst = frow + cell * n_h;
          for (std::size_t k = 0; k < n_h; ++k) dst[k] += std::abs(hr[k]);
        }
      for (std::size_t cell = 0; cell < pool * pool; ++cell) {
        const double inv = 1.0 / static_cast<double>(cell_count[cell]);
        for (std::size_t k = 0; k < n_h; ++k) frow[cell * n_h + k] *= inv;
      }
    }
  }
  return features;
}
}  // namespace

double rica_classify(const RicaModel& model, const Whitener* whitener,
                     const Dataset& train_set, const Dataset& test_set, std::size_t patch,
                     std::size_t patch_stride, std::size_t pool_grid,
                     const OptimizerConfig& readout_cfg) {
  const Matrix train_f =
      pooled_features(model, whitener, train_set.images, patch, patch_stride, pool_grid);
  const Matrix test_f =
      pooled_features(model, whitener, test_set.images, patch, patch_stride, pool_grid);

  Network readout;
  readout.layers.push_back(std::make_unique<FlattenLayer>());
  readout.layers.push_back(std::make_unique<DenseLayer>(
      train_f.cols(), train_set.n_classes, Activation::Softmax, readout_cfg.seed));

  const Tensor4 train_t = Tensor4::from_matrix(train_f, 1, 1, train_f.cols());
  const Tensor4 test_t = Tensor4::from_matrix(test_f, 1, 1, test_f.cols());
  train(readout, train_t, train_set.labels, nullptr, nullptr, readout_cfg);
  return 1.0 - evaluate_error(readout, test_t, test_set.labels, readout_cfg.batch_size);
}

}  // namespace dictnet
