#include "dictnet/layer.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "dictnet/error.hpp"
#include "dictnet/rng.hpp"

namespace dictnet {

Activation parse_activation(const std::string& name) {
  if (name == "linear") return Activation::Linear;
  if (name == "sigmoid") return Activation::Sigmoid;
  if (name == "softmax") return Activation::Softmax;
  throw ConfigError("unknown activation '" + name + "'");
}

std::string activation_name(Activation a) {
  switch (a) {
    case Activation::Linear: return "linear";
    case Activation::Sigmoid: return "sigmoid";
    case Activation::Softmax: return "softmax";
  }
  return "?";
}

namespace {
inline double sigmoid(double z) {
  if (z >= 0.0) return 1.0 / (1.0 + std::exp(-z));
  const double e = std::exp(z);
  return e / (1.0 + e);
}
}  // namespace

void activate_in_place(Activation act, Matrix& z) {
  switch (act) {
    case Activation::Linear:
      return;
    case Activation::Sigmoid:
      for (double& v : z.raw()) v = sigmoid(v);
      return;
    case Activation::Softmax:
      for (std::size_t i = 0; i < z.rows(); ++i) {
        double* r = z.row(i);
        double mx = r[0];
        for (std::size_t j = 1; j < z.cols(); ++j) mx = std::max(mx, r[j]);
        double sum = 0.0;
        for (std::size_t j = 0; j < z.cols(); ++j) {
          r[j] = std::exp(r[j] - mx);
          sum += r[j];
        }
        const double inv = 1.0 / sum;
        for (std::size_t j = 0; j < z.cols(); ++j) r[j] *= inv;
      }
      return;
  }
}

Matrix activation_backward(Activation act, const Matrix& grad_out, const Matrix& out) {
  if (grad_out.rows() != out.rows() || grad_out.cols() != out.cols())
    throw ShapeError("activation_backward: gradient shape mismatch");
  Matrix gz = grad_out;
  switch (act) {
    case Activation::Linear:
      return gz;
    case Activation::Sigmoid: {
      for (std::size_t i = 0; i < gz.size(); ++i) {
        const double y = out.data()[i];
        gz.data()[i] *= y * (1.0 - y);
      }
      return gz;
    }
    case Activation::Softmax: {
      for (std::size_t i = 0; i < gz.rows(); ++i) {
        const double* y = out.row(i);
        double* g = gz.row(i);
        double dot = 0.0;
        for (std::size_t j = 0; j < gz.cols(); ++j) dot += g[j] * y[j];
        for (std::size_t j = 0; j < gz.cols(); ++j) g[j] = y[j] * (g[j] - dot);
      }
      return gz;
    }
  }
  throw Error("activation_backward: unreachable");
}

const Matrix& as_matrix(const Signal& s) {
  if (const auto* m = std::get_if<Matrix>(&s)) return *m;
  throw ShapeError("expected a dense batch, got an image batch");
}

const Tensor4& as_tensor(const Signal& s) {
  if (const auto* t = std::get_if<Tensor4>(&s)) return *t;
  throw ShapeError("expected an image batch, got a dense batch");
}

Matrix Layer::effective_weights() const {
  throw StateError("layer '" + kind() + "' has no dense weight view");
}
void Layer::accumulate_weight_grad(const Matrix&) {
  throw StateError("layer '" + kind() + "' has no dense weight view");
}
std::vector<double>* Layer::bias_grad() {
  throw StateError("layer '" + kind() + "' has no bias");
}
Activation Layer::activation() const { return Activation::Linear; }

namespace {
void add_bias_rows(Matrix& z, const std::vector<double>& bias) {
  if (z.cols() != bias.size()) throw ShapeError("bias length does not match units");
  for (std::size_t i = 0; i < z.rows(); ++i) {
    double* r = z.row(i);
    for (std::size_t j = 0; j < z.cols(); ++j) r[j] += bias[j];
  }
}

void accumulate_column_sums(const Matrix& g, std::vector<double>& out) {
  for (std::size_t i = 0; i < g.rows(); ++i) {
    const double* r = g.row(i);
    for (std::size_t j = 0; j < g.cols(); ++j) out[j] += r[j];
  }
}

Matrix gaussian_matrix(std::size_t rows, std::size_t cols, double scale, Rng& rng) {
  Matrix m(rows, cols);
  for (double& v : m.raw()) v = rng.normal(0.0, scale);
  return m;
}

// Copy src into columns [begin, begin + src.cols()) of dst.
void place_cols(Matrix& dst, const Matrix& src, std::size_t begin) {
  for (std::size_t i = 0; i < src.rows(); ++i)
    std::copy(src.row(i), src.row(i) + src.cols(), dst.row(i) + begin);
}
}  // namespace

// ---------------------------------------------------------------------------
// DenseLayer

DenseLayer::DenseLayer(std::size_t n_in, std::size_t n_out, Activation act,
                       std::uint64_t seed)
    : act(act) {
  Rng rng(derive_seed(seed, 0x64656e7365ULL));
  w = gaussian_matrix(n_in, n_out, 1.0 / std::sqrt(static_cast<double>(n_in)), rng);
  gw = Matrix(n_in, n_out);
  bias.assign(n_out, 0.0);
  gbias.assign(n_out, 0.0);
}

DenseLayer::DenseLayer(Matrix w_, std::vector<double> bias_, Activation act_)
    : w(std::move(w_)), bias(std::move(bias_)), act(act_) {
  if (bias.size() != w.cols()) throw ShapeError("DenseLayer: bias length != units");
  gw = Matrix(w.rows(), w.cols());
  gbias.assign(bias.size(), 0.0);
}

Signal DenseLayer::forward(const Signal& in) {
  const Matrix& x = as_matrix(in);
  if (x.cols() != w.rows())
    throw ShapeError("DenseLayer: input width " + std::to_string(x.cols()) +
                     " != " + std::to_string(w.rows()));
  in_ = x;
  Matrix z = matmul(x, w);
  add_bias_rows(z, bias);
  activate_in_place(act, z);
  out_ = std::move(z);
  cached_ = true;
  return out_;
}

Signal DenseLayer::backward(const Signal& upstream, bool grad_is_preactivation) {
  if (!cached_) throw StateError("DenseLayer::backward before forward");
  const Matrix& g = as_matrix(upstream);
  const Matrix gz = grad_is_preactivation ? g : activation_backward(act, g, out_);
  add_in_place(gw, matmul_tn(in_, gz));
  accumulate_column_sums(gz, gbias);
  return matmul_nt(gz, w);
}

void DenseLayer::zero_grad() {
  gw.fill(0.0);
  std::fill(gbias.begin(), gbias.end(), 0.0);
}

void DenseLayer::params(std::vector<ParamView>& out) {
  out.push_back({w.data(), gw.data(), w.size()});
  out.push_back({bias.data(), gbias.data(), bias.size()});
}

LayerCounts DenseLayer::counts() const {
  LayerCounts c;
  c.dynamic = w.size() + bias.size();
  c.full_equiv = c.dynamic;
  return c;
}

void DenseLayer::accumulate_weight_grad(const Matrix& g_w_eff) {
  add_in_place(gw, g_w_eff);
}

// ---------------------------------------------------------------------------
// PredictedDenseLayer

std::size_t PredictedDenseLayer::units_for_column(std::size_t total, std::size_t j_count,
                                                  std::size_t j) {
  return total / j_count + (j < total % j_count ? 1 : 0);
}

PredictedDenseLayer::PredictedDenseLayer(std::vector<BuiltDictionary> dicts,
                                         std::size_t total_units, Activation act,
                                         std::uint64_t seed)
    : act(act) {
  if (dicts.empty()) throw ConfigError("PredictedDenseLayer: needs >= 1 column");
  if (total_units < dicts.size())
    throw ConfigError("PredictedDenseLayer: fewer hidden units than columns");
  const std::size_t j_count = dicts.size();
  columns.reserve(j_count);
  for (std::size_t j = 0; j < j_count; ++j) {
    if (dicts[j].u.rows() != dicts[0].u.rows())
      throw ShapeError("PredictedDenseLayer: columns disagree on n_v");
    PredictedColumn col;
    col.units = units_for_column(total_units, j_count, j);
    const std::size_t n_a = dicts[j].n_alpha();
    Rng rng(derive_seed(seed, 0x70640000ULL + j));
    // Fan-in is measured in the pooled space, so the scale is 1/sqrt(n_alpha).
    col.w_alpha = gaussian_matrix(n_a, col.units,
                                  1.0 / std::sqrt(static_cast<double>(n_a)), rng);
    col.gw_alpha = Matrix(n_a, col.units);
    if (dicts[j].trainable) col.gu = Matrix(dicts[j].u.rows(), n_a);
    col.dict = std::move(dicts[j]);
    columns.push_back(std::move(col));
  }
  bias.assign(total_units, 0.0);
  gbias.assign(total_units, 0.0);
}

PredictedDenseLayer::PredictedDenseLayer(std::vector<PredictedColumn> columns_,
                                         std::vector<double> bias_, Activation act_)
    : columns(std::move(columns_)), bias(std::move(bias_)), act(act_) {
  std::size_t total = 0;
  for (auto& col : columns) {
    if (col.w_alpha.rows() != col.dict.n_alpha() || col.w_alpha.cols() != col.units)
      throw ShapeError("PredictedDenseLayer: coefficient shape mismatch");
    col.gw_alpha = Matrix(col.w_alpha.rows(), col.w_alpha.cols());
    if (col.dict.trainable) col.gu = Matrix(col.dict.u.rows(), col.dict.u.cols());
    total += col.units;
  }
  if (bias.size() != total) throw ShapeError("PredictedDenseLayer: bias length != units");
  gbias.assign(bias.size(), 0.0);
}

std::size_t PredictedDenseLayer::output_units() const {
  std::size_t total = 0;
  for (const auto& col : columns) total += col.units;
  return total;
}

Matrix PredictedDenseLayer::effective_weights() const {
  const std::size_t n_v = columns[0].dict.n_v();
  Matrix w_eff(n_v, output_units());
  std::size_t at = 0;
  for (const auto& col : columns) {
    place_cols(w_eff, predict_weights(col.dict, col.w_alpha), at);
    at += col.units;
  }
  return w_eff;
}

bool PredictedDenseLayer::pick_materialized(std::size_t batch) const {
  if (order == ComputeOrder::Pooled) return false;
  if (order == ComputeOrder::Materialized) return true;
  const std::size_t n_v = columns[0].dict.n_v();
  std::size_t sum_na = 0, sum_na_units = 0;
  for (const auto& col : columns) {
    sum_na += col.dict.n_alpha();
    sum_na_units += col.dict.n_alpha() * col.units;
  }
  const std::size_t pooled_flops = batch * n_v * sum_na + batch * sum_na_units;
  const std::size_t mat_flops = n_v * sum_na_units + batch * n_v * output_units();
  return mat_flops <= pooled_flops;
}

Signal PredictedDenseLayer::forward(const Signal& in) {
  const Matrix& x = as_matrix(in);
  const std::size_t n_v = columns[0].dict.n_v();
  if (x.cols() != n_v)
    throw ShapeError("PredictedDenseLayer: input width " + std::to_string(x.cols()) +
                     " != " + std::to_string(n_v));
  in_ = x;
  used_materialized_ = pick_materialized(x.rows());

  Matrix z(x.rows(), output_units());
  if (used_materialized_) {
    w_eff_ = effective_weights();
    z = matmul(x, w_eff_);
    pooled_.clear();
  } else {
    pooled_.clear();
    pooled_.reserve(columns.size());
    std::size_t at = 0;
    for (const auto& col : columns) {
      Matrix p = matmul(x, col.dict.u);                 // v_alpha = v U_alpha
      place_cols(z, matmul(p, col.w_alpha), at);        // h_j = v_alpha W_alpha
      pooled_.push_back(std::move(p));
      at += col.units;
    }
  }
  add_bias_rows(z, bias);
  activate_in_place(act, z);
  out_ = std::move(z);
  cached_ = true;
  return out_;
}

Signal PredictedDenseLayer::backward(const Signal& upstream, bool grad_is_preactivation) {
  if (!cached_) throw StateError("PredictedDenseLayer::backward before forward");
  const Matrix& g = as_matrix(upstream);
  const Matrix gz = grad_is_preactivation ? g : activation_backward(act, g, out_);
  accumulate_column_sums(gz, gbias);

  Matrix gin(in_.rows(), in_.cols());
  if (used_materialized_) {
    const Matrix g_w_eff = matmul_tn(in_, gz);
    std::size_t at = 0;
    for (auto& col : columns) {
      const Matrix g_block = g_w_eff.slice_cols(at, col.units);
      add_in_place(col.gw_alpha, matmul_tn(col.dict.u, g_block));
      if (col.dict.trainable) add_in_place(col.gu, matmul_nt(g_block, col.w_alpha));
      at += col.units;
    }
    gin = matmul_nt(gz, w_eff_);
  } else {
    std::size_t at = 0;
    for (std::size_t j = 0; j < columns.size(); ++j) {
      auto& col = columns[j];
      const Matrix gh = gz.slice_cols(at, col.units);
      add_in_place(col.gw_alpha, matmul_tn(pooled_[j], gh));
      const Matrix gp = matmul_nt(gh, col.w_alpha);
      add_in_place(gin, matmul_nt(gp, col.dict.u));
      if (col.dict.trainable) add_in_place(col.gu, matmul_tn(in_, gp));
      at += col.units;
    }
  }
  return gin;
}

void PredictedDenseLayer::zero_grad() {
  for (auto& col : columns) {
    col.gw_alpha.fill(0.0);
    if (col.dict.trainable) col.gu.fill(0.0);
  }
  std::fill(gbias.begin(), gbias.end(), 0.0);
}

void PredictedDenseLayer::params(std::vector<ParamView>& out) {
  for (auto& col : columns) {
    out.push_back({col.w_alpha.data(), col.gw_alpha.data(), col.w_alpha.size()});
    if (col.dict.trainable)
      out.push_back({col.dict.u.data(), col.gu.data(), col.dict.u.size()});
  }
  out.push_back({bias.data(), gbias.data(), bias.size()});
}

LayerCounts PredictedDenseLayer::counts() const {
  LayerCounts c;
  const std::size_t n_v = columns[0].dict.n_v();
  for (const auto& col : columns) {
    c.dynamic += col.w_alpha.size();
    // Trainable (LowRank) dictionary entries are learned, hence dynamic.
    if (col.dict.trainable) c.dynamic += col.dict.u.size();
    else c.static_count += col.dict.u.size();
  }
  c.dynamic += bias.size();
  c.full_equiv = n_v * output_units() + bias.size();
  return c;
}

void PredictedDenseLayer::accumulate_weight_grad(const Matrix& g_w_eff) {
  const std::size_t n_v = columns[0].dict.n_v();
  if (g_w_eff.rows() != n_v || g_w_eff.cols() != output_units())
    throw ShapeError("PredictedDenseLayer: effective-weight gradient shape mismatch");
  std::size_t at = 0;
  for (auto& col : columns) {
    const Matrix g_block = g_w_eff.slice_cols(at, col.units);
    add_in_place(col.gw_alpha, matmul_tn(col.dict.u, g_block));
    if (col.dict.trainable) add_in_place(col.gu, matmul_nt(g_block, col.w_alpha));
    at += col.units;
  }
}

// ---------------------------------------------------------------------------
// ConvLayer

ConvLayer::ConvLayer(std::size_t fh_, std::size_t fw_, std::size_t cin_,
                     std::size_t n_filters, std::size_t stride_, Activation act_,
                     std::uint64_t seed)
    : fh(fh_), fw(fw_), cin(cin_), stride(stride_), act(act_) {
  const std::size_t n_vf = fh * fw * cin;
  Rng rng(derive_seed(seed, 0x636f6e76ULL));
  bank = gaussian_matrix(n_vf, n_filters, 1.0 / std::sqrt(static_cast<double>(n_vf)), rng);
  gbank = Matrix(n_vf, n_filters);
  bias.assign(n_filters, 0.0);
  gbias.assign(n_filters, 0.0);
}

ConvLayer::ConvLayer(Matrix bank_, std::size_t fh_, std::size_t fw_, std::size_t cin_,
                     std::size_t stride_, std::vector<double> bias_, Activation act_)
    : bank(std::move(bank_)), fh(fh_), fw(fw_), cin(cin_), stride(stride_),
      bias(std::move(bias_)), act(act_) {
  if (bank.rows() != fh * fw * cin) throw ShapeError("ConvLayer: bank rows != fh*fw*cin");
  if (bias.size() != bank.cols()) throw ShapeError("ConvLayer: bias length != filters");
  gbank = Matrix(bank.rows(), bank.cols());
  gbias.assign(bias.size(), 0.0);
}

Signal ConvLayer::forward(const Signal& in) {
  const Tensor4& x = as_tensor(in);
  if (x.channels() != cin)
    throw ShapeError("ConvLayer: input channels " + std::to_string(x.channels()) +
                     " != " + std::to_string(cin));
  in_b_ = x.batch();
  in_h_ = x.height();
  in_w_ = x.width();
  cols_ = im2col(x, fh, fw, stride);
  Matrix z = matmul(cols_, bank);
  add_bias_rows(z, bias);
  activate_in_place(act, z);
  out2d_ = std::move(z);
  cached_ = true;

  const std::size_t oh = (in_h_ - fh) / stride + 1;
  const std::size_t ow = (in_w_ - fw) / stride + 1;
  Tensor4 out(in_b_, oh, ow, bank.cols());
  std::copy(out2d_.raw().begin(), out2d_.raw().end(), out.raw().begin());
  return out;
}

Signal ConvLayer::backward(const Signal& upstream, bool) {
  if (!cached_) throw StateError("ConvLayer::backward before forward");
  const Tensor4& gt = as_tensor(upstream);
  Matrix g(gt.batch() * gt.height() * gt.width(), gt.channels());
  std::copy(gt.raw().begin(), gt.raw().end(), g.raw().begin());

  const Matrix gz = activation_backward(act, g, out2d_);
  add_in_place(gbank, matmul_tn(cols_, gz));
  accumulate_column_sums(gz, gbias);
  const Matrix g_cols = matmul_nt(gz, bank);
  return col2im(g_cols, in_b_, in_h_, in_w_, cin, fh, fw, stride);
}

void ConvLayer::zero_grad() {
  gbank.fill(0.0);
  std::fill(gbias.begin(), gbias.end(), 0.0);
}

void ConvLayer::params(std::vector<ParamView>& out) {
  out.push_back({bank.data(), gbank.data(), bank.size()});
  out.push_back({bias.data(), gbias.data(), bias.size()});
}

LayerCounts ConvLayer::counts() const {
  LayerCounts c;
  c.dynamic = bank.size() + bias.size();
  c.full_equiv = c.dynamic;
  return c;
}

// ---------------------------------------------------------------------------
// PredictedConvLayer

PredictedConvLayer::PredictedConvLayer(BuiltDictionary dict_, std::size_t n_filters,
                                       std::size_t stride_, Activation act_,
                                       std::uint64_t seed)
    : dict(std::move(dict_)), stride(stride_), act(act_) {
  if (dict.alpha.space.kind != WeightSpace::Kind::Grid2d)
    throw ConfigError("PredictedConvLayer: dictionary must live on a grid2d filter space");
  fh = dict.alpha.space.height;
  fw = dict.alpha.space.width;
  cin = dict.alpha.space.channels;
  const std::size_t n_a = dict.n_alpha();
  Rng rng(derive_seed(seed, 0x70636f6eULL));
  w_alpha = gaussian_matrix(n_a, n_filters, 1.0 / std::sqrt(static_cast<double>(n_a)), rng);
  gw_alpha = Matrix(n_a, n_filters);
  if (dict.trainable) gu = Matrix(dict.u.rows(), n_a);
  bias.assign(n_filters, 0.0);
  gbias.assign(n_filters, 0.0);
}

PredictedConvLayer::PredictedConvLayer(BuiltDictionary dict_, Matrix w_alpha_,
                                       std::size_t stride_, std::vector<double> bias_,
                                       Activation act_)
    : dict(std::move(dict_)), w_alpha(std::move(w_alpha_)), stride(stride_),
      bias(std::move(bias_)), act(act_) {
  if (dict.alpha.space.kind != WeightSpace::Kind::Grid2d)
    throw ConfigError("PredictedConvLayer: dictionary must live on a grid2d filter space");
  fh = dict.alpha.space.height;
  fw = dict.alpha.space.width;
  cin = dict.alpha.space.channels;
  if (w_alpha.rows() != dict.n_alpha())
    throw ShapeError("PredictedConvLayer: coefficient rows != n_alpha");
  if (bias.size() != w_alpha.cols())
    throw ShapeError("PredictedConvLayer: bias length != filters");
  gw_alpha = Matrix(w_alpha.rows(), w_alpha.cols());
  if (dict.trainable) gu = Matrix(dict.u.rows(), dict.u.cols());
  gbias.assign(bias.size(), 0.0);
}

Matrix PredictedConvLayer::effective_bank() const { return predict_weights(dict, w_alpha); }

Signal PredictedConvLayer::forward(const Signal& in) {
  const Tensor4& x = as_tensor(in);
  if (x.channels() != cin)
    throw ShapeError("PredictedConvLayer: input channels " + std::to_string(x.channels()) +
                     " != " + std::to_string(cin));
  in_b_ = x.batch();
  in_h_ = x.height();
  in_w_ = x.width();
  cols_ = im2col(x, fh, fw, stride);

  // The dictionary-convolution-first order wins when there are more output
  // channels than dictionary elements.
  if (order == ComputeOrder::Auto)
    used_materialized_ = w_alpha.cols() <= dict.n_alpha();
  else
    used_materialized_ = order == ComputeOrder::Materialized;

  Matrix z;
  if (used_materialized_) {
    bank_ = effective_bank();
    z = matmul(cols_, bank_);
    pooled_ = Matrix();
  } else {
    pooled_ = matmul(cols_, dict.u);  // v convolved with the fixed dictionary
    z = matmul(pooled_, w_alpha);
    bank_ = Matrix();
  }
  add_bias_rows(z, bias);
  activate_in_place(act, z);
  out2d_ = std::move(z);
  cached_ = true;

  const std::size_t oh = (in_h_ - fh) / stride + 1;
  const std::size_t ow = (in_w_ - fw) / stride + 1;
  Tensor4 out(in_b_, oh, ow, w_alpha.cols());
  std::copy(out2d_.raw().begin(), out2d_.raw().end(), out.raw().begin());
  return out;
}

Signal PredictedConvLayer::backward(const Signal& upstream, bool) {
  if (!cached_) throw StateError("PredictedConvLayer::backward before forward");
  const Tensor4& gt = as_tensor(upstream);
  Matrix g(gt.batch() * gt.height() * gt.width(), gt.channels());
  std::copy(gt.raw().begin(), gt.raw().end(), g.raw().begin());

  const Matrix gz = activation_backward(act, g, out2d_);
  accumulate_column_sums(gz, gbias);

  Matrix g_cols;
  if (used_materialized_) {
    const Matrix g_bank = matmul_tn(cols_, gz);
    add_in_place(gw_alpha, matmul_tn(dict.u, g_bank));
    if (dict.trainable) add_in_place(gu, matmul_nt(g_bank, w_alpha));
    g_cols = matmul_nt(gz, bank_);
  } else {
    add_in_place(gw_alpha, matmul_tn(pooled_, gz));
    const Matrix gp = matmul_nt(gz, w_alpha);
    if (dict.trainable) add_in_place(gu, matmul_tn(cols_, gp));
    g_cols = matmul_nt(gp, dict.u);
  }
  return col2im(g_cols, in_b_, in_h_, in_w_, cin, fh, fw, stride);
}

void PredictedConvLayer::zero_grad() {
  gw_alpha.fill(0.0);
  if (dict.trainable) gu.fill(0.0);
  std::fill(gbias.begin(), gbias.end(), 0.0);
}

void PredictedConvLayer::params(std::vector<ParamView>& out) {
  out.push_back({w_alpha.data(), gw_alpha.data(), w_alpha.size()});
  if (dict.trainable) out.push_back({dict.u.data(), gu.data(), dict.u.size()});
  out.push_back({bias.data(), gbias.data(), bias.size()});
}

LayerCounts PredictedConvLayer::counts() const {
  LayerCounts c;
  c.dynamic = w_alpha.size() + bias.size();
  if (dict.trainable) c.dynamic += dict.u.size();
  else c.static_count = dict.u.size();
  c.full_equiv = dict.n_v() * w_alpha.cols() + bias.size();
  return c;
}

// ---------------------------------------------------------------------------
// MaxPoolLayer

MaxPoolLayer::MaxPoolLayer(std::size_t size_, std::size_t stride_)
    : size(size_), stride(stride_) {
  if (size == 0 || stride == 0) throw ConfigError("MaxPoolLayer: size and stride >= 1");
}

Signal MaxPoolLayer::forward(const Signal& in) {
  const Tensor4& x = as_tensor(in);
  if (size > x.height() || size > x.width())
    throw ShapeError("MaxPoolLayer: window exceeds input extent");
  in_b_ = x.batch();
  in_h_ = x.height();
  in_w_ = x.width();
  in_c_ = x.channels();
  out_h_ = (in_h_ - size) / stride + 1;
  out_w_ = (in_w_ - size) / stride + 1;

  Tensor4 out(in_b_, out_h_, out_w_, in_c_);
  argmax_.assign(out.size(), 0);
  std::size_t o = 0;
  for (std::size_t b = 0; b < in_b_; ++b)
    for (std::size_t oy = 0; oy < out_h_; ++oy)
      for (std::size_t ox = 0; ox < out_w_; ++ox)
        for (std::size_t c = 0; c < in_c_; ++c, ++o) {
          double best = x.at(b, oy * stride, ox * stride, c);
          std::size_t best_idx =
              ((b * in_h_ + oy * stride) * in_w_ + ox * stride) * in_c_ + c;
          for (std::size_t y = 0; y < size; ++y)
            for (std::size_t xx = 0; xx < size; ++xx) {
              const double v = x.at(b, oy * stride + y, ox * stride + xx, c);
              if (v > best) {
                best = v;
                best_idx =
                    ((b * in_h_ + oy * stride + y) * in_w_ + ox * stride + xx) * in_c_ + c;
              }
            }
          out.raw()[o] = best;
          argmax_[o] = best_idx;
        }
  cached_ = true;
  return out;
}

Signal MaxPoolLayer::backward(const Signal& upstream, bool) {
  if (!cached_) throw StateError("MaxPoolLayer::backward before forward");
  const Tensor4& g = as_tensor(upstream);
  if (g.size() != argmax_.size()) throw ShapeError("MaxPoolLayer: gradient shape mismatch");
  Tensor4 gin(in_b_, in_h_, in_w_, in_c_);
  for (std::size_t i = 0; i < argmax_.size(); ++i) gin.raw()[argmax_[i]] += g.raw()[i];
  return gin;
}

// ---------------------------------------------------------------------------
// FlattenLayer

Signal FlattenLayer::forward(const Signal& in) {
  const Tensor4& x = as_tensor(in);
  h_ = x.height();
  w_ = x.width();
  c_ = x.channels();
  cached_ = true;
  return x.as_matrix();
}

Signal FlattenLayer::backward(const Signal& upstream, bool) {
  if (!cached_) throw StateError("FlattenLayer::backward before forward");
  return Tensor4::from_matrix(as_matrix(upstream), h_, w_, c_);
}

// ---------------------------------------------------------------------------
// Network

Matrix Network::forward(const Signal& in) {
  if (layers.empty()) throw StateError("Network: no layers");
  Signal s = in;
  for (auto& l : layers) s = l->forward(s);
  return as_matrix(s);
}

void Network::backward(const Matrix& grad_out, bool grad_is_preactivation) {
  Signal g = grad_out;
  for (std::size_t i = layers.size(); i-- > 0;) {
    const bool preact = grad_is_preactivation && i == layers.size() - 1;
    g = layers[i]->backward(g, preact);
  }
}

void Network::zero_grad() {
  for (auto& l : layers) l->zero_grad();
}

std::vector<ParamView> Network::params() {
  std::vector<ParamView> out;
  for (auto& l : layers) l->params(out);
  return out;
}

}  // namespace dictnet
