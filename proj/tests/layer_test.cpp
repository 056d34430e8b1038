#include <doctest.h>

#include <cmath>
#include <cstring>

#include "dictnet/dictionary.hpp"
#include "dictnet/error.hpp"
#include "dictnet/layer.hpp"
#include "dictnet/rng.hpp"
#include "dictnet/training.hpp"

using namespace dictnet;

namespace {
Matrix random_matrix(std::size_t r, std::size_t c, std::uint64_t seed) {
  Rng rng(seed);
  Matrix m(r, c);
  for (double& v : m.raw()) v = rng.normal();
  return m;
}

Tensor4 random_tensor(std::size_t b, std::size_t h, std::size_t w, std::size_t c,
                      std::uint64_t seed) {
  Rng rng(seed);
  Tensor4 t(b, h, w, c);
  for (double& v : t.raw()) v = rng.normal();
  return t;
}

PredictedDenseLayer two_column_layer(std::size_t n_v, std::size_t units, double fraction,
                                     std::uint64_t seed, const char* strategy = "SE") {
  const WeightSpace space = WeightSpace::flat(n_v);
  const ColumnFamily fam = make_columns(space, 2, fraction, seed);
  std::vector<BuiltDictionary> dicts;
  for (std::size_t j = 0; j < fam.count(); ++j)
    dicts.push_back(build_dictionary(DictionaryStrategy::parse(strategy), fam.columns[j],
                                     nullptr, seed + j));
  return PredictedDenseLayer(std::move(dicts), units, Activation::Sigmoid, seed);
}
}  // namespace

TEST_CASE("zero coefficients with sigmoid give one half everywhere") {
  PredictedDenseLayer layer = two_column_layer(12, 6, 0.5, 3);
  for (auto& col : layer.columns) col.w_alpha.fill(0.0);
  const Matrix out = as_matrix(layer.forward(random_matrix(4, 12, 1)));
  for (double v : out.raw()) CHECK(v == doctest::Approx(0.5));
}

TEST_CASE("full random-connection column reduces to a plain dense layer") {
  const WeightSpace space = WeightSpace::flat(7);
  const IndexSet full = sample_alpha(space, 1.0, 1, false);
  const BuiltDictionary identity_dict =
      build_dictionary(DictionaryStrategy::parse("RandCon"), full, nullptr, 1);
  std::vector<BuiltDictionary> dicts;
  dicts.push_back(identity_dict);
  PredictedDenseLayer predicted(std::move(dicts), 4, Activation::Sigmoid, 9);

  DenseLayer plain(predicted.columns[0].w_alpha, predicted.bias, Activation::Sigmoid);
  const Matrix x = random_matrix(5, 7, 2);
  const Matrix a = as_matrix(predicted.forward(x));
  const Matrix b = as_matrix(plain.forward(x));
  CHECK(max_abs_diff(a, b) < 1e-14);
}

TEST_CASE("pooled and materialized dense forwards agree") {
  PredictedDenseLayer layer = two_column_layer(20, 8, 0.4, 11);
  const Matrix x = random_matrix(4, 20, 5);
  layer.order = ComputeOrder::Pooled;
  const Matrix pooled = as_matrix(layer.forward(x));
  layer.order = ComputeOrder::Materialized;
  const Matrix materialized = as_matrix(layer.forward(x));
  CHECK(max_abs_diff(pooled, materialized) < 1e-10);
}

TEST_CASE("dense forward equals the explicit factored product") {
  PredictedDenseLayer layer = two_column_layer(16, 6, 0.5, 13);
  const Matrix x = random_matrix(3, 16, 7);
  const Matrix out = as_matrix(layer.forward(x));
  Matrix z = matmul(x, layer.effective_weights());
  for (std::size_t i = 0; i < z.rows(); ++i)
    for (std::size_t j = 0; j < z.cols(); ++j) z(i, j) += layer.bias[j];
  activate_in_place(Activation::Sigmoid, z);
  CHECK(max_abs_diff(out, z) < 1e-10);
}

TEST_CASE("predicted conv: one-hot coefficients select a dictionary filter") {
  const WeightSpace fspace = WeightSpace::grid2d(3, 3, 2);
  const IndexSet alpha = sample_alpha(fspace, 0.5, 3, true);
  const BuiltDictionary dict =
      build_dictionary(DictionaryStrategy::parse("RandFixU"), alpha, nullptr, 5);
  const Matrix u_copy = dict.u;

  Matrix w_alpha(alpha.n_alpha(), 1);
  w_alpha(2, 0) = 1.0;  // select dictionary column 2
  PredictedConvLayer layer(dict, std::move(w_alpha), 1, std::vector<double>{0.0},
                           Activation::Linear);

  const Tensor4 x = random_tensor(2, 6, 6, 2, 8);
  const Tensor4 out = as_tensor(layer.forward(x));
  const Tensor4 want = correlate2d(x, u_copy.slice_cols(2, 1), 3, 3, 1);
  double diff = 0.0;
  for (std::size_t i = 0; i < out.size(); ++i)
    diff = std::max(diff, std::abs(out.raw()[i] - want.raw()[i]));
  CHECK(diff < 1e-12);
}

TEST_CASE("predicted conv with one dictionary element scales one feature map") {
  const WeightSpace fspace = WeightSpace::grid2d(3, 3, 1);
  IndexSet alpha;
  alpha.space = fspace;
  alpha.indices = {4};
  const BuiltDictionary dict =
      build_dictionary(DictionaryStrategy::parse("SE"), alpha, nullptr, 2);

  Matrix w_alpha(1, 3, {2.0, -1.0, 0.5});
  PredictedConvLayer layer(dict, std::move(w_alpha), 1, std::vector<double>(3, 0.0),
                           Activation::Linear);
  const Tensor4 x = random_tensor(1, 5, 5, 1, 3);
  const Tensor4 out = as_tensor(layer.forward(x));
  // All output channels are scalar multiples of the same feature map.
  for (std::size_t y = 0; y < out.height(); ++y)
    for (std::size_t xx = 0; xx < out.width(); ++xx) {
      const double base = out.at(0, y, xx, 0) / 2.0;
      CHECK(out.at(0, y, xx, 1) == doctest::Approx(-base));
      CHECK(out.at(0, y, xx, 2) == doctest::Approx(0.5 * base));
    }
}

TEST_CASE("pooled and materialized conv forwards agree") {
  const WeightSpace fspace = WeightSpace::grid2d(4, 4, 3);
  const IndexSet alpha = sample_alpha(fspace, 0.4, 9, true);
  const BuiltDictionary dict =
      build_dictionary(DictionaryStrategy::parse("SE"), alpha, nullptr, 4);
  PredictedConvLayer layer(dict, 5, 2, Activation::Sigmoid, 21);

  const Tensor4 x = random_tensor(2, 9, 9, 3, 17);
  layer.order = ComputeOrder::Pooled;
  const Tensor4 a = as_tensor(layer.forward(x));
  layer.order = ComputeOrder::Materialized;
  const Tensor4 b = as_tensor(layer.forward(x));
  double diff = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i)
    diff = std::max(diff, std::abs(a.raw()[i] - b.raw()[i]));
  CHECK(diff < 1e-10);
}

TEST_CASE("zero upstream gradient produces zero parameter gradients") {
  PredictedDenseLayer layer = two_column_layer(10, 4, 0.5, 23);
  layer.zero_grad();
  layer.forward(random_matrix(3, 10, 2));
  layer.backward(Matrix(3, 4), false);
  for (const auto& col : layer.columns)
    for (double g : col.gw_alpha.raw()) CHECK(g == 0.0);
  for (double g : layer.gbias) CHECK(g == 0.0);
}

TEST_CASE("linear single-unit analytic gradient is (vU)^T delta") {
  const WeightSpace space = WeightSpace::flat(9);
  const ColumnFamily fam = make_columns(space, 1, 0.5, 31);
  std::vector<BuiltDictionary> dicts;
  dicts.push_back(build_dictionary(DictionaryStrategy::parse("SE"), fam.columns[0],
                                   nullptr, 31));
  const Matrix u = dicts[0].u;
  PredictedDenseLayer layer(std::move(dicts), 1, Activation::Linear, 31);

  const Matrix v = random_matrix(6, 9, 3);
  const Matrix delta = random_matrix(6, 1, 4);
  layer.zero_grad();
  layer.forward(v);
  layer.backward(delta, false);
  const Matrix want = matmul_tn(matmul(v, u), delta);
  CHECK(max_abs_diff(layer.columns[0].gw_alpha, want) < 1e-12);
}

TEST_CASE("backward before forward is a state error") {
  PredictedDenseLayer layer = two_column_layer(8, 4, 0.5, 37);
  CHECK_THROWS_AS(layer.backward(Matrix(2, 4), false), StateError);
  DenseLayer dense(4, 2, Activation::Sigmoid, 1);
  CHECK_THROWS_AS(dense.backward(Matrix(2, 2), false), StateError);
}

TEST_CASE("dynamic parameter count is invariant in the number of columns") {
  // Fixed total units and fixed per-dictionary size: J only moves static
  // parameters.
  const WeightSpace space = WeightSpace::flat(80);
  std::size_t dynamic_ref = 0;
  for (const std::size_t j : {1u, 2u, 5u, 10u}) {
    const ColumnFamily fam = make_columns(space, j, 0.25, 41);
    std::vector<BuiltDictionary> dicts;
    for (std::size_t k = 0; k < j; ++k)
      dicts.push_back(build_dictionary(DictionaryStrategy::parse("RandFixU"),
                                       fam.columns[k], nullptr, 50 + k));
    PredictedDenseLayer layer(std::move(dicts), 20, Activation::Sigmoid, 5);
    const LayerCounts c = layer.counts();
    if (dynamic_ref == 0) dynamic_ref = c.dynamic;
    CHECK(c.dynamic == dynamic_ref);
    CHECK(c.static_count == j * 80 * 20);  // n_alpha = 20 at fraction 0.25
    CHECK(c.full_equiv == 80 * 20 + 20);
  }
}

TEST_CASE("training steps leave fixed dictionaries bit-identical") {
  PredictedDenseLayer layer = two_column_layer(10, 4, 0.5, 43);
  std::vector<std::vector<double>> before;
  for (const auto& col : layer.columns) before.push_back(col.dict.u.raw());

  std::vector<ParamView> params;
  layer.params(params);
  SgdOptimizer opt(params, 0.5, 0.9);
  for (int step = 0; step < 3; ++step) {
    layer.zero_grad();
    layer.forward(random_matrix(4, 10, step));
    layer.backward(random_matrix(4, 4, 100 + step), false);
    opt.step();
  }
  for (std::size_t j = 0; j < layer.columns.size(); ++j)
    CHECK(std::memcmp(layer.columns[j].dict.u.raw().data(), before[j].data(),
                      before[j].size() * sizeof(double)) == 0);
}

TEST_CASE("LowRank dictionaries receive gradient and move under training") {
  const WeightSpace space = WeightSpace::flat(10);
  const ColumnFamily fam = make_columns(space, 1, 0.5, 47);
  std::vector<BuiltDictionary> dicts;
  dicts.push_back(build_dictionary(DictionaryStrategy::parse("LowRank"), fam.columns[0],
                                   nullptr, 47));
  PredictedDenseLayer layer(std::move(dicts), 4, Activation::Sigmoid, 6);
  const std::vector<double> before = layer.columns[0].dict.u.raw();

  std::vector<ParamView> params;
  layer.params(params);
  CHECK(params.size() == 3);  // w_alpha, u, bias
  SgdOptimizer opt(params, 0.5, 0.0);
  layer.zero_grad();
  layer.forward(random_matrix(4, 10, 3));
  layer.backward(random_matrix(4, 4, 4), false);
  opt.step();
  double moved = 0.0;
  for (std::size_t i = 0; i < before.size(); ++i)
    moved = std::max(moved, std::abs(before[i] - layer.columns[0].dict.u.raw()[i]));
  CHECK(moved > 0.0);
}

TEST_CASE("softmax rows sum to one") {
  DenseLayer layer(6, 5, Activation::Softmax, 3);
  const Matrix out = as_matrix(layer.forward(random_matrix(7, 6, 5)));
  for (std::size_t i = 0; i < out.rows(); ++i) {
    double sum = 0.0;
    for (std::size_t j = 0; j < out.cols(); ++j) sum += out(i, j);
    CHECK(std::abs(sum - 1.0) <= 1e-12);
  }
}

TEST_CASE("max pooling forward and backward") {
  Tensor4 x(1, 4, 4, 1);
  for (std::size_t i = 0; i < 16; ++i) x.raw()[i] = static_cast<double>(i);
  MaxPoolLayer pool(2, 2);
  const Tensor4 out = as_tensor(pool.forward(x));
  CHECK(out.height() == 2);
  CHECK(out.at(0, 0, 0, 0) == 5.0);
  CHECK(out.at(0, 1, 1, 0) == 15.0);

  Tensor4 g(1, 2, 2, 1);
  g.raw() = {1.0, 2.0, 3.0, 4.0};
  const Tensor4 gin = as_tensor(pool.backward(g, false));
  CHECK(gin.at(0, 1, 1, 0) == 1.0);  // argmax positions receive the gradient
  CHECK(gin.at(0, 3, 3, 0) == 4.0);
  CHECK(gin.at(0, 0, 0, 0) == 0.0);
}

TEST_CASE("flatten is an exact round trip") {
  const Tensor4 x = random_tensor(3, 2, 4, 2, 9);
  FlattenLayer flat;
  const Matrix m = as_matrix(flat.forward(x));
  CHECK(m.rows() == 3);
  CHECK(m.cols() == 16);
  const Tensor4 back = as_tensor(flat.backward(m, false));
  double diff = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i)
    diff = std::max(diff, std::abs(x.raw()[i] - back.raw()[i]));
  CHECK(diff == 0.0);
}

TEST_CASE("network wiring rejects signal kind mismatches") {
  Network net;
  net.layers.push_back(std::make_unique<DenseLayer>(4, 2, Activation::Softmax, 1));
  CHECK_THROWS_AS(net.forward(random_tensor(1, 2, 2, 1, 1)), ShapeError);
}
