#include <doctest.h>

#include <cmath>

#include "dictnet/data.hpp"
#include "dictnet/error.hpp"
#include "dictnet/rica.hpp"
#include "dictnet/rng.hpp"

using namespace dictnet;

namespace {
Matrix random_patches(std::size_t n, std::size_t d, std::uint64_t seed) {
  Rng rng(seed);
  Matrix m(n, d);
  for (double& v : m.raw()) v = rng.normal();
  return m;
}

RicaModel predicted_model(std::size_t patch_side, std::size_t n_h, double fraction,
                          double sparsity, std::uint64_t seed) {
  const WeightSpace space = WeightSpace::grid2d(patch_side, patch_side, 1);
  const IndexSet alpha = sample_alpha(space, fraction, seed, true);
  DictionaryStrategy se = DictionaryStrategy::parse("SE");
  return RicaModel::with_dictionary(build_dictionary(se, alpha, nullptr, seed), n_h,
                                    sparsity, 1e-2, seed);
}
}  // namespace

TEST_CASE("zero features make the loss the mean squared patch norm, exactly") {
  RicaModel m = RicaModel::full(6, 4, /*sparsity=*/0.7, 1e-2, 1);
  m.w.fill(0.0);
  const Matrix x = random_patches(9, 6, 2);
  const RicaObjective obj = rica_objective(m, x);
  double want = 0.0;
  for (const double v : x.raw()) want += v * v;
  want /= 9.0;
  CHECK(obj.loss == doctest::Approx(want).epsilon(1e-15));
}

TEST_CASE("orthonormal square features reconstruct exactly") {
  // Eigenvectors of a random symmetric matrix form an orthonormal basis.
  Rng rng(3);
  Matrix g = random_patches(8, 8, 4);
  Matrix a = matmul_tn(g, g);
  for (std::size_t i = 0; i < 8; ++i)
    for (std::size_t j = i + 1; j < 8; ++j) a(j, i) = a(i, j);
  const SymmetricEigen eig = symmetric_eigen(a);

  RicaModel m = RicaModel::full(8, 8, /*sparsity=*/0.0, 1e-2, 5);
  m.w = eig.vectors;
  const Matrix x = random_patches(12, 8, 6);
  const RicaObjective obj = rica_objective(m, x);
  CHECK(obj.loss < 1e-18);  // reconstruction term vanishes, sparsity off
}

TEST_CASE("rica gradient matches central differences") {
  const Matrix x = random_patches(20, 16, 7);

  SUBCASE("full model") {
    RicaModel m = RicaModel::full(16, 6, 0.5, 1e-2, 8);
    const RicaObjective obj = rica_objective(m, x);
    double worst = 0.0;
    for (std::size_t i = 0; i < m.w.size(); ++i) {
      const double orig = m.w.raw()[i];
      m.w.raw()[i] = orig + 1e-6;
      const double lp = rica_objective(m, x).loss;
      m.w.raw()[i] = orig - 1e-6;
      const double lm = rica_objective(m, x).loss;
      m.w.raw()[i] = orig;
      const double numeric = (lp - lm) / 2e-6;
      const double a = obj.grad.raw()[i];
      worst = std::max(worst,
                       std::abs(a - numeric) / std::max({std::abs(a), std::abs(numeric), 1e-8}));
    }
    CHECK(worst < 1e-5);
  }

  SUBCASE("predicted model") {
    RicaModel m = predicted_model(4, 6, 0.5, 0.5, 9);
    const RicaObjective obj = rica_objective(m, x);
    double worst = 0.0;
    for (std::size_t i = 0; i < m.w_alpha.size(); ++i) {
      const double orig = m.w_alpha.raw()[i];
      m.w_alpha.raw()[i] = orig + 1e-6;
      const double lp = rica_objective(m, x).loss;
      m.w_alpha.raw()[i] = orig - 1e-6;
      const double lm = rica_objective(m, x).loss;
      m.w_alpha.raw()[i] = orig;
      const double numeric = (lp - lm) / 2e-6;
      const double a = obj.grad.raw()[i];
      worst = std::max(worst,
                       std::abs(a - numeric) / std::max({std::abs(a), std::abs(numeric), 1e-8}));
    }
    CHECK(worst < 1e-5);
  }
}

TEST_CASE("pooled and materialized objective values agree") {
  RicaModel m = predicted_model(4, 10, 0.4, 0.8, 10);
  const Matrix x = random_patches(25, 16, 11);
  const double pooled = rica_objective(m, x, ComputeOrder::Pooled).loss;
  const double materialized = rica_objective(m, x, ComputeOrder::Materialized).loss;
  CHECK(std::abs(pooled - materialized) < 1e-10);
}

TEST_CASE("loss is bounded below by zero") {
  const Matrix x = random_patches(15, 9, 12);
  for (int t = 0; t < 5; ++t) {
    RicaModel m = RicaModel::full(9, 12, 0.3, 1e-2, 100 + t);
    CHECK(rica_objective(m, x).loss >= 0.0);
  }
}

TEST_CASE("complete rica without sparsity drives the loss near zero") {
  // n_h = n_v, sparsity off, whitened inputs: reconstruction can be solved.
  Matrix x = random_patches(300, 9, 13);
  remove_patch_means(x);
  const Whitener wh = fit_zca(x, 0.01);
  const Matrix white = whiten(wh, x);

  RicaModel m = RicaModel::full(9, 9, 0.0, 1e-2, 14);
  OptimizerConfig cfg;
  cfg.learning_rate = 0.05;
  cfg.momentum = 0.9;
  cfg.batch_size = 50;
  cfg.epochs = 150;
  cfg.seed = 15;
  const auto losses = train_rica(m, white, cfg);
  CHECK(losses.back() < 0.01 * losses.front());
}

TEST_CASE("predicted model at 50% halves the dynamic parameter count") {
  RicaModel full = RicaModel::full(16, 10, 0.5, 1e-2, 16);
  RicaModel half = predicted_model(4, 10, 0.5, 0.5, 17);
  CHECK(half.dynamic_count() == full.dynamic_count() / 2);
  CHECK(half.static_count() == 16 * 8);
}

TEST_CASE("training on smooth patches raises spatial autocorrelation") {
  // Lag-1 autocorrelation oracle over feature columns, computed directly.
  const auto lag1 = [](const Matrix& w, std::size_t side) {
    double num = 0.0, den = 0.0;
    for (std::size_t f = 0; f < w.cols(); ++f) {
      double mean = 0.0;
      for (std::size_t i = 0; i < w.rows(); ++i) mean += w(i, f);
      mean /= static_cast<double>(w.rows());
      for (std::size_t y = 0; y < side; ++y)
        for (std::size_t x = 0; x + 1 < side; ++x) {
          num += (w(y * side + x, f) - mean) * (w(y * side + x + 1, f) - mean);
        }
      for (std::size_t i = 0; i < w.rows(); ++i) {
        const double d = w(i, f) - mean;
        den += d * d;
      }
    }
    return num / den;
  };

  const Tensor4 images = make_smooth_images(40, 16, 16, 1, 18);
  Dataset ds;
  ds.images = images;
  ds.labels.assign(40, 0);
  ds.n_classes = 1;
  Matrix patches = extract_patches(ds, 6, 3000, 19);
  remove_patch_means(patches);
  const Whitener wh = fit_zca(patches, 0.1);
  const Matrix white = whiten(wh, patches);

  RicaModel m = RicaModel::full(36, 36, 0.5, 1e-2, 20);
  const double before = lag1(m.w, 6);
  OptimizerConfig cfg;
  cfg.learning_rate = 0.02;
  cfg.momentum = 0.9;
  cfg.batch_size = 100;
  cfg.epochs = 40;
  cfg.seed = 21;
  train_rica(m, white, cfg);
  const double after = lag1(m.w, 6);
  CHECK(after > before);
}

TEST_CASE("zca whitening has the analytic spectrum") {
  Matrix x = random_patches(500, 6, 22);
  // Stretch one direction to make the covariance anisotropic.
  for (std::size_t i = 0; i < x.rows(); ++i) x(i, 0) *= 3.0;
  const Whitener wh = fit_zca(x, 0.1);
  const Matrix white = whiten(wh, x);

  // cov(white) should equal V diag(l/(l+r)) V^T of the original covariance.
  Matrix cov = matmul_tn(white, white);
  scale_in_place(cov, 1.0 / 500.0);
  Matrix centered = x;
  std::vector<double> mean(6, 0.0);
  for (std::size_t i = 0; i < x.rows(); ++i)
    for (std::size_t j = 0; j < 6; ++j) mean[j] += x(i, j);
  for (auto& m : mean) m /= 500.0;
  for (std::size_t i = 0; i < x.rows(); ++i)
    for (std::size_t j = 0; j < 6; ++j) centered(i, j) -= mean[j];
  Matrix c0 = matmul_tn(centered, centered);
  scale_in_place(c0, 1.0 / 500.0);
  for (std::size_t i = 0; i < 6; ++i)
    for (std::size_t j = i + 1; j < 6; ++j) c0(j, i) = c0(i, j);
  const SymmetricEigen eig = symmetric_eigen(c0);
  Matrix scaled = eig.vectors;
  for (std::size_t k = 0; k < 6; ++k) {
    const double s = eig.values[k] / (eig.values[k] + 0.1);
    for (std::size_t i = 0; i < 6; ++i) scaled(i, k) *= s;
  }
  const Matrix want = matmul_nt(scaled, eig.vectors);
  CHECK(max_abs_diff(cov, want) < 1e-8);
}

TEST_CASE("constant labels make the readout trivially exact") {
  const Dataset train_set = make_synthetic_textures(40, 23);
  Dataset constant_train = train_set;
  for (auto& l : constant_train.labels) l = 3;
  Dataset constant_test = make_synthetic_textures(20, 24);
  for (auto& l : constant_test.labels) l = 3;

  RicaModel m = RicaModel::full(8 * 8 * 3, 8, 0.5, 1e-2, 25);
  OptimizerConfig readout;
  readout.learning_rate = 0.3;
  readout.epochs = 10;
  readout.batch_size = 10;
  readout.seed = 26;
  const double acc =
      rica_classify(m, nullptr, constant_train, constant_test, 8, 8, 2, readout);
  CHECK(acc == 1.0);  // the majority-class share of constant labels
}
