#pragma once

#include <cstdint>

#include "dictnet/data.hpp"
#include "dictnet/dictionary.hpp"
#include "dictnet/matrix.hpp"
#include "dictnet/training.hpp"

namespace dictnet {

/// Reconstruction ICA: overcomplete features learned by minimizing
///   mean over patches of ( ||W W^T x - x||^2 + sparsity * sum_k s(h_k) )
/// with h = x W and the smooth L1 penalty s(z) = sqrt(z^2 + eps^2) - eps.
/// Features are either a full matrix (every entry learned) or a fixed
/// dictionary times learned coefficients.
struct RicaModel {
  bool predicted = false;
  Matrix w;              // full variant: n_v x n_h
  BuiltDictionary dict;  // predicted variant
  Matrix w_alpha;        // predicted variant: n_alpha x n_h
  double sparsity = 0.5;
  double epsilon = 1e-2;

  static RicaModel full(std::size_t n_v, std::size_t n_h, double sparsity, double epsilon,
                        std::uint64_t seed);
  static RicaModel with_dictionary(BuiltDictionary dict, std::size_t n_h, double sparsity,
                                   double epsilon, std::uint64_t seed);

  std::size_t n_v() const { return predicted ? dict.n_v() : w.rows(); }
  std::size_t n_h() const { return predicted ? w_alpha.cols() : w.cols(); }
  std::size_t dynamic_count() const { return predicted ? w_alpha.size() : w.size(); }
  std::size_t static_count() const { return predicted ? dict.u.size() : 0; }

  /// The feature matrix W (materialized for the predicted variant).
  Matrix effective_features() const;
};

struct RicaObjective {
  double loss = 0.0;
  Matrix grad;  // w.r.t. the dynamic parameters (w or w_alpha)
};

/// Loss and gradient on a patch batch (rows = patches). `order` switches
/// the predicted variant between materializing W and applying U and
/// w_alpha separately; the value agrees to roundoff either way.
RicaObjective rica_objective(const RicaModel& model, const Matrix& patches,
                             ComputeOrder order = ComputeOrder::Auto);

/// Mini-batch SGD on the RICA objective. Returns per-epoch mean loss.
std::vector<double> train_rica(RicaModel& model, const Matrix& patches,
                               const OptimizerConfig& cfg);

/// Per-patch mean removal followed by global ZCA whitening,
/// (C + reg*I)^(-1/2) about the training mean.
struct Whitener {
  std::vector<double> mean;
  Matrix zca;  // n_v x n_v
};
Whitener fit_zca(const Matrix& patches, double reg = 0.1);
Matrix whiten(const Whitener& w, const Matrix& patches);
/// Remove each row's own mean (patch DC component).
void remove_patch_means(Matrix& patches);

/// Classification readout: dense |x W| patch features over a stride grid,
/// average-pooled on a pool x pool spatial grid, then a softmax trained on
/// the pooled features. Returns test accuracy. The whitener (if any) must
/// be the one the model was trained with.
double rica_classify(const RicaModel& model, const Whitener* whitener,
                     const Dataset& train_set, const Dataset& test_set, std::size_t patch,
                     std::size_t patch_stride, std::size_t pool_grid,
                     const OptimizerConfig& readout_cfg);

}  // namespace dictnet
