#pragma once

#include <cstdint>
#include <optional>
#include <string>

#include "dictnet/index_set.hpp"
#include "dictnet/kernel.hpp"
#include "dictnet/matrix.hpp"

namespace dictnet {

/// How the fixed factor U_alpha of a layer is constructed.
///
///   SE       ridge regression with the squared exponential kernel
///   Emp      ridge regression with the empirical covariance kernel
///   Emp2     ridge regression with the squared empirical covariance kernel
///   AE       columns are features pre-trained as an autoencoder
///   RandFixU random projections (iid Gaussian, unit-norm columns)
///   RandCon  random connections (columns of the identity picked by alpha)
///   LowRank  Gaussian init, and U is trained along with the coefficients
struct DictionaryStrategy {
  enum class Kind { SE, Emp, Emp2, AE, RandFixU, RandCon, LowRank };

  Kind kind = Kind::SE;
  double sigma = 1.0;            // SE length scale
  double lambda = -1.0;          // ridge coefficient; < 0 means kind default
  std::size_t ae_epochs = 10;    // AE pretraining budget

  static DictionaryStrategy parse(const std::string& name);
  std::string name() const;

  bool needs_activations() const { return kind == Kind::Emp || kind == Kind::Emp2; }
  bool needs_pretrained_features() const { return kind == Kind::AE; }
  double effective_lambda() const;
};

/// A constructed dictionary: the n_v x n_alpha static factor plus enough
/// provenance to rebuild it from config and seeds.
struct BuiltDictionary {
  Matrix u;
  bool trainable = false;  // true only for LowRank
  IndexSet alpha;

  struct Provenance {
    std::string strategy;
    std::uint64_t seed = 0;
    std::uint64_t source_digest = 0;  // FNV-1a of the context data, 0 if none
  } provenance;

  std::size_t n_v() const { return u.rows(); }
  std::size_t n_alpha() const { return u.cols(); }
};

/// Build U_alpha for one column. `context` carries the strategy's data
/// dependency and must be present exactly when the strategy needs it:
/// input-unit activations (observations x n_v) for Emp/Emp2, pre-trained
/// encoder features (n_v x >= n_alpha) for AE, and nothing otherwise.
BuiltDictionary build_dictionary(const DictionaryStrategy& strategy, const IndexSet& alpha,
                                 const Matrix* context, std::uint64_t seed);

/// W = U_alpha W_alpha: expand learned coefficients to full weights.
Matrix predict_weights(const BuiltDictionary& dict, const Matrix& w_alpha);

}  // namespace dictnet
