#pragma once

#include "dictnet/index_set.hpp"
#include "dictnet/matrix.hpp"

namespace dictnet {

/// Covariance model over weight-space locations. The squared exponential
/// kernel measures distance over (x, y, channel) so that channel-tied
/// index sets keep the gram strictly positive definite and predicted
/// multi-channel filters stay channel-selective; the empirical kinds look
/// up a covariance matrix estimated from activations.
struct Kernel {
  enum class Kind { SquaredExponential, EmpiricalCovariance, SquaredEmpiricalCovariance };

  Kind kind = Kind::SquaredExponential;
  double sigma = 1.0;  // SE length scale, > 0
  Matrix cov;          // empirical kinds: n_v x n_v, symmetric

  static Kernel squared_exponential(double sigma);
  static Kernel empirical(Matrix cov);
  static Kernel squared_empirical(Matrix cov);
};

struct RidgeConfig {
  double lambda = 0.0;  // >= 0; must be > 0 unless K_alpha is strictly PD
};

/// Default ridge coefficients: covariance grams are frequently
/// rank-deficient and need a real ridge, SE grams only need jitter.
inline constexpr double kDefaultLambdaSe = 1e-6;
inline constexpr double kDefaultLambdaCov = 1e-3;

/// k(i, j) for flat indices i, j in `space`. Throws IndexError when a
/// coordinate is out of range, ShapeError when an empirical kernel's
/// covariance does not match the space.
double eval_kernel(const Kernel& kernel, const WeightSpace& space, std::size_t i,
                   std::size_t j);

/// K_alpha: the n_alpha x n_alpha kernel matrix over the index set.
/// Symmetric by construction (upper triangle mirrored exactly).
Matrix gram(const Kernel& kernel, const IndexSet& alpha);

/// k_alpha: n_alpha x n_v, row i over alpha, column j over the full space
/// in canonical (flat-index) order.
Matrix cross_gram(const Kernel& kernel, const IndexSet& alpha);

/// The kernel ridge prediction operator U = k_alpha^T (K_alpha + lambda I)^-1,
/// an n_v x n_alpha matrix with w = U w_alpha. Computed through solve_spd,
/// never by explicit inversion.
Matrix ridge_dictionary(const Kernel& kernel, const IndexSet& alpha,
                        const RidgeConfig& cfg);

/// Covariance of unit activations over observations (rows of h), normalized
/// by the observation count, mean-subtracted, exactly symmetric. With
/// `squared`, entries are squared elementwise. Requires >= 2 observations.
Kernel empirical_kernel_from_activations(const Matrix& h, bool squared);

}  // namespace dictnet
