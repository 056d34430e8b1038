#include "dictnet/kernel.hpp"

#include <cmath>
#include <string>

#include "dictnet/error.hpp"

namespace dictnet {

Kernel Kernel::squared_exponential(double sigma) {
  if (!(sigma > 0.0)) throw ConfigError("Kernel: SE length scale must be > 0");
  Kernel k;
  k.kind = Kind::SquaredExponential;
  k.sigma = sigma;
  return k;
}

namespace {
void check_cov(const Matrix& cov) {
  if (cov.rows() != cov.cols()) throw ShapeError("Kernel: covariance must be square");
  for (std::size_t i = 0; i < cov.rows(); ++i) {
    if (cov(i, i) < 0.0)
      throw ConfigError("Kernel: covariance has negative diagonal at " + std::to_string(i));
    for (std::size_t j = i + 1; j < cov.cols(); ++j)
      if (cov(i, j) != cov(j, i))
        throw ConfigError("Kernel: covariance not symmetric at (" + std::to_string(i) +
                          "," + std::to_string(j) + ")");
  }
}
}  // namespace

Kernel Kernel::empirical(Matrix cov) {
  check_cov(cov);
  Kernel k;
  k.kind = Kind::EmpiricalCovariance;
  k.cov = std::move(cov);
  return k;
}

Kernel Kernel::squared_empirical(Matrix cov) {
  check_cov(cov);
  Kernel k;
  k.kind = Kind::SquaredEmpiricalCovariance;
  k.cov = std::move(cov);
  return k;
}

double eval_kernel(const Kernel& kernel, const WeightSpace& space, std::size_t i,
                   std::size_t j) {
  if (i >= space.size() || j >= space.size())
    throw IndexError("eval_kernel: coordinate out of range");
  switch (kernel.kind) {
    case Kernel::Kind::SquaredExponential: {
      double xi, yi, xj, yj;
      std::size_t ci, cj;
      space.coords(i, xi, yi, ci);
      space.coords(j, xj, yj, cj);
      const double dx = xi - xj, dy = yi - yj;
      // The channel index is a third coordinate. Without it, channel-tied
      // index sets would duplicate gram rows (distance 0 across channels)
      // and K_alpha would be singular at lambda = 0.
      const double dc = static_cast<double>(ci) - static_cast<double>(cj);
      return std::exp(-(dx * dx + dy * dy + dc * dc) /
                      (2.0 * kernel.sigma * kernel.sigma));
    }
    case Kernel::Kind::EmpiricalCovariance:
    case Kernel::Kind::SquaredEmpiricalCovariance: {
      if (kernel.cov.rows() != space.size())
        throw ShapeError("eval_kernel: covariance size " +
                         std::to_string(kernel.cov.rows()) + " != weight space size " +
                         std::to_string(space.size()));
      const double c = kernel.cov(i, j);
      return kernel.kind == Kernel::Kind::EmpiricalCovariance ? c : c * c;
    }
  }
  throw Error("eval_kernel: unreachable");
}

Matrix gram(const Kernel& kernel, const IndexSet& alpha) {
  alpha.validate();
  const std::size_t n = alpha.n_alpha();
  Matrix g(n, n);
  for (std::size_t i = 0; i < n; ++i) {
    g(i, i) = eval_kernel(kernel, alpha.space, alpha.indices[i], alpha.indices[i]);
    for (std::size_t j = i + 1; j < n; ++j) {
      const double v = eval_kernel(kernel, alpha.space, alpha.indices[i], alpha.indices[j]);
      g(i, j) = v;
      g(j, i) = v;
    }
  }
  return g;
}

Matrix cross_gram(const Kernel& kernel, const IndexSet& alpha) {
  alpha.validate();
  const std::size_t n = alpha.n_alpha();
  const std::size_t nv = alpha.space.size();
  Matrix g(n, nv);
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < nv; ++j)
      g(i, j) = eval_kernel(kernel, alpha.space, alpha.indices[i], j);
  return g;
}

Matrix ridge_dictionary(const Kernel& kernel, const IndexSet& alpha,
                        const RidgeConfig& cfg) {
  if (cfg.lambda < 0.0) throw ConfigError("ridge_dictionary: lambda must be >= 0");
  Matrix k = gram(kernel, alpha);
  for (std::size_t i = 0; i < k.rows(); ++i) k(i, i) += cfg.lambda;
  const Matrix kx = cross_gram(kernel, alpha);
  Matrix x;
  try {
    x = solve_spd(k, kx);  // (K + lambda I)^-1 k_alpha, n_alpha x n_v
  } catch (const NotSpdError& e) {
    throw NotSpdError(std::string("ridge_dictionary: ") + e.what());
  }
  return transpose(x);
}

Kernel empirical_kernel_from_activations(const Matrix& h, bool squared) {
  const std::size_t n_obs = h.rows();
  const std::size_t n_units = h.cols();
  if (n_obs < 2)
    throw DataError("empirical_kernel_from_activations: need >= 2 observations, got " +
                    std::to_string(n_obs));

  Matrix centered = h;
  for (std::size_t j = 0; j < n_units; ++j) {
    double mean = 0.0;
    for (std::size_t i = 0; i < n_obs; ++i) mean += h(i, j);
    mean /= static_cast<double>(n_obs);
    for (std::size_t i = 0; i < n_obs; ++i) centered(i, j) -= mean;
  }

  Matrix c = matmul_tn(centered, centered);
  scale_in_place(c, 1.0 / static_cast<double>(n_obs));
  // Force exact symmetry (matmul_tn is symmetric only up to rounding).
  // The squared kind stores the raw covariance; eval_kernel squares it.
  for (std::size_t i = 0; i < n_units; ++i)
    for (std::size_t j = i + 1; j < n_units; ++j) c(j, i) = c(i, j);
  return squared ? Kernel::squared_empirical(std::move(c)) : Kernel::empirical(std::move(c));
}

}  // namespace dictnet
