#include "dictnet/dictionary.hpp"

#include <cmath>

#include "dictnet/error.hpp"
#include "dictnet/rng.hpp"

namespace dictnet {

DictionaryStrategy DictionaryStrategy::parse(const std::string& name) {
  DictionaryStrategy s;
  if (name == "SE") s.kind = Kind::SE;
  else if (name == "Emp") s.kind = Kind::Emp;
  else if (name == "Emp2") s.kind = Kind::Emp2;
  else if (name == "AE") s.kind = Kind::AE;
  else if (name == "RandFixU") s.kind = Kind::RandFixU;
  else if (name == "RandCon") s.kind = Kind::RandCon;
  else if (name == "LowRank") s.kind = Kind::LowRank;
  else throw ConfigError("unknown dictionary strategy '" + name + "'");
  return s;
}

std::string DictionaryStrategy::name() const {
  switch (kind) {
    case Kind::SE: return "SE";
    case Kind::Emp: return "Emp";
    case Kind::Emp2: return "Emp2";
    case Kind::AE: return "AE";
    case Kind::RandFixU: return "RandFixU";
    case Kind::RandCon: return "RandCon";
    case Kind::LowRank: return "LowRank";
  }
  return "?";
}

double DictionaryStrategy::effective_lambda() const {
  if (lambda >= 0.0) return lambda;
  return kind == Kind::SE ? kDefaultLambdaSe : kDefaultLambdaCov;
}

namespace {
std::uint64_t digest_of(const Matrix* m) {
  if (!m) return 0;
  return fnv1a(m->data(), m->size() * sizeof(double));
}
}  // namespace

BuiltDictionary build_dictionary(const DictionaryStrategy& strategy, const IndexSet& alpha,
                                 const Matrix* context, std::uint64_t seed) {
  alpha.validate();
  const std::size_t n_v = alpha.space.size();
  const std::size_t n_a = alpha.n_alpha();

  const bool wants_context = strategy.needs_activations() || strategy.needs_pretrained_features();
  if (wants_context && context == nullptr)
    throw ConfigError("build_dictionary: strategy " + strategy.name() +
                      " requires context data, none given");
  if (!wants_context && context != nullptr)
    throw ConfigError("build_dictionary: strategy " + strategy.name() +
                      " takes no context data");

  BuiltDictionary out;
  out.alpha = alpha;
  out.provenance = {strategy.name(), seed, digest_of(context)};

  switch (strategy.kind) {
    case DictionaryStrategy::Kind::SE: {
      const Kernel k = Kernel::squared_exponential(strategy.sigma);
      out.u = ridge_dictionary(k, alpha, {strategy.effective_lambda()});
      break;
    }
    case DictionaryStrategy::Kind::Emp:
    case DictionaryStrategy::Kind::Emp2: {
      if (context->cols() != n_v)
        throw ShapeError("build_dictionary: activations have " +
                         std::to_string(context->cols()) + " units, weight space has " +
                         std::to_string(n_v));
      const Kernel k = empirical_kernel_from_activations(
          *context, strategy.kind == DictionaryStrategy::Kind::Emp2);
      out.u = ridge_dictionary(k, alpha, {strategy.effective_lambda()});
      break;
    }
    case DictionaryStrategy::Kind::AE: {
      if (context->rows() != n_v)
        throw ShapeError("build_dictionary: AE features have " +
                         std::to_string(context->rows()) + " rows, weight space has " +
                         std::to_string(n_v));
      if (context->cols() < n_a)
        throw ConfigError("build_dictionary: AE context provides " +
                          std::to_string(context->cols()) + " features, need " +
                          std::to_string(n_a));
      out.u = context->slice_cols(0, n_a);
      break;
    }
    case DictionaryStrategy::Kind::RandFixU: {
      Rng rng(derive_seed(seed, 0x52616e64ULL));
      out.u = Matrix(n_v, n_a);
      for (double& v : out.u.raw()) v = rng.normal();
      // Unit-norm columns decouple the effective learning rate from n_v.
      for (std::size_t j = 0; j < n_a; ++j) {
        double s = 0.0;
        for (std::size_t i = 0; i < n_v; ++i) s += out.u(i, j) * out.u(i, j);
        const double inv = 1.0 / std::sqrt(s);
        for (std::size_t i = 0; i < n_v; ++i) out.u(i, j) *= inv;
      }
      break;
    }
    case DictionaryStrategy::Kind::RandCon: {
      if (n_a > n_v)
        throw ConfigError("build_dictionary: RandCon needs n_alpha <= n_v");
      out.u = Matrix(n_v, n_a);
      for (std::size_t j = 0; j < n_a; ++j) out.u(alpha.indices[j], j) = 1.0;
      break;
    }
    case DictionaryStrategy::Kind::LowRank: {
      Rng rng(derive_seed(seed, 0x4c6f77ULL));
      out.u = Matrix(n_v, n_a);
      const double scale = 1.0 / std::sqrt(static_cast<double>(n_a));
      for (double& v : out.u.raw()) v = rng.normal(0.0, scale);
      out.trainable = true;
      break;
    }
  }

  if (!out.u.all_finite())
    throw Error("build_dictionary: " + strategy.name() + " produced non-finite entries");
  return out;
}

Matrix predict_weights(const BuiltDictionary& dict, const Matrix& w_alpha) {
  if (w_alpha.rows() != dict.u.cols())
    throw ShapeError("predict_weights: coefficient rows " + std::to_string(w_alpha.rows()) +
                     " != dictionary columns " + std::to_string(dict.u.cols()));
  return matmul(dict.u, w_alpha);
}

}  // namespace dictnet
