#include "dictnet/metrics.hpp"

#include "dictnet/error.hpp"

namespace dictnet {

ParamReport count_parameters(const Network& net) {
  ParamReport r;
  for (const auto& layer : net.layers) {
    const LayerCounts c = layer->counts();
    r.layers.push_back({layer->kind(), c.dynamic, c.static_count, c.full_equiv});
    r.dynamic += c.dynamic;
    r.static_count += c.static_count;
    r.full_equiv += c.full_equiv;
  }
  r.fraction_dynamic =
      r.full_equiv == 0 ? 0.0
                        : static_cast<double>(r.dynamic) / static_cast<double>(r.full_equiv);
  return r;
}

double accuracy(const std::vector<int>& predictions, const std::vector<int>& labels) {
  if (predictions.size() != labels.size())
    throw ShapeError("accuracy: prediction count != label count");
  if (predictions.empty()) throw DataError("accuracy: empty input");
  std::size_t correct = 0;
  for (std::size_t i = 0; i < predictions.size(); ++i)
    if (predictions[i] == labels[i]) ++correct;
  return static_cast<double>(correct) / static_cast<double>(predictions.size());
}

}  // namespace dictnet
