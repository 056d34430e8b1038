#pragma once

#include <string>
#include <vector>

#include "dictnet/layer.hpp"

namespace dictnet {

/// Dynamic vs. static parameter accounting for a network. "Full equivalent"
/// is the unfactored n_v x n_h (+ bias) size of each layer so that
/// fraction_dynamic matches a proportion-of-parameters-learned axis.
struct ParamReport {
  struct Entry {
    std::string kind;
    std::size_t dynamic = 0;
    std::size_t static_count = 0;
    std::size_t full_equiv = 0;
  };
  std::vector<Entry> layers;
  std::size_t dynamic = 0;
  std::size_t static_count = 0;
  std::size_t full_equiv = 0;
  double fraction_dynamic = 0.0;  // dynamic / full_equiv
};

ParamReport count_parameters(const Network& net);

/// Fraction of predictions equal to the labels, in [0, 1]. Throws on length
/// mismatch or empty input.
double accuracy(const std::vector<int>& predictions, const std::vector<int>& labels);

}  // namespace dictnet
