#pragma once

#include <cstdint>
#include <vector>

#include "mgu/graph.hpp"

namespace mgu {

/// Planted-partition generator parameters.
struct SbmSpec {
  std::vector<std::size_t> blocks{50, 50};
  double p_in = 0.1;
  double p_out = 0.01;
  std::size_t feat_dim = 16;
  double mean_shift = 1.0;  // block b has mean mean_shift * e_{b mod feat_dim}
  double noise_std = 1.0;
  double label_noise = 0.0;  // fraction of train labels resampled uniformly
  double train_frac = 0.8;
  std::uint64_t seed = 0;

  /// Throws ConfigError naming the offending field.
  void validate() const;
};

/// Samples every pair independently, draws Gaussian block features, splits
/// train/test with `split(graph, train_frac, seed)` and then resamples the
/// labels of round(label_noise * |train|) train nodes uniformly over classes.
/// Each stage uses its own seed stream.
Graph gen_sbm(const SbmSpec& spec);

}  // namespace mgu
