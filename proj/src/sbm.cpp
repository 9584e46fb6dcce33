#include "mgu/sbm.hpp"

#include <cmath>

#include "mgu/errors.hpp"
#include "mgu/rng.hpp"

namespace mgu {

void SbmSpec::validate() const {
  if (blocks.empty()) throw ConfigError("blocks", "at least one block required");
  for (auto b : blocks) {
    if (b < 1) throw ConfigError("blocks", "block sizes must be >= 1");
  }
  if (!(p_in >= 0.0 && p_in <= 1.0)) throw ConfigError("p_in", "must lie in [0, 1]");
  if (!(p_out >= 0.0 && p_out <= 1.0)) throw ConfigError("p_out", "must lie in [0, 1]");
  if (feat_dim < 1) throw ConfigError("feat_dim", "must be >= 1");
  if (!(noise_std >= 0.0)) throw ConfigError("noise_std", "must be >= 0");
  if (!(label_noise >= 0.0 && label_noise < 1.0)) throw ConfigError("label_noise", "must lie in [0, 1)");
  if (!(train_frac > 0.0 && train_frac < 1.0)) throw ConfigError("train_frac", "must lie in (0, 1)");
}

Graph gen_sbm(const SbmSpec& spec) {
  spec.validate();
  std::size_t n = 0;
  std::vector<int> block_of;
  for (std::size_t b = 0; b < spec.blocks.size(); ++b) {
    n += spec.blocks[b];
    block_of.insert(block_of.end(), spec.blocks[b], static_cast<int>(b));
  }

  SplitMix64 edge_rng(derive_seed(spec.seed, 0));
  std::vector<Edge> edges;
  for (std::size_t u = 0; u < n; ++u) {
    for (std::size_t v = u + 1; v < n; ++v) {
      const double p = block_of[u] == block_of[v] ? spec.p_in : spec.p_out;
      if (edge_rng.bernoulli(p)) edges.push_back({static_cast<NodeId>(u), static_cast<NodeId>(v)});
    }
  }

  SplitMix64 feat_rng(derive_seed(spec.seed, 1));
  Matrix x(n, spec.feat_dim);
  for (std::size_t v = 0; v < n; ++v) {
    for (std::size_t j = 0; j < spec.feat_dim; ++j) x(v, j) = spec.noise_std * feat_rng.normal();
    x(v, static_cast<std::size_t>(block_of[v]) % spec.feat_dim) += spec.mean_shift;
  }

  const int num_classes = static_cast<int>(spec.blocks.size());
  Graph g = Graph::from_edges(n, edges, std::move(x), block_of, num_classes);
  g = split(g, spec.train_frac, derive_seed(spec.seed, 2));
  if (spec.label_noise <= 0.0) return g;

  auto train = g.train_nodes();
  SplitMix64 noise_rng(derive_seed(spec.seed, 3));
  shuffle(train, noise_rng);
  const auto n_noisy =
      static_cast<std::size_t>(std::llround(spec.label_noise * static_cast<double>(train.size())));
  auto labels = g.labels();
  for (std::size_t i = 0; i < n_noisy; ++i) {
    labels[train[i]] = static_cast<int>(noise_rng.below(static_cast<std::uint64_t>(num_classes)));
  }
  return Graph::from_csr(g.csr_offsets(), g.csr_targets(), g.features(), std::move(labels),
                         num_classes, g.train_mask(), g.test_mask());
}

}  // namespace mgu
