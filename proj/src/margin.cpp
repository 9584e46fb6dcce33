#include "mgu/margin.hpp"

#include <cmath>
#include <string>

#include "mgu/errors.hpp"

namespace mgu {

double kl_divergence(std::span<const double> a, std::span<const double> b) {
  double kl = 0.0;
  for (std::size_t k = 0; k < a.size(); ++k) {
    kl += a[k] * (std::log(a[k] + kKlFloor) - std::log(b[k] + kKlFloor));
  }
  return kl;
}

Matrix class_prototypes(const Matrix& probs, std::span<const NodeId> nodes,
                        std::span<const int> labels, std::size_t num_classes) {
  Matrix protos(num_classes, probs.cols());
  std::vector<std::size_t> count(num_classes, 0);
  for (NodeId v : nodes) {
    const auto y = static_cast<std::size_t>(labels[v]);
    auto dst = protos.row(y);
    const auto h = probs.row(v);
    for (std::size_t k = 0; k < dst.size(); ++k) dst[k] += h[k];
    ++count[y];
  }
  for (std::size_t c = 0; c < num_classes; ++c) {
    if (count[c] == 0) {
      throw InvalidArgument("class " + std::to_string(c) + " has no training node for its prototype");
    }
    for (auto& x : protos.row(c)) x /= static_cast<double>(count[c]);
  }
  return protos;
}

Matrix class_prototypes(const Matrix& probs, const Graph& graph) {
  const auto nodes = graph.train_nodes();
  return class_prototypes(probs, nodes, graph.labels(),
                          static_cast<std::size_t>(graph.num_classes()));
}

double margin(std::span<const double> h, int y, const Matrix& prototypes) {
  const std::size_t c = prototypes.rows();
  if (c < 2) throw InvalidArgument("margin is undefined for fewer than two classes");
  double others = 0.0;
  for (std::size_t k = 0; k < c; ++k) {
    if (k != static_cast<std::size_t>(y)) others += kl_divergence(h, prototypes.row(k));
  }
  return others / static_cast<double>(c - 1) -
         kl_divergence(h, prototypes.row(static_cast<std::size_t>(y)));
}

}  // namespace mgu
