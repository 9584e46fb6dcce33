#pragma once

#include <cmath>
#include <span>
#include <vector>

#include "mgu/graph.hpp"
#include "mgu/matrix.hpp"

namespace mgu {

/// Additive floor inside every log argument of a probability-space KL.
inline constexpr double kKlFloor = 1e-12;

/// KL(a || b) = sum_k a_k (ln(a_k + eps) - ln(b_k + eps)).
double kl_divergence(std::span<const double> a, std::span<const double> b);

/// Per-class mean posterior over `nodes`; `labels` is indexed by node id.
/// Result is C x C. Throws InvalidArgument naming the first empty class.
Matrix class_prototypes(const Matrix& probs, std::span<const NodeId> nodes,
                        std::span<const int> labels, std::size_t num_classes);

/// Prototypes over the graph's train nodes.
Matrix class_prototypes(const Matrix& probs, const Graph& graph);

/// Mean KL to the other-class prototypes minus KL to the true-class
/// prototype. Throws InvalidArgument when there is a single class.
double margin(std::span<const double> h, int y, const Matrix& prototypes);

inline double softplus(double x) {
  return (x > 0.0 ? x : 0.0) + std::log1p(std::exp(-std::abs(x)));
}

inline double sigmoid(double x) {
  if (x >= 0.0) return 1.0 / (1.0 + std::exp(-x));
  const double e = std::exp(x);
  return e / (1.0 + e);
}

}  // namespace mgu
