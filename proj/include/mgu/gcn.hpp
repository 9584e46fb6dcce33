#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "mgu/graph.hpp"
#include "mgu/matrix.hpp"

namespace mgu {

/// CSR sparse matrix with explicit values.
struct SparseMatrix {
  std::size_t n = 0;
  std::vector<std::uint64_t> offsets{0};
  std::vector<NodeId> cols;
  std::vector<double> vals;

  double at(NodeId r, NodeId c) const;
};

/// D^{-1/2} (A + I) D^{-1/2} with D the degree of A + I. Symmetric; an
/// isolated node gets a unit diagonal.
SparseMatrix normalize_adjacency(const Graph& graph);

/// Weights of the two-layer GCN. `tau` holds the learnable margin targets and
/// is only populated during unlearning.
struct ModelParams {
  Matrix w1;               // d x h
  std::vector<double> b1;  // h
  Matrix w2;               // h x C
  std::vector<double> b2;  // C
  std::optional<std::vector<double>> tau;

  static ModelParams zeros(std::size_t d, std::size_t h, std::size_t c);

  std::size_t input_dim() const { return w1.rows(); }
  std::size_t hidden_dim() const { return w1.cols(); }
  std::size_t num_classes() const { return w2.cols(); }
  bool all_finite() const;

  friend bool operator==(const ModelParams&, const ModelParams&) = default;
};

enum class OptimizerKind { Adam, Sgd };

struct TrainConfig {
  std::size_t hidden_dim = 64;
  int epochs = 200;
  double learning_rate = 0.01;
  double weight_decay = 5e-4;
  std::uint64_t seed = 0;
  OptimizerKind optimizer = OptimizerKind::Adam;

  void validate() const;
};

inline constexpr double kAdamBeta1 = 0.9;
inline constexpr double kAdamBeta2 = 0.999;
inline constexpr double kAdamEps = 1e-8;

/// Adam with the fixed constants above, or plain SGD. Parameter blocks are
/// registered positionally: the i-th span passed to step() must always refer
/// to the same tensor.
class Optimizer {
 public:
  Optimizer(OptimizerKind kind, double learning_rate) : kind_(kind), lr_(learning_rate) {}
  void step(const std::vector<std::span<double>>& params,
            const std::vector<std::span<const double>>& grads);

 private:
  OptimizerKind kind_;
  double lr_;
  long long t_ = 0;
  std::vector<std::vector<double>> m_, v_;
};

/// Class probabilities and the logits they came from.
struct Posteriors {
  Matrix probs;
  Matrix logits;
};

/// A graph prepared for repeated propagation: normalized adjacency plus the
/// nonzero pattern of the feature matrix.
class GcnInput {
 public:
  explicit GcnInput(const Graph& graph);

  const SparseMatrix& adjacency() const { return adj_; }
  std::size_t num_nodes() const { return adj_.n; }
  std::size_t feature_dim() const { return feature_dim_; }

  // Row r's nonzero feature columns and values, in ascending column order.
  std::span<const std::uint32_t> nz_cols(std::size_t r) const {
    return {nz_cols_.data() + nz_offsets_[r], nz_cols_.data() + nz_offsets_[r + 1]};
  }
  std::span<const double> nz_vals(std::size_t r) const {
    return {nz_vals_.data() + nz_offsets_[r], nz_vals_.data() + nz_offsets_[r + 1]};
  }

 private:
  SparseMatrix adj_;
  std::size_t feature_dim_ = 0;
  std::vector<std::uint64_t> nz_offsets_{0};
  std::vector<std::uint32_t> nz_cols_;
  std::vector<double> nz_vals_;
};

/// Intermediates of one forward pass, kept for the reverse pass.
struct ForwardCache {
  Matrix pre_hidden;  // Â X W1 + b1
  Matrix hidden;      // relu(pre_hidden)
  Matrix logits;      // Â H W2 + b2
  Matrix probs;       // row softmax of logits
};

ForwardCache forward_cached(const ModelParams& params, const GcnInput& input);
Posteriors forward(const ModelParams& params, const GcnInput& input);
Posteriors forward(const ModelParams& params, const Graph& graph);

/// Row softmax with max subtraction.
Matrix softmax_rows(const Matrix& logits);

/// Exact gradient of a scalar loss with respect to W1, b1, W2, b2, given the
/// loss gradient on the logits. The result has no tau.
ModelParams backward(const ModelParams& params, const GcnInput& input, const ForwardCache& cache,
                     const Matrix& logits_grad);
ModelParams backward(const ModelParams& params, const Graph& graph, const Matrix& logits_grad);

/// Glorot-uniform weights and zero biases drawn from SplitMix64(seed), W1
/// row-major first, then W2.
ModelParams glorot_init(std::size_t d, std::size_t h, std::size_t c, std::uint64_t seed);

/// Mean cross-entropy over `nodes` plus weight_decay * (|W1|^2 + |W2|^2).
/// Writes the logits gradient into `logits_grad` when non-null.
double training_loss(const ModelParams& params, const ForwardCache& cache,
                     std::span<const NodeId> nodes, std::span<const int> labels,
                     double weight_decay, Matrix* logits_grad);

/// Adds the weight-decay gradient 2 * weight_decay * W to `grads`.
void add_weight_decay_grad(const ModelParams& params, double weight_decay, ModelParams& grads);

struct TrainResult {
  ModelParams params;
  std::vector<double> losses;  // training loss before each epoch's update
};

/// Full-batch training on an explicit node list; `labels` is indexed by node id.
TrainResult train_on(const GcnInput& input, std::span<const NodeId> nodes,
                     std::span<const int> labels, std::size_t num_classes,
                     const TrainConfig& cfg);

/// Full-batch training on the graph's train mask. Throws NumericError naming
/// the epoch if the loss becomes non-finite.
ModelParams train(const Graph& graph, const TrainConfig& cfg);
TrainResult train_with_trace(const Graph& graph, const TrainConfig& cfg);

/// Index of the largest entry, lowest index on ties.
std::size_t argmax(std::span<const double> row);

/// Fraction of `nodes` whose argmax posterior equals the label in `graph`.
/// Posteriors come from `eval_graph` when given, else from `graph`. An empty
/// node set has accuracy 1.
double accuracy(const ModelParams& params, const Graph& graph, std::span<const NodeId> nodes,
                const Graph* eval_graph = nullptr);
double accuracy_from_probs(const Matrix& probs, const Graph& graph, std::span<const NodeId> nodes);

}  // namespace mgu
