#pragma once

#include <cstdint>
#include <limits>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "mgu/matrix.hpp"

namespace mgu {

using NodeId = std::uint32_t;

inline constexpr int kNoLabel = -1;

/// Undirected edge stored with u < v.
struct Edge {
  NodeId u = 0;
  NodeId v = 0;

  static Edge normalized(NodeId a, NodeId b) { return a < b ? Edge{a, b} : Edge{b, a}; }
  friend auto operator<=>(const Edge&, const Edge&) = default;
};

/// Immutable node-classification graph.
///
/// Adjacency is a symmetric CSR with sorted neighbor lists, no self-loops and
/// no duplicates. Labels are dense class ids in [0, num_classes) or kNoLabel.
/// Train and test masks are disjoint and every train node is labeled. All
/// surgery returns a new Graph; node ids never change.
class Graph {
 public:
  Graph() = default;

  /// Builds from an arbitrary undirected edge list: symmetrizes, drops
  /// self-loops and duplicates. Masks start empty.
  static Graph from_edges(std::size_t num_nodes, const std::vector<Edge>& edges,
                          Matrix features, std::vector<int> labels, int num_classes);

  /// Builds from raw CSR arrays and masks; throws SchemaError on any
  /// invariant violation.
  static Graph from_csr(std::vector<std::uint64_t> offsets, std::vector<NodeId> targets,
                        Matrix features, std::vector<int> labels, int num_classes,
                        std::vector<std::uint8_t> train_mask,
                        std::vector<std::uint8_t> test_mask);

  std::size_t num_nodes() const { return labels_.size(); }
  std::size_t num_edges() const { return targets_.size() / 2; }
  std::size_t feature_dim() const { return features_.cols(); }
  int num_classes() const { return num_classes_; }

  std::span<const NodeId> neighbors(NodeId v) const {
    return {targets_.data() + offsets_[v], targets_.data() + offsets_[v + 1]};
  }
  std::size_t degree(NodeId v) const { return offsets_[v + 1] - offsets_[v]; }
  bool has_edge(NodeId u, NodeId v) const;

  const std::vector<std::uint64_t>& csr_offsets() const { return offsets_; }
  const std::vector<NodeId>& csr_targets() const { return targets_; }
  const Matrix& features() const { return features_; }
  const std::vector<int>& labels() const { return labels_; }
  int label(NodeId v) const { return labels_[v]; }
  bool has_label(NodeId v) const { return labels_[v] != kNoLabel; }

  const std::vector<std::uint8_t>& train_mask() const { return train_mask_; }
  const std::vector<std::uint8_t>& test_mask() const { return test_mask_; }
  bool is_train(NodeId v) const { return train_mask_[v] != 0; }
  bool is_test(NodeId v) const { return test_mask_[v] != 0; }

  /// Train / test node ids in ascending order.
  std::vector<NodeId> train_nodes() const;
  std::vector<NodeId> test_nodes() const;

  /// Edges with u < v in CSR order.
  std::vector<Edge> edge_list() const;

  Graph with_masks(std::vector<std::uint8_t> train_mask,
                   std::vector<std::uint8_t> test_mask) const;
  Graph with_features(Matrix features) const;
  /// Same nodes, labels, masks and features, no edges.
  Graph without_edges() const;

  friend bool operator==(const Graph&, const Graph&) = default;

 private:
  void validate() const;

  std::vector<std::uint64_t> offsets_{0};
  std::vector<NodeId> targets_;
  Matrix features_;
  std::vector<int> labels_;
  int num_classes_ = 0;
  std::vector<std::uint8_t> train_mask_;
  std::vector<std::uint8_t> test_mask_;
};

enum class RequestKind { Node, Edge, Feature };

const char* to_string(RequestKind kind);
RequestKind request_kind_from_string(const std::string& s);

/// A typed deletion set: nodes, edges or feature owners.
struct UnlearnRequest {
  RequestKind kind = RequestKind::Node;
  std::vector<NodeId> nodes;  // Node / Feature kinds, sorted unique
  std::vector<Edge> edges;    // Edge kind, normalized, sorted unique

  static UnlearnRequest node_deletion(std::vector<NodeId> nodes);
  static UnlearnRequest edge_deletion(std::vector<Edge> edges);
  static UnlearnRequest feature_deletion(std::vector<NodeId> owners);

  bool empty() const { return nodes.empty() && edges.empty(); }

  /// Throws InvalidArgument when a referenced node/edge does not exist or a
  /// node/feature target is not train-masked.
  void validate(const Graph& graph) const;
};

/// Removes the requested elements. Node: drops incident edges, the label and
/// train membership (rows stay, node becomes an unlabeled isolate). Edge:
/// drops both CSR directions. Feature: zeroes the owners' feature rows.
Graph apply_request(const Graph& graph, const UnlearnRequest& request);

/// Seeded uniform train/test split; |train| = round(train_frac * n).
Graph split(const Graph& graph, double train_frac, std::uint64_t seed);

inline constexpr std::uint32_t kUnreachable = std::numeric_limits<std::uint32_t>::max();

/// Multi-source BFS hop counts; kUnreachable marks nodes with no path.
std::vector<std::uint32_t> hop_distances(const Graph& graph, std::span<const NodeId> sources);

/// Nodes at hop distance 1..max_hops from v, with their distance, ordered by
/// node id.
std::vector<std::pair<NodeId, std::uint32_t>> nodes_within(const Graph& graph, NodeId v,
                                                           std::uint32_t max_hops);

}  // namespace mgu
