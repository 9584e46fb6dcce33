#pragma once

#include <cstdint>
#include <string>
#include <utility>
#include <vector>

#include "json.hpp"

#include "mgu/gcn.hpp"
#include "mgu/graph.hpp"

namespace mgu {

enum class MemEstimator { ExactLoo, Subsample };
enum class ExclusionMode { LabelOnly, NodeRemoval };

const char* to_string(MemEstimator e);
const char* to_string(ExclusionMode m);
MemEstimator mem_estimator_from_string(const std::string& s);
ExclusionMode exclusion_mode_from_string(const std::string& s);

struct MemConfig {
  double alpha = 0.5;
  double beta = 0.5;
  std::uint32_t k_hops = 2;
  MemEstimator estimator = MemEstimator::ExactLoo;
  std::size_t num_seeds = 5;               // K, exact estimator
  std::size_t num_subsample_models = 200;  // M, subsample estimator
  double subsample_keep_frac = 0.7;
  ExclusionMode exclusion_mode = ExclusionMode::LabelOnly;
  std::uint64_t seed = 0;  // root of every model seed
  std::size_t workers = 1;

  void validate() const;
};

/// One training node's memorization decomposition. For the subsample
/// estimator a node whose inclusion partition is empty is `defined = false`
/// and carries NaN scores.
struct MemRow {
  NodeId node = 0;
  double delta_self = 0.0;  // |Pr_with - Pr_without| on the node itself
  double delta_nbr = 0.0;   // distance-weighted neighbor prediction change
  double mem = 0.0;         // alpha * delta_self + (1 - alpha) * delta_nbr
  bool defined = true;
};

struct MemTable {
  std::vector<MemRow> rows;  // ascending node id, train nodes only
  MemConfig config;
  std::size_t num_models = 0;  // trainings performed
  std::vector<std::uint64_t> model_seeds;

  /// Scores indexed by node id; NaN for non-train or undefined nodes.
  std::vector<double> mem_by_node(std::size_t num_nodes) const;
};

/// Exponentially decaying weights beta^dist over nodes at hop distance
/// 1..k from v, normalized to sum to 1. When `eligible` is given only nodes
/// with eligible[node] != 0 participate. Empty when no node qualifies.
std::vector<std::pair<NodeId, double>> neighbor_weights(const Graph& graph, NodeId v,
                                                        std::uint32_t k, double beta,
                                                        const std::vector<std::uint8_t>* eligible = nullptr);

/// Leave-one-out memorization: K models on the full train set (shared across
/// targets) and K models per excluded node, seeds reused pairwise.
MemTable estimate_mem_exact(const Graph& graph, const MemConfig& cfg, const TrainConfig& train_cfg);

/// Subsample memorization: M models on random keep_frac subsets, partitioned
/// by inclusion of each target node.
MemTable estimate_mem_subsample(const Graph& graph, const MemConfig& cfg,
                                const TrainConfig& train_cfg);

MemTable estimate_mem(const Graph& graph, const MemConfig& cfg, const TrainConfig& train_cfg);

/// Node difficulty is the memorization score itself (NaN stays NaN).
std::vector<double> node_difficulty(const MemTable& table, std::size_t num_nodes);

enum class MissingScorePolicy { Zero, SkipEdge };

struct EdgeScore {
  Edge edge;
  double score = 0.0;
};

/// h(u)/sqrt(deg u) + h(v)/sqrt(deg v) for every edge of the graph. Endpoints
/// without a score contribute 0 or drop the edge, per `policy`.
std::vector<EdgeScore> edge_difficulty(const Graph& graph, const std::vector<double>& node_scores,
                                       MissingScorePolicy policy = MissingScorePolicy::Zero);
double edge_difficulty(const Graph& graph, const std::vector<double>& node_scores, Edge e);

/// Mean node score over each feature's owner set restricted to train nodes.
/// Throws InvalidArgument when an owner set has no scored train node.
std::vector<double> feature_difficulty(const Graph& graph, const std::vector<double>& node_scores,
                                       const std::vector<std::vector<NodeId>>& owners);

/// Per-node feature-row deletion: each node owns its own row.
std::vector<std::vector<NodeId>> row_owner_sets(const Graph& graph);

enum class ProxyOrientation { AsWritten, Negated };
const char* to_string(ProxyOrientation o);
ProxyOrientation proxy_orientation_from_string(const std::string& s);

struct MarginProxy {
  std::vector<double> scores;  // by node id, NaN outside the train set
  ProxyOrientation orientation = ProxyOrientation::AsWritten;
};

/// Training-free difficulty from the frozen original model's margins on the
/// full graph.
MarginProxy margin_proxy_difficulty(const ModelParams& original, const Graph& graph,
                                    ProxyOrientation orientation = ProxyOrientation::AsWritten);

std::string mem_table_csv(const MemTable& table);
nlohmann::json mem_table_metadata(const MemTable& table);
/// Parses `node_id,delta_self,delta_nbr,mem`; undefined rows hold "nan".
MemTable mem_table_from_csv(const std::string& text);
std::string edge_scores_csv(const std::vector<EdgeScore>& scores);
std::string feature_scores_csv(const std::vector<double>& scores,
                               const std::vector<std::vector<NodeId>>& owners);

}  // namespace mgu
