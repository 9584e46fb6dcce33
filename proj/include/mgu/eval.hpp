#pragma once

#include <cstdint>
#include <string>
#include <utility>
#include <vector>

#include "json.hpp"

#include "mgu/centrality.hpp"
#include "mgu/gcn.hpp"
#include "mgu/graph.hpp"

namespace mgu {

/// Scores of the unlearned and the retrained model on one evaluation set:
/// accuracies, or attack AUCs for deleted edges.
struct ScorePair {
  double unlearned = 1.0;
  double retrained = 1.0;
};

struct EvalReport {
  RequestKind task = RequestKind::Node;
  double diff_deleted = 0.0;
  double diff_remaining = 0.0;
  double diff_test = 0.0;
  double tou = 1.0;
  ScorePair deleted, remaining, test;
  nlohmann::json metadata = nlohmann::json::object();
};

nlohmann::json report_to_json(const EvalReport& report);
EvalReport report_from_json(const nlohmann::json& doc);

double tou_product(double diff_deleted, double diff_remaining, double diff_test);

/// |acc(u) - acc(r)| on `nodes`, both models fed `graph_eval`. Labels come
/// from `label_graph` when given, else from `graph_eval`.
double diff_acc(const ModelParams& unlearned, const ModelParams& retrained,
                const Graph& graph_eval, std::span<const NodeId> nodes,
                const Graph* label_graph = nullptr);

EvalReport tou_node(const ModelParams& unlearned, const ModelParams& retrained,
                    const Graph& graph_full, const Graph& graph_remaining,
                    const UnlearnRequest& request);

/// `count` distinct node pairs drawn uniformly among non-edges of `graph`
/// whose endpoints are both labeled.
std::vector<Edge> sample_negative_pairs(const Graph& graph, std::size_t count, std::uint64_t seed);

/// Cosine similarity of the endpoints' posteriors as the attack score.
double pair_score(const Matrix& probs, Edge e);

/// AUC of the posterior-similarity attack separating `positives` from
/// `negatives`, the model fed `graph_remaining`.
double edge_mia(const ModelParams& params, const Graph& graph_remaining,
                const std::vector<Edge>& positives, const std::vector<Edge>& negatives);

EvalReport tou_edge(const ModelParams& unlearned, const ModelParams& retrained,
                    const Graph& graph_full, const Graph& graph_remaining,
                    const UnlearnRequest& request, std::uint64_t negative_seed);

EvalReport tou_feat(const ModelParams& unlearned, const ModelParams& retrained,
                    const Graph& graph_full, const Graph& graph_remaining,
                    const UnlearnRequest& request);

/// Dispatches on the request kind; graph_remaining is derived from the request.
EvalReport evaluate(const ModelParams& unlearned, const ModelParams& retrained,
                    const Graph& graph_full, const UnlearnRequest& request,
                    std::uint64_t negative_seed);

enum class DifficultySetting { Easy, Random, Hard, Local, Distant };
const char* to_string(DifficultySetting s);
DifficultySetting difficulty_setting_from_string(const std::string& s);

/// Five equally sized deletion candidate sets, each in rank order: low_mem by
/// ascending score, high_mem by descending score (the reversed low ranking,
/// so ties go to the higher id first), local by ascending and
/// distant by descending hop distance to the test set, random in draw order.
struct DifficultySets {
  std::vector<NodeId> low_mem, high_mem, random, local, distant;

  const std::vector<NodeId>& get(DifficultySetting s) const;
};

/// ceil(fraction * |train|), guarded against representation error.
std::size_t difficulty_set_size(double fraction, std::size_t num_train);

/// `scores` is indexed by node id; NaN scores are left out of the score
/// rankings. Ties break by node id; unreachable nodes count as farthest.
DifficultySets build_difficulty_sets(const std::vector<double>& scores, const Graph& graph,
                                     std::span<const NodeId> test_set, double fraction,
                                     std::uint64_t seed);

struct ImpactRow {
  DifficultySetting setting = DifficultySetting::Easy;
  double ratio = 0.0;
  std::vector<double> deltas;  // retrained minus original test accuracy, per seed
  double mean_delta = 0.0;
  double mean_abs_delta = 0.0;
};

/// Retrains after deleting the first ceil(ratio * |train|) nodes of each set
/// and records the test-accuracy change against the original model trained
/// with the same seed.
std::vector<ImpactRow> generalization_impact(const Graph& graph, const DifficultySets& sets,
                                             const std::vector<DifficultySetting>& settings,
                                             const std::vector<double>& ratios,
                                             const TrainConfig& train_cfg,
                                             const std::vector<std::uint64_t>& seeds,
                                             std::size_t workers = 1);

struct CentralityRow {
  CentralityMetric metric = CentralityMetric::Degree;
  double easy = 0.0;
  double hard = 0.0;
  double ratio = 1.0;  // easy / hard
};

/// Mean centrality of low_mem (easy) against high_mem (hard) for degree,
/// PageRank and k-core.
std::vector<CentralityRow> centrality_contrast(const Graph& graph, const DifficultySets& sets);

}  // namespace mgu
