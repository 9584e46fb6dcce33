#include "mgu/eval.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <set>

#include "mgu/errors.hpp"
#include "mgu/parallel.hpp"
#include "mgu/rng.hpp"
#include "mgu/stats.hpp"

namespace mgu {

namespace {

nlohmann::json pair_json(const ScorePair& p) {
  return {{"unlearned", p.unlearned}, {"retrained", p.retrained}};
}

ScorePair pair_from(const nlohmann::json& j) {
  return {j.at("unlearned").get<double>(), j.at("retrained").get<double>()};
}

void finish(EvalReport& r) {
  r.diff_deleted = std::abs(r.deleted.unlearned - r.deleted.retrained);
  r.diff_remaining = std::abs(r.remaining.unlearned - r.remaining.retrained);
  r.diff_test = std::abs(r.test.unlearned - r.test.retrained);
  r.tou = tou_product(r.diff_deleted, r.diff_remaining, r.diff_test);
}

ScorePair accuracies(const Matrix& probs_u, const Matrix& probs_r, const Graph& label_graph,
                     std::span<const NodeId> nodes) {
  return {accuracy_from_probs(probs_u, label_graph, nodes),
          accuracy_from_probs(probs_r, label_graph, nodes)};
}

// Remaining train and test scores shared by all three tasks.
void fill_retained(EvalReport& r, const ModelParams& u, const ModelParams& rt,
                   const Graph& graph_remaining) {
  const GcnInput input(graph_remaining);
  const auto pu = forward(u, input).probs;
  const auto pr = forward(rt, input).probs;
  r.remaining = accuracies(pu, pr, graph_remaining, graph_remaining.train_nodes());
  r.test = accuracies(pu, pr, graph_remaining, graph_remaining.test_nodes());
}

std::vector<double> centrality_means(const Graph& graph, CentralityMetric metric,
                                     const std::vector<NodeId>& a, const std::vector<NodeId>& b) {
  const auto c = centrality(graph, metric);
  auto mean_over = [&](const std::vector<NodeId>& nodes) {
    std::vector<double> xs;
    for (NodeId v : nodes) xs.push_back(c[v]);
    return stats::mean(xs);
  };
  return {mean_over(a), mean_over(b)};
}

}  // namespace

nlohmann::json report_to_json(const EvalReport& r) {
  return {{"task", to_string(r.task)},
          {"diff_deleted", r.diff_deleted},
          {"diff_remaining", r.diff_remaining},
          {"diff_test", r.diff_test},
          {"tou", r.tou},
          {"deleted", pair_json(r.deleted)},
          {"remaining", pair_json(r.remaining)},
          {"test", pair_json(r.test)},
          {"metadata", r.metadata}};
}

EvalReport report_from_json(const nlohmann::json& doc) {
  try {
    EvalReport r;
    r.task = request_kind_from_string(doc.at("task").get<std::string>());
    r.diff_deleted = doc.at("diff_deleted").get<double>();
    r.diff_remaining = doc.at("diff_remaining").get<double>();
    r.diff_test = doc.at("diff_test").get<double>();
    r.tou = doc.at("tou").get<double>();
    r.deleted = pair_from(doc.at("deleted"));
    r.remaining = pair_from(doc.at("remaining"));
    r.test = pair_from(doc.at("test"));
    if (doc.contains("metadata")) r.metadata = doc.at("metadata");
    return r;
  } catch (const nlohmann::json::exception& e) {
    throw SchemaError(std::string("eval report: ") + e.what());
  }
}

double tou_product(double diff_deleted, double diff_remaining, double diff_test) {
  return (1.0 - diff_deleted) * (1.0 - diff_remaining) * (1.0 - diff_test);
}

double diff_acc(const ModelParams& unlearned, const ModelParams& retrained,
                const Graph& graph_eval, std::span<const NodeId> nodes, const Graph* label_graph) {
  const Graph& labels = label_graph ? *label_graph : graph_eval;
  return std::abs(accuracy(unlearned, labels, nodes, &graph_eval) -
                  accuracy(retrained, labels, nodes, &graph_eval));
}

EvalReport tou_node(const ModelParams& unlearned, const ModelParams& retrained,
                    const Graph& graph_full, const Graph& graph_remaining,
                    const UnlearnRequest& request) {
  if (request.kind != RequestKind::Node) throw InvalidArgument("tou_node needs a node request");
  EvalReport r;
  r.task = RequestKind::Node;
  const GcnInput full(graph_full);
  r.deleted = accuracies(forward(unlearned, full).probs, forward(retrained, full).probs, graph_full,
                         request.nodes);
  fill_retained(r, unlearned, retrained, graph_remaining);
  finish(r);
  return r;
}

std::vector<Edge> sample_negative_pairs(const Graph& graph, std::size_t count, std::uint64_t seed) {
  std::vector<NodeId> labeled;
  for (NodeId v = 0; v < graph.num_nodes(); ++v) {
    if (graph.has_label(v)) labeled.push_back(v);
  }
  if (labeled.size() < 2) throw InvalidArgument("negative sampling needs two labeled nodes");
  SplitMix64 rng(seed);
  std::set<Edge> seen;
  std::vector<Edge> out;
  const std::size_t max_attempts = 1000 + 100 * count;
  for (std::size_t attempt = 0; out.size() < count; ++attempt) {
    if (attempt >= max_attempts) {
      throw InvalidArgument("could not draw " + std::to_string(count) + " distinct non-edges");
    }
    const NodeId a = labeled[rng.below(labeled.size())];
    const NodeId b = labeled[rng.below(labeled.size())];
    if (a == b || graph.has_edge(a, b)) continue;
    const Edge e = Edge::normalized(a, b);
    if (seen.insert(e).second) out.push_back(e);
  }
  return out;
}

double pair_score(const Matrix& probs, Edge e) {
  const auto a = probs.row(e.u);
  const auto b = probs.row(e.v);
  double dot = 0.0, na = 0.0, nb = 0.0;
  for (std::size_t k = 0; k < a.size(); ++k) {
    dot += a[k] * b[k];
    na += a[k] * a[k];
    nb += b[k] * b[k];
  }
  if (na == 0.0 || nb == 0.0) return 0.0;
  return dot / std::sqrt(na * nb);
}

double edge_mia(const ModelParams& params, const Graph& graph_remaining,
                const std::vector<Edge>& positives, const std::vector<Edge>& negatives) {
  if (positives.empty() || negatives.empty()) throw InvalidArgument("edge attack needs positive and negative pairs");
  const auto probs = forward(params, graph_remaining).probs;
  std::vector<double> pos, neg;
  for (const auto& e : positives) pos.push_back(pair_score(probs, e));
  for (const auto& e : negatives) neg.push_back(pair_score(probs, e));
  return stats::auc(pos, neg);
}

EvalReport tou_edge(const ModelParams& unlearned, const ModelParams& retrained,
                    const Graph& graph_full, const Graph& graph_remaining,
                    const UnlearnRequest& request, std::uint64_t negative_seed) {
  if (request.kind != RequestKind::Edge) throw InvalidArgument("tou_edge needs an edge request");
  EvalReport r;
  r.task = RequestKind::Edge;
  if (!request.edges.empty()) {
    const auto negatives = sample_negative_pairs(graph_full, request.edges.size(), negative_seed);
    r.deleted = {edge_mia(unlearned, graph_remaining, request.edges, negatives),
                 edge_mia(retrained, graph_remaining, request.edges, negatives)};
  }
  fill_retained(r, unlearned, retrained, graph_remaining);
  finish(r);
  r.metadata["negative_seed"] = negative_seed;
  return r;
}

EvalReport tou_feat(const ModelParams& unlearned, const ModelParams& retrained,
                    const Graph& graph_full, const Graph& graph_remaining,
                    const UnlearnRequest& request) {
  if (request.kind != RequestKind::Feature) throw InvalidArgument("tou_feat needs a feature request");
  EvalReport r;
  r.task = RequestKind::Feature;
  const std::span<const NodeId> owners = request.nodes;
  const Graph edgeless = graph_full.without_edges();
  const GcnInput with_structure(graph_full);
  const GcnInput without_structure(edgeless);
  const auto s1 = accuracies(forward(unlearned, with_structure).probs,
                             forward(retrained, with_structure).probs, graph_full, owners);
  const auto s2 = accuracies(forward(unlearned, without_structure).probs,
                             forward(retrained, without_structure).probs, graph_full, owners);
  r.deleted = {0.5 * (s1.unlearned + s2.unlearned), 0.5 * (s1.retrained + s2.retrained)};
  fill_retained(r, unlearned, retrained, graph_remaining);
  finish(r);
  // The deleted-set diff is the mean of per-setting diffs, not the diff of means.
  r.diff_deleted = 0.5 * (std::abs(s1.unlearned - s1.retrained) + std::abs(s2.unlearned - s2.retrained));
  r.tou = tou_product(r.diff_deleted, r.diff_remaining, r.diff_test);
  r.metadata["deleted_with_structure"] = pair_json(s1);
  r.metadata["deleted_without_structure"] = pair_json(s2);
  return r;
}

EvalReport evaluate(const ModelParams& unlearned, const ModelParams& retrained,
                    const Graph& graph_full, const UnlearnRequest& request,
                    std::uint64_t negative_seed) {
  const Graph remaining = apply_request(graph_full, request);
  switch (request.kind) {
    case RequestKind::Node: return tou_node(unlearned, retrained, graph_full, remaining, request);
    case RequestKind::Edge:
      return tou_edge(unlearned, retrained, graph_full, remaining, request, negative_seed);
    case RequestKind::Feature: return tou_feat(unlearned, retrained, graph_full, remaining, request);
  }
  throw InvalidArgument("unknown request kind");
}

const char* to_string(DifficultySetting s) {
  switch (s) {
    case DifficultySetting::Easy: return "easy";
    case DifficultySetting::Random: return "random";
    case DifficultySetting::Hard: return "hard";
    case DifficultySetting::Local: return "local";
    case DifficultySetting::Distant: return "distant";
  }
  return "?";
}

DifficultySetting difficulty_setting_from_string(const std::string& s) {
  for (auto d : {DifficultySetting::Easy, DifficultySetting::Random, DifficultySetting::Hard,
                 DifficultySetting::Local, DifficultySetting::Distant}) {
    if (s == to_string(d)) return d;
  }
  throw ConfigError("setting", "expected easy|random|hard|local|distant, got '" + s + "'");
}

const std::vector<NodeId>& DifficultySets::get(DifficultySetting s) const {
  switch (s) {
    case DifficultySetting::Easy: return low_mem;
    case DifficultySetting::Random: return random;
    case DifficultySetting::Hard: return high_mem;
    case DifficultySetting::Local: return local;
    case DifficultySetting::Distant: return distant;
  }
  return low_mem;
}

std::size_t difficulty_set_size(double fraction, std::size_t num_train) {
  if (!(fraction > 0.0 && fraction <= 1.0)) throw ConfigError("ratio", "must lie in (0, 1]");
  const double x = fraction * static_cast<double>(num_train);
  return static_cast<std::size_t>(std::ceil(x - 1e-9));
}

DifficultySets build_difficulty_sets(const std::vector<double>& scores, const Graph& graph,
                                     std::span<const NodeId> test_set, double fraction,
                                     std::uint64_t seed) {
  if (scores.size() != graph.num_nodes()) throw InvalidArgument("score vector length != n");
  const auto train = graph.train_nodes();
  const std::size_t size = difficulty_set_size(fraction, train.size());

  std::vector<NodeId> scored;
  for (NodeId v : train) {
    if (!std::isnan(scores[v])) scored.push_back(v);
  }
  if (scored.size() < size) {
    throw InvalidArgument("only " + std::to_string(scored.size()) + " train nodes have a score, need " +
                          std::to_string(size));
  }
  DifficultySets sets;
  auto asc = scored;
  std::stable_sort(asc.begin(), asc.end(), [&](NodeId a, NodeId b) { return scores[a] < scores[b]; });
  sets.low_mem.assign(asc.begin(), asc.begin() + static_cast<std::ptrdiff_t>(size));
  // Tail of the ascending ranking, so low and high never share a tied node.
  sets.high_mem.assign(asc.rbegin(), asc.rbegin() + static_cast<std::ptrdiff_t>(size));

  auto pool = train;
  SplitMix64 rng(seed);
  shuffle(pool, rng);
  sets.random.assign(pool.begin(), pool.begin() + static_cast<std::ptrdiff_t>(size));

  const auto dist = hop_distances(graph, test_set);
  auto near = train;
  std::stable_sort(near.begin(), near.end(), [&](NodeId a, NodeId b) { return dist[a] < dist[b]; });
  sets.local.assign(near.begin(), near.begin() + static_cast<std::ptrdiff_t>(size));
  auto far = train;
  std::stable_sort(far.begin(), far.end(), [&](NodeId a, NodeId b) { return dist[a] > dist[b]; });
  sets.distant.assign(far.begin(), far.begin() + static_cast<std::ptrdiff_t>(size));
  return sets;
}

std::vector<ImpactRow> generalization_impact(const Graph& graph, const DifficultySets& sets,
                                             const std::vector<DifficultySetting>& settings,
                                             const std::vector<double>& ratios,
                                             const TrainConfig& train_cfg,
                                             const std::vector<std::uint64_t>& seeds,
                                             std::size_t workers) {
  if (seeds.empty()) throw ConfigError("seeds", "need at least one seed");
  const auto test = graph.test_nodes();
  const std::size_t num_train = graph.train_nodes().size();

  std::vector<double> base(seeds.size());
  parallel_for(seeds.size(), workers, [&](std::size_t s) {
    TrainConfig tc = train_cfg;
    tc.seed = seeds[s];
    base[s] = accuracy(train(graph, tc), graph, test);
  });

  std::vector<ImpactRow> rows;
  for (auto setting : settings) {
    for (double ratio : ratios) {
      ImpactRow row;
      row.setting = setting;
      row.ratio = ratio;
      row.deltas.assign(seeds.size(), 0.0);
      rows.push_back(std::move(row));
    }
  }
  const std::size_t tasks = rows.size() * seeds.size();
  parallel_for(tasks, workers, [&](std::size_t task) {
    auto& row = rows[task / seeds.size()];
    const std::size_t s = task % seeds.size();
    const std::size_t count = row.ratio == 0.0 ? 0 : difficulty_set_size(row.ratio, num_train);
    if (count == 0) return;
    const auto& set = sets.get(row.setting);
    if (count > set.size()) {
      throw InvalidArgument("ratio exceeds the size of the " + std::string(to_string(row.setting)) + " set");
    }
    std::vector<NodeId> prefix(set.begin(), set.begin() + static_cast<std::ptrdiff_t>(count));
    TrainConfig tc = train_cfg;
    tc.seed = seeds[s];
    const Graph reduced = apply_request(graph, UnlearnRequest::node_deletion(std::move(prefix)));
    row.deltas[s] = accuracy(train(reduced, tc), graph, test, &reduced) - base[s];
  });
  for (auto& row : rows) {
    row.mean_delta = stats::mean(row.deltas);
    std::vector<double> abs;
    for (double d : row.deltas) abs.push_back(std::abs(d));
    row.mean_abs_delta = stats::mean(abs);
  }
  return rows;
}

std::vector<CentralityRow> centrality_contrast(const Graph& graph, const DifficultySets& sets) {
  std::vector<CentralityRow> rows;
  for (auto metric : {CentralityMetric::Degree, CentralityMetric::PageRank, CentralityMetric::KCore}) {
    const auto m = centrality_means(graph, metric, sets.low_mem, sets.high_mem);
    CentralityRow row{metric, m[0], m[1], 1.0};
    if (m[1] != 0.0) {
      row.ratio = m[0] / m[1];
    } else if (m[0] != 0.0) {
      row.ratio = std::numeric_limits<double>::infinity();
    }
    rows.push_back(row);
  }
  return rows;
}

}  // namespace mgu
