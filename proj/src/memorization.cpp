#include "mgu/memorization.hpp"

#include <charconv>
#include <cmath>
#include <limits>
#include <sstream>

#include <spdlog/spdlog.h>

#include "mgu/errors.hpp"
#include "mgu/margin.hpp"
#include "mgu/parallel.hpp"
#include "mgu/rng.hpp"

namespace mgu {

namespace {

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

std::string fmt_double(double x) {
  if (std::isnan(x)) return "nan";
  char buf[32];
  const auto res = std::to_chars(buf, buf + sizeof buf, x);
  return std::string(buf, res.ptr);
}

// Which of `nodes` a model classifies correctly, as 0/1 per position.
std::vector<std::uint8_t> correct_vector(const ModelParams& params, const GcnInput& eval_input,
                                         const std::vector<NodeId>& nodes,
                                         const std::vector<int>& labels) {
  const auto post = forward(params, eval_input);
  std::vector<std::uint8_t> out(nodes.size());
  for (std::size_t i = 0; i < nodes.size(); ++i) {
    out[i] = argmax(post.probs.row(nodes[i])) == static_cast<std::size_t>(labels[nodes[i]]);
  }
  return out;
}

// Neighborhood of every train node: (position in train list, weight).
std::vector<std::vector<std::pair<std::size_t, double>>> train_neighborhoods(
    const Graph& graph, const std::vector<NodeId>& train, const MemConfig& cfg) {
  std::vector<std::size_t> pos(graph.num_nodes(), 0);
  for (std::size_t i = 0; i < train.size(); ++i) pos[train[i]] = i;
  std::vector<std::vector<std::pair<std::size_t, double>>> out(train.size());
  for (std::size_t i = 0; i < train.size(); ++i) {
    for (const auto& [node, w] : neighbor_weights(graph, train[i], cfg.k_hops, cfg.beta, &graph.train_mask())) {
      out[i].emplace_back(pos[node], w);
    }
  }
  return out;
}

MemRow make_row(NodeId node, double pr_with_self, double pr_without_self, double delta_nbr,
                double alpha) {
  MemRow row;
  row.node = node;
  row.delta_self = std::abs(pr_with_self - pr_without_self);
  row.delta_nbr = delta_nbr;
  row.mem = alpha * row.delta_self + (1.0 - alpha) * row.delta_nbr;
  return row;
}

}  // namespace

const char* to_string(MemEstimator e) {
  return e == MemEstimator::ExactLoo ? "exact_loo" : "subsample";
}

const char* to_string(ExclusionMode m) {
  return m == ExclusionMode::LabelOnly ? "label_only" : "node_removal";
}

MemEstimator mem_estimator_from_string(const std::string& s) {
  if (s == "exact_loo") return MemEstimator::ExactLoo;
  if (s == "subsample") return MemEstimator::Subsample;
  throw ConfigError("estimator", "expected exact_loo|subsample, got '" + s + "'");
}

ExclusionMode exclusion_mode_from_string(const std::string& s) {
  if (s == "label_only") return ExclusionMode::LabelOnly;
  if (s == "node_removal") return ExclusionMode::NodeRemoval;
  throw ConfigError("exclusion_mode", "expected label_only|node_removal, got '" + s + "'");
}

void MemConfig::validate() const {
  if (!(alpha >= 0.0 && alpha <= 1.0)) throw ConfigError("alpha", "must lie in [0, 1]");
  if (!(beta > 0.0 && beta <= 1.0)) throw ConfigError("beta", "must lie in (0, 1]");
  if (k_hops < 1) throw ConfigError("k_hops", "must be >= 1");
  if (estimator == MemEstimator::ExactLoo && num_seeds == 0) {
    throw ConfigError("num_seeds", "exact estimator needs K >= 1");
  }
  if (estimator == MemEstimator::Subsample) {
    if (num_subsample_models < 10) throw ConfigError("num_subsample_models", "must be >= 10");
    if (!(subsample_keep_frac > 0.0 && subsample_keep_frac <= 1.0)) {
      throw ConfigError("subsample_keep_frac", "must lie in (0, 1]");
    }
  }
}

std::vector<double> MemTable::mem_by_node(std::size_t num_nodes) const {
  std::vector<double> out(num_nodes, kNaN);
  for (const auto& r : rows) out[r.node] = r.defined ? r.mem : kNaN;
  return out;
}

std::vector<std::pair<NodeId, double>> neighbor_weights(const Graph& graph, NodeId v,
                                                        std::uint32_t k, double beta,
                                                        const std::vector<std::uint8_t>* eligible) {
  std::vector<std::pair<NodeId, double>> out;
  double total = 0.0;
  for (const auto& [node, dist] : nodes_within(graph, v, k)) {
    if (eligible && !(*eligible)[node]) continue;
    const double w = std::pow(beta, static_cast<double>(dist));
    out.emplace_back(node, w);
    total += w;
  }
  for (auto& [node, w] : out) w /= total;
  return out;
}

MemTable estimate_mem_exact(const Graph& graph, const MemConfig& cfg, const TrainConfig& train_cfg) {
  MemConfig c = cfg;
  c.estimator = MemEstimator::ExactLoo;
  c.validate();
  train_cfg.validate();
  const auto train = graph.train_nodes();
  if (train.empty()) throw InvalidArgument("memorization needs training nodes");
  const std::size_t t = train.size();
  const std::size_t K = c.num_seeds;
  const auto num_classes = static_cast<std::size_t>(graph.num_classes());
  const GcnInput full_input(graph);

  MemTable table;
  table.config = c;
  for (std::size_t k = 0; k < K; ++k) table.model_seeds.push_back(derive_seed(c.seed, k));

  auto seeded = [&](std::size_t k) {
    TrainConfig tc = train_cfg;
    tc.seed = table.model_seeds[k];
    return tc;
  };

  std::vector<std::vector<std::uint8_t>> with(K);
  parallel_for(K, c.workers, [&](std::size_t k) {
    const auto params = train_on(full_input, train, graph.labels(), num_classes, seeded(k)).params;
    with[k] = correct_vector(params, full_input, train, graph.labels());
  });

  // without[i * K + k]: correctness of every train node when train[i] is excluded.
  std::vector<std::vector<std::uint8_t>> without(t * K);
  parallel_for(t * K, c.workers, [&](std::size_t task) {
    const std::size_t i = task / K;
    const std::size_t k = task % K;
    ModelParams params;
    if (c.exclusion_mode == ExclusionMode::LabelOnly) {
      std::vector<NodeId> reduced;
      reduced.reserve(t - 1);
      for (std::size_t j = 0; j < t; ++j) {
        if (j != i) reduced.push_back(train[j]);
      }
      if (reduced.empty()) throw InvalidArgument("cannot exclude the only training node");
      params = train_on(full_input, reduced, graph.labels(), num_classes, seeded(k)).params;
    } else {
      const Graph reduced = apply_request(graph, UnlearnRequest::node_deletion({train[i]}));
      params = mgu::train(reduced, seeded(k));
    }
    without[task] = correct_vector(params, full_input, train, graph.labels());
  });
  table.num_models = K + t * K;

  std::vector<double> pr_with(t, 0.0);
  for (std::size_t j = 0; j < t; ++j) {
    for (std::size_t k = 0; k < K; ++k) pr_with[j] += with[k][j];
    pr_with[j] /= static_cast<double>(K);
  }
  const auto hoods = train_neighborhoods(graph, train, c);
  auto pr_without = [&](std::size_t i, std::size_t j) {
    double s = 0.0;
    for (std::size_t k = 0; k < K; ++k) s += without[i * K + k][j];
    return s / static_cast<double>(K);
  };
  table.rows.reserve(t);
  for (std::size_t i = 0; i < t; ++i) {
    double nbr = 0.0;
    for (const auto& [j, w] : hoods[i]) nbr += w * std::abs(pr_with[j] - pr_without(i, j));
    table.rows.push_back(make_row(train[i], pr_with[i], pr_without(i, i), nbr, c.alpha));
  }
  return table;
}

MemTable estimate_mem_subsample(const Graph& graph, const MemConfig& cfg,
                                const TrainConfig& train_cfg) {
  MemConfig c = cfg;
  c.estimator = MemEstimator::Subsample;
  c.validate();
  train_cfg.validate();
  const auto train = graph.train_nodes();
  if (train.empty()) throw InvalidArgument("memorization needs training nodes");
  const std::size_t t = train.size();
  const std::size_t M = c.num_subsample_models;
  const auto keep = std::max<std::size_t>(
      1, static_cast<std::size_t>(std::llround(c.subsample_keep_frac * static_cast<double>(t))));
  if (keep >= t) {
    throw ConfigError("subsample_keep_frac",
                      "every model would contain every node, so no node has an exclusion "
                      "partition; use estimator=exact_loo");
  }
  const auto num_classes = static_cast<std::size_t>(graph.num_classes());
  const GcnInput full_input(graph);

  MemTable table;
  table.config = c;
  table.num_models = M;
  for (std::size_t m = 0; m < M; ++m) table.model_seeds.push_back(derive_seed(c.seed, m));

  std::vector<std::vector<std::uint8_t>> included(M), correct(M);
  parallel_for(M, c.workers, [&](std::size_t m) {
    SplitMix64 rng(derive_seed(table.model_seeds[m], 0x5B));
    std::vector<std::size_t> order(t);
    for (std::size_t i = 0; i < t; ++i) order[i] = i;
    shuffle(order, rng);
    std::vector<std::uint8_t> in(t, 0);
    for (std::size_t i = 0; i < keep; ++i) in[order[i]] = 1;
    std::vector<NodeId> subset;
    subset.reserve(keep);
    for (std::size_t i = 0; i < t; ++i) {
      if (in[i]) subset.push_back(train[i]);
    }
    TrainConfig tc = train_cfg;
    tc.seed = table.model_seeds[m];
    const auto params = train_on(full_input, subset, graph.labels(), num_classes, tc).params;
    correct[m] = correct_vector(params, full_input, train, graph.labels());
    included[m] = std::move(in);
  });

  const auto hoods = train_neighborhoods(graph, train, c);
  std::size_t undefined = 0;
  table.rows.reserve(t);
  for (std::size_t i = 0; i < t; ++i) {
    std::size_t n_in = 0;
    for (std::size_t m = 0; m < M; ++m) n_in += included[m][i];
    const std::size_t n_out = M - n_in;
    if (n_in == 0 || n_out == 0) {
      table.rows.push_back({train[i], kNaN, kNaN, kNaN, false});
      ++undefined;
      continue;
    }
    auto partition_rates = [&](std::size_t j) {
      std::size_t hit_in = 0, hit_out = 0;
      for (std::size_t m = 0; m < M; ++m) (included[m][i] ? hit_in : hit_out) += correct[m][j];
      return std::pair{static_cast<double>(hit_in) / static_cast<double>(n_in),
                       static_cast<double>(hit_out) / static_cast<double>(n_out)};
    };
    double nbr = 0.0;
    for (const auto& [j, w] : hoods[i]) {
      const auto [p_in, p_out] = partition_rates(j);
      nbr += w * std::abs(p_in - p_out);
    }
    const auto [self_in, self_out] = partition_rates(i);
    table.rows.push_back(make_row(train[i], self_in, self_out, nbr, c.alpha));
  }
  if (undefined == t) {
    throw ConfigError("subsample_keep_frac",
                      "no node has both inclusion partitions; raise num_subsample_models or use "
                      "estimator=exact_loo");
  }
  if (undefined > 0) spdlog::warn("{} nodes have undefined subsample memorization", undefined);
  return table;
}

MemTable estimate_mem(const Graph& graph, const MemConfig& cfg, const TrainConfig& train_cfg) {
  return cfg.estimator == MemEstimator::ExactLoo ? estimate_mem_exact(graph, cfg, train_cfg)
                                                 : estimate_mem_subsample(graph, cfg, train_cfg);
}

std::vector<double> node_difficulty(const MemTable& table, std::size_t num_nodes) {
  return table.mem_by_node(num_nodes);
}

double edge_difficulty(const Graph& graph, const std::vector<double>& node_scores, Edge e) {
  auto term = [&](NodeId v) {
    const double h = node_scores[v];
    if (std::isnan(h)) return 0.0;
    return h / std::sqrt(static_cast<double>(graph.degree(v)));
  };
  return term(e.u) + term(e.v);
}

std::vector<EdgeScore> edge_difficulty(const Graph& graph, const std::vector<double>& node_scores,
                                       MissingScorePolicy policy) {
  if (node_scores.size() != graph.num_nodes()) throw InvalidArgument("node score vector length != n");
  std::vector<EdgeScore> out;
  for (const auto& e : graph.edge_list()) {
    if (policy == MissingScorePolicy::SkipEdge &&
        (std::isnan(node_scores[e.u]) || std::isnan(node_scores[e.v]))) {
      continue;
    }
    out.push_back({e, edge_difficulty(graph, node_scores, e)});
  }
  return out;
}

std::vector<double> feature_difficulty(const Graph& graph, const std::vector<double>& node_scores,
                                       const std::vector<std::vector<NodeId>>& owners) {
  std::vector<double> out;
  out.reserve(owners.size());
  for (std::size_t f = 0; f < owners.size(); ++f) {
    double sum = 0.0;
    std::size_t count = 0;
    for (NodeId v : owners[f]) {
      if (v >= graph.num_nodes() || !graph.is_train(v) || std::isnan(node_scores[v])) continue;
      sum += node_scores[v];
      ++count;
    }
    if (count == 0) {
      throw InvalidArgument("feature " + std::to_string(f) + " has no scored training owner");
    }
    out.push_back(sum / static_cast<double>(count));
  }
  return out;
}

std::vector<std::vector<NodeId>> row_owner_sets(const Graph& graph) {
  std::vector<std::vector<NodeId>> owners;
  for (NodeId v : graph.train_nodes()) owners.push_back({v});
  return owners;
}

const char* to_string(ProxyOrientation o) {
  return o == ProxyOrientation::AsWritten ? "as_written" : "negated";
}

ProxyOrientation proxy_orientation_from_string(const std::string& s) {
  if (s == "as_written") return ProxyOrientation::AsWritten;
  if (s == "negated") return ProxyOrientation::Negated;
  throw ConfigError("orientation", "expected as_written|negated, got '" + s + "'");
}

MarginProxy margin_proxy_difficulty(const ModelParams& original, const Graph& graph,
                                    ProxyOrientation orientation) {
  const auto post = forward(original, graph);
  const Matrix protos = class_prototypes(post.probs, graph);
  MarginProxy out;
  out.orientation = orientation;
  out.scores.assign(graph.num_nodes(), kNaN);
  const double sign = orientation == ProxyOrientation::AsWritten ? 1.0 : -1.0;
  for (NodeId v : graph.train_nodes()) {
    out.scores[v] = sign * margin(post.probs.row(v), graph.label(v), protos);
  }
  return out;
}

std::string mem_table_csv(const MemTable& table) {
  std::ostringstream os;
  os << "node_id,delta_self,delta_nbr,mem\n";
  for (const auto& r : table.rows) {
    os << r.node << ',' << fmt_double(r.delta_self) << ',' << fmt_double(r.delta_nbr) << ','
       << fmt_double(r.defined ? r.mem : kNaN) << '\n';
  }
  return os.str();
}

nlohmann::json mem_table_metadata(const MemTable& table) {
  const auto& c = table.config;
  return {{"format", "mgu-memtable"},
          {"version", 1},
          {"estimator", to_string(c.estimator)},
          {"alpha", c.alpha},
          {"beta", c.beta},
          {"k_hops", c.k_hops},
          {"num_seeds", c.num_seeds},
          {"num_subsample_models", c.num_subsample_models},
          {"subsample_keep_frac", c.subsample_keep_frac},
          {"exclusion_mode", to_string(c.exclusion_mode)},
          {"seed", c.seed},
          {"num_models_trained", table.num_models},
          {"model_seeds", table.model_seeds}};
}

MemTable mem_table_from_csv(const std::string& text) {
  std::istringstream in(text);
  std::string line;
  if (!std::getline(in, line) || line != "node_id,delta_self,delta_nbr,mem") {
    throw ParseError("memtable", 1, "header must be 'node_id,delta_self,delta_nbr,mem'");
  }
  MemTable table;
  std::size_t line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    std::istringstream row(line);
    std::string cells[4];
    for (auto& cell : cells) {
      if (!std::getline(row, cell, ',')) throw ParseError("memtable", line_no, "expected 4 fields");
    }
    auto num = [&](const std::string& s) {
      if (s == "nan") return kNaN;
      try {
        std::size_t used = 0;
        const double v = std::stod(s, &used);
        if (used != s.size()) throw std::invalid_argument(s);
        return v;
      } catch (const std::exception&) {
        throw ParseError("memtable", line_no, "not a number: '" + s + "'");
      }
    };
    MemRow r;
    r.node = static_cast<NodeId>(std::stoul(cells[0]));
    r.delta_self = num(cells[1]);
    r.delta_nbr = num(cells[2]);
    r.mem = num(cells[3]);
    r.defined = !std::isnan(r.mem);
    table.rows.push_back(r);
  }
  return table;
}

std::string edge_scores_csv(const std::vector<EdgeScore>& scores) {
  std::ostringstream os;
  os << "u,v,score\n";
  for (const auto& s : scores) os << s.edge.u << ',' << s.edge.v << ',' << fmt_double(s.score) << '\n';
  return os.str();
}

std::string feature_scores_csv(const std::vector<double>& scores,
                               const std::vector<std::vector<NodeId>>& owners) {
  std::ostringstream os;
  os << "feature_id,score\n";
  for (std::size_t f = 0; f < scores.size(); ++f) {
    // Row-owner features are identified by their owning node.
    const auto id = owners[f].size() == 1 ? owners[f][0] : static_cast<NodeId>(f);
    os << id << ',' << fmt_double(scores[f]) << '\n';
  }
  return os.str();
}

}  // namespace mgu
