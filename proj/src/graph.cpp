#include "mgu/graph.hpp"

#include <algorithm>
#include <cmath>
#include <deque>
#include <string>

#include "mgu/errors.hpp"
#include "mgu/rng.hpp"

namespace mgu {

namespace {

std::vector<std::uint8_t> empty_mask(std::size_t n) { return std::vector<std::uint8_t>(n, 0); }

}  // namespace

Graph Graph::from_edges(std::size_t num_nodes, const std::vector<Edge>& edges, Matrix features,
                        std::vector<int> labels, int num_classes) {
  std::vector<std::vector<NodeId>> adj(num_nodes);
  for (const auto& e : edges) {
    if (e.u >= num_nodes || e.v >= num_nodes) {
      throw SchemaError("edge endpoint out of range: (" + std::to_string(e.u) + "," +
                        std::to_string(e.v) + ")");
    }
    if (e.u == e.v) continue;
    adj[e.u].push_back(e.v);
    adj[e.v].push_back(e.u);
  }
  std::vector<std::uint64_t> offsets(num_nodes + 1, 0);
  std::vector<NodeId> targets;
  for (std::size_t v = 0; v < num_nodes; ++v) {
    auto& nb = adj[v];
    std::sort(nb.begin(), nb.end());
    nb.erase(std::unique(nb.begin(), nb.end()), nb.end());
    targets.insert(targets.end(), nb.begin(), nb.end());
    offsets[v + 1] = targets.size();
  }
  return from_csr(std::move(offsets), std::move(targets), std::move(features), std::move(labels),
                  num_classes, empty_mask(num_nodes), empty_mask(num_nodes));
}

Graph Graph::from_csr(std::vector<std::uint64_t> offsets, std::vector<NodeId> targets,
                      Matrix features, std::vector<int> labels, int num_classes,
                      std::vector<std::uint8_t> train_mask, std::vector<std::uint8_t> test_mask) {
  Graph g;
  g.offsets_ = std::move(offsets);
  g.targets_ = std::move(targets);
  g.features_ = std::move(features);
  g.labels_ = std::move(labels);
  g.num_classes_ = num_classes;
  g.train_mask_ = std::move(train_mask);
  g.test_mask_ = std::move(test_mask);
  g.validate();
  return g;
}

void Graph::validate() const {
  const std::size_t n = labels_.size();
  if (offsets_.size() != n + 1 || offsets_.front() != 0 || offsets_.back() != targets_.size()) {
    throw SchemaError("CSR offsets inconsistent with node count");
  }
  if (features_.rows() != n) throw SchemaError("feature matrix row count != num_nodes");
  if (train_mask_.size() != n || test_mask_.size() != n) throw SchemaError("mask length != num_nodes");
  if (num_classes_ < 0) throw SchemaError("negative class count");
  for (std::size_t v = 0; v < n; ++v) {
    if (offsets_[v] > offsets_[v + 1]) throw SchemaError("CSR offsets not monotone");
    const int y = labels_[v];
    if (y != kNoLabel && (y < 0 || y >= num_classes_)) {
      throw SchemaError("label out of range at node " + std::to_string(v));
    }
    if (train_mask_[v] && test_mask_[v]) {
      throw SchemaError("node " + std::to_string(v) + " is in both train and test sets");
    }
    if (train_mask_[v] && y == kNoLabel) {
      throw SchemaError("train node " + std::to_string(v) + " has no label");
    }
    const auto nb = neighbors(static_cast<NodeId>(v));
    for (std::size_t i = 0; i < nb.size(); ++i) {
      if (nb[i] >= n) throw SchemaError("CSR target out of range");
      if (nb[i] == v) throw SchemaError("self-loop at node " + std::to_string(v));
      if (i > 0 && nb[i - 1] >= nb[i]) throw SchemaError("neighbor list not strictly sorted");
      if (!has_edge(nb[i], static_cast<NodeId>(v))) throw SchemaError("adjacency not symmetric");
    }
  }
}

bool Graph::has_edge(NodeId u, NodeId v) const {
  if (u >= num_nodes() || v >= num_nodes()) return false;
  const auto nb = neighbors(u);
  return std::binary_search(nb.begin(), nb.end(), v);
}

std::vector<NodeId> Graph::train_nodes() const {
  std::vector<NodeId> out;
  for (std::size_t v = 0; v < num_nodes(); ++v) {
    if (train_mask_[v]) out.push_back(static_cast<NodeId>(v));
  }
  return out;
}

std::vector<NodeId> Graph::test_nodes() const {
  std::vector<NodeId> out;
  for (std::size_t v = 0; v < num_nodes(); ++v) {
    if (test_mask_[v]) out.push_back(static_cast<NodeId>(v));
  }
  return out;
}

std::vector<Edge> Graph::edge_list() const {
  std::vector<Edge> out;
  out.reserve(num_edges());
  for (std::size_t u = 0; u < num_nodes(); ++u) {
    for (NodeId v : neighbors(static_cast<NodeId>(u))) {
      if (u < v) out.push_back({static_cast<NodeId>(u), v});
    }
  }
  return out;
}

Graph Graph::with_masks(std::vector<std::uint8_t> train_mask,
                        std::vector<std::uint8_t> test_mask) const {
  return from_csr(offsets_, targets_, features_, labels_, num_classes_, std::move(train_mask),
                  std::move(test_mask));
}

Graph Graph::with_features(Matrix features) const {
  return from_csr(offsets_, targets_, std::move(features), labels_, num_classes_, train_mask_,
                  test_mask_);
}

Graph Graph::without_edges() const {
  return from_csr(std::vector<std::uint64_t>(num_nodes() + 1, 0), {}, features_, labels_,
                  num_classes_, train_mask_, test_mask_);
}

const char* to_string(RequestKind kind) {
  switch (kind) {
    case RequestKind::Node: return "node";
    case RequestKind::Edge: return "edge";
    case RequestKind::Feature: return "feature";
  }
  return "?";
}

RequestKind request_kind_from_string(const std::string& s) {
  if (s == "node") return RequestKind::Node;
  if (s == "edge") return RequestKind::Edge;
  if (s == "feature") return RequestKind::Feature;
  throw ConfigError("task", "unknown request kind '" + s + "' (expected node|edge|feature)");
}

namespace {

template <typename T>
std::vector<T> sorted_unique(std::vector<T> v) {
  std::sort(v.begin(), v.end());
  v.erase(std::unique(v.begin(), v.end()), v.end());
  return v;
}

}  // namespace

UnlearnRequest UnlearnRequest::node_deletion(std::vector<NodeId> nodes) {
  return {RequestKind::Node, sorted_unique(std::move(nodes)), {}};
}

UnlearnRequest UnlearnRequest::edge_deletion(std::vector<Edge> edges) {
  for (auto& e : edges) e = Edge::normalized(e.u, e.v);
  return {RequestKind::Edge, {}, sorted_unique(std::move(edges))};
}

UnlearnRequest UnlearnRequest::feature_deletion(std::vector<NodeId> owners) {
  return {RequestKind::Feature, sorted_unique(std::move(owners)), {}};
}

void UnlearnRequest::validate(const Graph& graph) const {
  const std::size_t n = graph.num_nodes();
  switch (kind) {
    case RequestKind::Node:
    case RequestKind::Feature:
      if (!edges.empty()) throw InvalidArgument("node/feature request must not list edges");
      for (NodeId v : nodes) {
        if (v >= n) throw InvalidArgument("request node " + std::to_string(v) + " does not exist");
        if (graph.is_train(v)) continue;
        // A node already removed by an earlier node deletion is a no-op target.
        const bool already_removed = kind == RequestKind::Node && !graph.is_test(v) &&
                                     !graph.has_label(v) && graph.degree(v) == 0;
        if (!already_removed) {
          throw InvalidArgument("request node " + std::to_string(v) + " is not a training node");
        }
      }
      break;
    case RequestKind::Edge:
      if (!nodes.empty()) throw InvalidArgument("edge request must not list nodes");
      for (const auto& e : edges) {
        if (!graph.has_edge(e.u, e.v)) {
          throw InvalidArgument("request edge (" + std::to_string(e.u) + "," +
                                std::to_string(e.v) + ") does not exist");
        }
      }
      break;
  }
}

Graph apply_request(const Graph& graph, const UnlearnRequest& request) {
  request.validate(graph);
  const std::size_t n = graph.num_nodes();
  switch (request.kind) {
    case RequestKind::Feature: {
      Matrix x = graph.features();
      for (NodeId v : request.nodes) std::fill(x.row(v).begin(), x.row(v).end(), 0.0);
      return graph.with_features(std::move(x));
    }
    case RequestKind::Node:
    case RequestKind::Edge: {
      std::vector<std::uint8_t> removed_node(n, 0);
      for (NodeId v : request.nodes) removed_node[v] = 1;
      auto keep = [&](NodeId a, NodeId b) {
        if (removed_node[a] || removed_node[b]) return false;
        if (request.kind == RequestKind::Edge) {
          return !std::binary_search(request.edges.begin(), request.edges.end(),
                                     Edge::normalized(a, b));
        }
        return true;
      };
      std::vector<std::uint64_t> offsets(n + 1, 0);
      std::vector<NodeId> targets;
      targets.reserve(graph.csr_targets().size());
      for (std::size_t u = 0; u < n; ++u) {
        for (NodeId v : graph.neighbors(static_cast<NodeId>(u))) {
          if (keep(static_cast<NodeId>(u), v)) targets.push_back(v);
        }
        offsets[u + 1] = targets.size();
      }
      auto labels = graph.labels();
      auto train = graph.train_mask();
      for (NodeId v : request.nodes) {
        labels[v] = kNoLabel;
        train[v] = 0;
      }
      return Graph::from_csr(std::move(offsets), std::move(targets), graph.features(),
                             std::move(labels), graph.num_classes(), std::move(train),
                             graph.test_mask());
    }
  }
  return graph;
}

Graph split(const Graph& graph, double train_frac, std::uint64_t seed) {
  if (!(train_frac > 0.0 && train_frac < 1.0)) {
    throw ConfigError("train_frac", "must lie in (0, 1)");
  }
  const std::size_t n = graph.num_nodes();
  for (std::size_t v = 0; v < n; ++v) {
    if (!graph.has_label(static_cast<NodeId>(v))) {
      throw InvalidArgument("split: node " + std::to_string(v) + " has no label");
    }
  }
  std::vector<NodeId> order(n);
  for (std::size_t v = 0; v < n; ++v) order[v] = static_cast<NodeId>(v);
  SplitMix64 rng(seed);
  shuffle(order, rng);
  const auto n_train = static_cast<std::size_t>(std::llround(train_frac * static_cast<double>(n)));
  std::vector<std::uint8_t> train(n, 0), test(n, 0);
  for (std::size_t i = 0; i < n; ++i) (i < n_train ? train : test)[order[i]] = 1;
  return graph.with_masks(std::move(train), std::move(test));
}

std::vector<std::uint32_t> hop_distances(const Graph& graph, std::span<const NodeId> sources) {
  std::vector<std::uint32_t> dist(graph.num_nodes(), kUnreachable);
  std::deque<NodeId> queue;
  for (NodeId s : sources) {
    if (s >= graph.num_nodes()) throw InvalidArgument("BFS source out of range");
    if (dist[s] != 0) {
      dist[s] = 0;
      queue.push_back(s);
    }
  }
  while (!queue.empty()) {
    const NodeId u = queue.front();
    queue.pop_front();
    for (NodeId v : graph.neighbors(u)) {
      if (dist[v] == kUnreachable) {
        dist[v] = dist[u] + 1;
        queue.push_back(v);
      }
    }
  }
  return dist;
}

std::vector<std::pair<NodeId, std::uint32_t>> nodes_within(const Graph& graph, NodeId v,
                                                           std::uint32_t max_hops) {
  std::vector<std::pair<NodeId, std::uint32_t>> found;
  std::vector<NodeId> frontier{v};
  std::vector<std::uint8_t> visited(graph.num_nodes(), 0);
  visited[v] = 1;
  for (std::uint32_t hop = 1; hop <= max_hops && !frontier.empty(); ++hop) {
    std::vector<NodeId> next;
    for (NodeId u : frontier) {
      for (NodeId w : graph.neighbors(u)) {
        if (visited[w]) continue;
        visited[w] = 1;
        next.push_back(w);
        found.emplace_back(w, hop);
      }
    }
    frontier = std::move(next);
  }
  std::sort(found.begin(), found.end());
  return found;
}

}  // namespace mgu
