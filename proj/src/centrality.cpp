#include "mgu/centrality.hpp"

#include <algorithm>
#include <cmath>

namespace mgu {

const char* to_string(CentralityMetric m) {
  switch (m) {
    case CentralityMetric::Degree: return "degree";
    case CentralityMetric::PageRank: return "pagerank";
    case CentralityMetric::KCore: return "kcore";
  }
  return "?";
}

std::vector<double> degree_centrality(const Graph& graph) {
  const std::size_t n = graph.num_nodes();
  std::vector<double> out(n, 0.0);
  if (n < 2) return out;
  for (std::size_t v = 0; v < n; ++v) {
    out[v] = static_cast<double>(graph.degree(static_cast<NodeId>(v))) / static_cast<double>(n - 1);
  }
  return out;
}

std::vector<double> pagerank(const Graph& graph, double damping, int max_iterations,
                             double tolerance) {
  const std::size_t n = graph.num_nodes();
  if (n == 0) return {};
  const double inv_n = 1.0 / static_cast<double>(n);
  std::vector<double> rank(n, inv_n), next(n);
  for (int it = 0; it < max_iterations; ++it) {
    double dangling = 0.0;
    for (std::size_t v = 0; v < n; ++v) {
      if (graph.degree(static_cast<NodeId>(v)) == 0) dangling += rank[v];
    }
    const double base = (1.0 - damping) * inv_n + damping * dangling * inv_n;
    for (std::size_t v = 0; v < n; ++v) {
      double acc = 0.0;
      for (NodeId u : graph.neighbors(static_cast<NodeId>(v))) {
        acc += rank[u] / static_cast<double>(graph.degree(u));
      }
      next[v] = base + damping * acc;
    }
    double delta = 0.0;
    for (std::size_t v = 0; v < n; ++v) delta += std::abs(next[v] - rank[v]);
    rank.swap(next);
    if (delta < tolerance) break;
  }
  return rank;
}

std::vector<double> core_numbers(const Graph& graph) {
  // Batagelj-Zaversnik: nodes kept sorted by current degree in bins.
  const std::size_t n = graph.num_nodes();
  std::vector<std::size_t> deg(n), pos(n), vert(n);
  std::size_t max_deg = 0;
  for (std::size_t v = 0; v < n; ++v) {
    deg[v] = graph.degree(static_cast<NodeId>(v));
    max_deg = std::max(max_deg, deg[v]);
  }
  std::vector<std::size_t> bin(max_deg + 1, 0);
  for (std::size_t v = 0; v < n; ++v) ++bin[deg[v]];
  std::size_t start = 0;
  for (auto& b : bin) {
    const std::size_t count = b;
    b = start;
    start += count;
  }
  for (std::size_t v = 0; v < n; ++v) {
    pos[v] = bin[deg[v]]++;
    vert[pos[v]] = v;
  }
  for (std::size_t d = max_deg; d > 0; --d) bin[d] = bin[d - 1];
  if (!bin.empty()) bin[0] = 0;

  for (std::size_t i = 0; i < n; ++i) {
    const std::size_t v = vert[i];
    for (NodeId u : graph.neighbors(static_cast<NodeId>(v))) {
      if (deg[u] > deg[v]) {
        const std::size_t du = deg[u];
        const std::size_t pu = pos[u];
        const std::size_t pw = bin[du];
        const std::size_t w = vert[pw];
        if (u != w) {
          pos[u] = pw;
          vert[pu] = w;
          pos[w] = pu;
          vert[pw] = u;
        }
        ++bin[du];
        --deg[u];
      }
    }
  }
  return std::vector<double>(deg.begin(), deg.end());
}

std::vector<double> centrality(const Graph& graph, CentralityMetric metric) {
  switch (metric) {
    case CentralityMetric::Degree: return degree_centrality(graph);
    case CentralityMetric::PageRank: return pagerank(graph);
    case CentralityMetric::KCore: return core_numbers(graph);
  }
  return {};
}

}  // namespace mgu
