#pragma once

#include <string>
#include <vector>

#include "mgu/graph.hpp"

namespace mgu {

enum class CentralityMetric { Degree, PageRank, KCore };

const char* to_string(CentralityMetric m);

/// deg(v) / (n - 1); zero for a single-node graph.
std::vector<double> degree_centrality(const Graph& graph);

/// Power iteration with uniform teleport; dangling mass is spread uniformly.
/// Stops after `max_iterations` or when the L1 change drops below `tolerance`.
std::vector<double> pagerank(const Graph& graph, double damping = 0.85,
                             int max_iterations = 100, double tolerance = 1e-10);

/// Core number of every node (bucket-based shell peeling).
std::vector<double> core_numbers(const Graph& graph);

std::vector<double> centrality(const Graph& graph, CentralityMetric metric);

}  // namespace mgu
