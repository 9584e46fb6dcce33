#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include "mgu/graph.hpp"

namespace mgu {

/// A graph read from disk plus what the loader had to discard.
struct LoadedGraph {
  Graph graph;
  std::vector<std::string> node_names;   // original ids, indexed by NodeId
  std::vector<std::string> class_names;  // original labels, indexed by class id
  std::size_t dropped_unknown_edges = 0; // endpoint not present in the node file
  std::size_t dropped_self_loops = 0;
  std::size_t dropped_duplicates = 0;
};

/// LINQS citation format: `<id>\t<f_1>...\t<f_d>\t<label>` rows and
/// `<cited>\t<citing>` rows. Labels are numbered in first-appearance order.
LoadedGraph load_linqs(const std::filesystem::path& content_path,
                       const std::filesystem::path& cites_path);

/// CSV format: nodes `id,label,f0,...,f{d-1}` (label may be empty) and edges
/// `src,dst`. Unlabeled nodes can never be train-masked.
LoadedGraph load_csv(const std::filesystem::path& nodes_path,
                     const std::filesystem::path& edges_path);

}  // namespace mgu
