#pragma once

#include <filesystem>
#include <string>
#include <string_view>

#include "json.hpp"

#include "mgu/gcn.hpp"
#include "mgu/graph.hpp"

namespace mgu {

inline constexpr int kGraphFormatVersion = 1;
inline constexpr int kModelFormatVersion = 1;

// Numbers are written in shortest round-trip decimal form, so a 64-bit float
// reads back bit-for-bit.

nlohmann::json graph_to_json(const Graph& graph);
Graph graph_from_json(const nlohmann::json& doc);

nlohmann::json model_to_json(const ModelParams& params);
ModelParams model_from_json(const nlohmann::json& doc);

std::string save_model(const ModelParams& params);
ModelParams load_model(std::string_view text);

nlohmann::json request_to_json(const UnlearnRequest& request);
UnlearnRequest request_from_json(const nlohmann::json& doc);

nlohmann::json matrix_to_json(const Matrix& m);
Matrix matrix_from_json(const nlohmann::json& doc, const char* what);

std::string read_file(const std::filesystem::path& path);
void write_file(const std::filesystem::path& path, std::string_view content);
nlohmann::json read_json(const std::filesystem::path& path);

/// Stable text form used for every JSON artifact: two-space indent, sorted
/// keys, trailing newline.
std::string dump_json(const nlohmann::json& doc);

}  // namespace mgu
