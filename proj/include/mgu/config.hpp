#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "json.hpp"

#include "mgu/eval.hpp"
#include "mgu/gcn.hpp"
#include "mgu/memorization.hpp"
#include "mgu/sbm.hpp"
#include "mgu/unlearn.hpp"

namespace mgu {

/// Where the graph comes from. `graph` reads a serialized graph artifact,
/// whose split is kept; linqs and csv sources are split with
/// (train_frac, split_seed); sbm sources carry their own split.
struct DatasetConfig {
  std::string source;
  std::filesystem::path content, cites;  // linqs
  std::filesystem::path nodes, edges;    // csv
  std::filesystem::path graph;           // graph
  SbmSpec sbm;
  double train_frac = 0.8;
  std::uint64_t split_seed = 0;
};

struct ExperimentConfig {
  DatasetConfig dataset;
  TrainConfig train;
  MemConfig mem;
  bool mem_estimator_auto = true;  // subsample above subsample_threshold train nodes
  std::size_t subsample_threshold = 400;
  UnlearnConfig unlearn;
  RequestKind task = RequestKind::Node;
  std::vector<DifficultySetting> settings{DifficultySetting::Easy, DifficultySetting::Random,
                                          DifficultySetting::Hard};
  double ratio = 0.05;
  std::vector<std::uint64_t> seeds{0};
  std::string output_dir;
  bool save_models = true;

  void validate() const;
};

/// Field errors are ConfigError with a dotted path ("train.epochs").
/// Relative paths are resolved against `base_dir`. Unknown keys are errors.
ExperimentConfig experiment_config_from_json(const nlohmann::json& doc,
                                             const std::filesystem::path& base_dir = {});
nlohmann::json to_json(const ExperimentConfig& cfg);

/// Individual sections, for commands that only need part of a config.
DatasetConfig dataset_config_from_json(const nlohmann::json& doc, const std::filesystem::path& base_dir);
SbmSpec sbm_spec_from_json(const nlohmann::json& doc, const std::string& prefix = "sbm");
nlohmann::json to_json(const SbmSpec& spec);

Graph load_dataset(const DatasetConfig& cfg);

}  // namespace mgu
