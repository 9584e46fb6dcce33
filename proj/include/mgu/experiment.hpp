#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "mgu/config.hpp"
#include "mgu/errors.hpp"
#include "mgu/eval.hpp"
#include "mgu/memorization.hpp"
#include "mgu/report.hpp"

namespace mgu {

/// A failure inside one pipeline stage. Keeps the kind of the underlying
/// error so config problems still map to their exit code.
class StageError : public Error {
 public:
  StageError(std::string stage, std::string inner_kind, const std::string& what)
      : Error("stage '" + stage + "' failed: " + what),
        stage_(std::move(stage)),
        inner_kind_(std::move(inner_kind)) {}
  const std::string& stage() const noexcept { return stage_; }
  const char* kind() const noexcept override { return inner_kind_.c_str(); }

 private:
  std::string stage_;
  std::string inner_kind_;
};

/// Memorization config with the automatic estimator choice applied.
MemConfig resolve_mem_config(const ExperimentConfig& cfg, const Graph& graph);

/// Deletion request of `task` kind for one difficulty setting. Node and
/// feature requests take the node set; edge requests rank edges by edge
/// difficulty (easy/hard), draw them (random) or order them by the nearer
/// endpoint's hop distance to the test set (local/distant).
UnlearnRequest build_request(RequestKind task, DifficultySetting setting, const Graph& graph,
                             const std::vector<double>& node_scores, double ratio,
                             std::uint64_t seed);

struct ExperimentResult {
  MemTable mem;
  std::vector<EvalReport> reports;  // method-major, then setting, then seed
  std::vector<AggregateRow> aggregate;
  std::vector<CentralityRow> centrality;
};

inline constexpr const char* kMethodSlugs[] = {"mgu", "no_margin", "no_distill"};

/// Full pipeline: graph, memorization, difficulty sets, and per (seed,
/// setting) retraining plus MGU and both ablations, evaluated against the
/// retrained model. Artifacts go through `out`; returns the in-memory results.
/// `mem_override` skips memorization estimation when non-null.
ExperimentResult run_experiment(const ExperimentConfig& cfg, ArtifactWriter& out,
                                std::size_t workers, const MemTable* mem_override = nullptr);

}  // namespace mgu
