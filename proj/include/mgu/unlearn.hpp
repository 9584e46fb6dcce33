#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "mgu/gcn.hpp"
#include "mgu/graph.hpp"
#include "mgu/matrix.hpp"

namespace mgu {

enum class TauMode { Frozen, Learnable };
enum class TemperatureMode { AsWritten, LiteralProse };

const char* to_string(TauMode m);
const char* to_string(TemperatureMode m);
TauMode tau_mode_from_string(const std::string& s);
TemperatureMode temperature_mode_from_string(const std::string& s);

struct UnlearnConfig {
  double lambda = 0.55;
  double t_max = 8.0;
  int epochs = 20;
  double learning_rate = 0.01;
  TauMode tau_mode = TauMode::Learnable;
  double tau_anchor_mu = 1.0;
  // LiteralProse maps KL = 0 to T = 1 instead of 1 + (t_max - 1) / 2.
  TemperatureMode temperature_mode = TemperatureMode::AsWritten;
  std::uint64_t seed = 0;

  void validate() const;
};

/// T = 1 + (t_max - 1) * sigmoid(kl), or 1 + (t_max - 1) * (2 sigmoid(kl) - 1)
/// in LiteralProse mode.
double temperature(double kl, double t_max, TemperatureMode mode = TemperatureMode::AsWritten);

/// Per-node temperatures from the teacher's posterior shift between the
/// remaining and the full graph, indexed by node id over all nodes.
std::vector<double> temperatures(const ModelParams& teacher, const Graph& graph_full,
                                 const Graph& graph_remaining, double t_max,
                                 TemperatureMode mode = TemperatureMode::AsWritten);

/// Nodes whose margins are pushed down: the deleted nodes for a node request,
/// train endpoints of the deleted edges, or train owners of the deleted
/// feature rows. Sorted ascending.
std::vector<NodeId> margin_targets(const Graph& graph_full, const UnlearnRequest& request);

/// Everything the unlearning objective needs that does not change while the
/// student is optimized.
struct UnlearnContext {
  ModelParams teacher;
  Graph graph_full;
  Graph graph_remaining;
  UnlearnRequest request;
  GcnInput input_remaining;
  std::vector<NodeId> targets;   // margin-loss nodes
  std::vector<int> target_labels;  // labels of `targets` in graph_full
  std::vector<NodeId> retained;  // train nodes of graph_remaining
  Matrix teacher_logits;         // teacher on graph_remaining
  std::vector<double> temps;     // by node id
  Matrix prototypes;             // teacher prototypes over `retained`
  std::vector<double> tau_init;  // teacher margins of `targets`

  static UnlearnContext build(const ModelParams& teacher, const Graph& graph_full,
                              const UnlearnRequest& request, const UnlearnConfig& cfg);
};

/// Margin loss on a forward pass of the student over graph_remaining:
/// mean softplus(gamma - tau) over targets, plus the tau anchor
/// mu * mean (tau - tau_init)^2 in learnable mode. Prototypes come from the
/// cached student posteriors. Accumulates into `logits_grad` / `tau_grad`
/// when non-null.
double margin_loss(const ForwardCache& cache, std::span<const double> tau,
                   const UnlearnContext& ctx, const UnlearnConfig& cfg, Matrix* logits_grad,
                   std::vector<double>* tau_grad);

/// Temperature-scaled distillation KL(student || teacher) * T^2, averaged
/// over the retained train nodes.
double distill_loss(const ForwardCache& cache, const UnlearnContext& ctx, Matrix* logits_grad);

struct LossGrad {
  double value = 0.0;
  ModelParams grad;  // grad.tau is set when tau is learnable
};

/// Parameter-space views of the two losses; `student.tau` supplies tau
/// (tau_init when absent).
LossGrad margin_loss(const ModelParams& student, const UnlearnContext& ctx,
                     const UnlearnConfig& cfg);
LossGrad distill_loss(const ModelParams& student, const UnlearnContext& ctx);

enum class UnlearnVariant { Mgu, NoMargin, NoDistill };
const char* to_string(UnlearnVariant v);

struct UnlearnTrace {
  ModelParams params;  // tau stripped
  std::vector<double> losses;
  std::vector<double> margin_losses;
  std::vector<double> distill_losses;
};

/// Full-batch Adam from the teacher on lambda * L_margin + L_distill (or one
/// of them for the ablations). Throws NumericError on a non-finite loss.
UnlearnTrace run_unlearning(const ModelParams& teacher, const Graph& graph_full,
                            const UnlearnRequest& request, const UnlearnConfig& cfg,
                            UnlearnVariant variant = UnlearnVariant::Mgu);

ModelParams unlearn_mgu(const ModelParams& teacher, const Graph& graph_full,
                        const UnlearnRequest& request, const UnlearnConfig& cfg);
ModelParams unlearn_ablation(const ModelParams& teacher, const Graph& graph_full,
                             const UnlearnRequest& request, const UnlearnConfig& cfg,
                             UnlearnVariant variant);

/// Gold standard: fresh training on the remaining graph.
ModelParams unlearn_retrain(const Graph& graph_full, const UnlearnRequest& request,
                            const TrainConfig& train_cfg);

}  // namespace mgu
