#include "mgu/unlearn.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "mgu/errors.hpp"
#include "mgu/margin.hpp"

namespace mgu {

namespace {

// Gradient of KL(h || p) with respect to h, accumulated into dh with weight w.
void add_kl_grad_h(std::span<const double> h, std::span<const double> p, double w,
                   std::span<double> dh) {
  for (std::size_t k = 0; k < h.size(); ++k) {
    dh[k] += w * (std::log(h[k] + kKlFloor) - std::log(p[k] + kKlFloor) + h[k] / (h[k] + kKlFloor));
  }
}

// Gradient of KL(h || p) with respect to p.
void add_kl_grad_p(std::span<const double> h, std::span<const double> p, double w,
                   std::span<double> dp) {
  for (std::size_t k = 0; k < h.size(); ++k) dp[k] -= w * h[k] / (p[k] + kKlFloor);
}

// Pulls a gradient on softmax outputs back to the logits of the same row.
void softmax_backward_row(std::span<const double> probs, std::span<const double> dprobs,
                          std::span<double> dlogits) {
  double dot = 0.0;
  for (std::size_t k = 0; k < probs.size(); ++k) dot += dprobs[k] * probs[k];
  for (std::size_t k = 0; k < probs.size(); ++k) dlogits[k] += probs[k] * (dprobs[k] - dot);
}

std::vector<double> log_softmax_scaled(std::span<const double> z, double inv_t) {
  std::vector<double> out(z.size());
  double mx = z[0] * inv_t;
  for (std::size_t k = 0; k < z.size(); ++k) {
    out[k] = z[k] * inv_t;
    mx = std::max(mx, out[k]);
  }
  double s = 0.0;
  for (double a : out) s += std::exp(a - mx);
  const double lse = mx + std::log(s);
  for (auto& a : out) a -= lse;
  return out;
}

}  // namespace

const char* to_string(TauMode m) { return m == TauMode::Frozen ? "frozen" : "learnable"; }

const char* to_string(TemperatureMode m) {
  return m == TemperatureMode::AsWritten ? "as_written" : "literal_prose";
}

TauMode tau_mode_from_string(const std::string& s) {
  if (s == "frozen") return TauMode::Frozen;
  if (s == "learnable") return TauMode::Learnable;
  throw ConfigError("tau_mode", "expected frozen|learnable, got '" + s + "'");
}

TemperatureMode temperature_mode_from_string(const std::string& s) {
  if (s == "as_written") return TemperatureMode::AsWritten;
  if (s == "literal_prose") return TemperatureMode::LiteralProse;
  throw ConfigError("temperature_mode", "expected as_written|literal_prose, got '" + s + "'");
}

void UnlearnConfig::validate() const {
  if (!(lambda >= 0.0) || !std::isfinite(lambda)) throw ConfigError("lambda", "must be >= 0");
  if (!(t_max > 1.0) || !std::isfinite(t_max)) throw ConfigError("t_max", "must be > 1");
  if (epochs < 0) throw ConfigError("epochs", "must be >= 0");
  if (!(learning_rate > 0.0)) throw ConfigError("learning_rate", "must be > 0");
  if (!(tau_anchor_mu >= 0.0)) throw ConfigError("tau_anchor_mu", "must be >= 0");
}

const char* to_string(UnlearnVariant v) {
  switch (v) {
    case UnlearnVariant::Mgu: return "MGU";
    case UnlearnVariant::NoMargin: return "w/o Margin";
    case UnlearnVariant::NoDistill: return "w/o Distill";
  }
  return "?";
}

double temperature(double kl, double t_max, TemperatureMode mode) {
  const double s = sigmoid(kl);
  return mode == TemperatureMode::AsWritten ? 1.0 + (t_max - 1.0) * s
                                            : 1.0 + (t_max - 1.0) * (2.0 * s - 1.0);
}

std::vector<double> temperatures(const ModelParams& teacher, const Graph& graph_full,
                                 const Graph& graph_remaining, double t_max,
                                 TemperatureMode mode) {
  const auto full = forward(teacher, graph_full);
  const auto rem = forward(teacher, graph_remaining);
  std::vector<double> out(graph_full.num_nodes());
  for (std::size_t v = 0; v < out.size(); ++v) {
    out[v] = temperature(kl_divergence(rem.probs.row(v), full.probs.row(v)), t_max, mode);
  }
  return out;
}

std::vector<NodeId> margin_targets(const Graph& graph_full, const UnlearnRequest& request) {
  std::vector<NodeId> out;
  switch (request.kind) {
    case RequestKind::Node:
      out = request.nodes;
      break;
    case RequestKind::Edge:
      for (const auto& e : request.edges) {
        if (graph_full.is_train(e.u)) out.push_back(e.u);
        if (graph_full.is_train(e.v)) out.push_back(e.v);
      }
      break;
    case RequestKind::Feature:
      for (NodeId v : request.nodes) {
        if (graph_full.is_train(v)) out.push_back(v);
      }
      break;
  }
  std::sort(out.begin(), out.end());
  out.erase(std::unique(out.begin(), out.end()), out.end());
  // A node deleted twice is already gone and has no label to push against.
  std::erase_if(out, [&](NodeId v) { return !graph_full.has_label(v); });
  return out;
}

UnlearnContext UnlearnContext::build(const ModelParams& teacher, const Graph& graph_full,
                                     const UnlearnRequest& request, const UnlearnConfig& cfg) {
  cfg.validate();
  request.validate(graph_full);
  Graph remaining = apply_request(graph_full, request);
  GcnInput input(remaining);
  UnlearnContext ctx{teacher, graph_full, std::move(remaining), request, std::move(input),
                     {}, {}, {}, {}, {}, {}, {}};
  ctx.targets = margin_targets(graph_full, request);
  for (NodeId v : ctx.targets) ctx.target_labels.push_back(graph_full.label(v));
  ctx.retained = ctx.graph_remaining.train_nodes();

  const auto cache = forward_cached(teacher, ctx.input_remaining);
  ctx.teacher_logits = cache.logits;
  ctx.temps = temperatures(teacher, graph_full, ctx.graph_remaining, cfg.t_max, cfg.temperature_mode);
  if (!ctx.targets.empty()) {
    ctx.prototypes = class_prototypes(cache.probs, ctx.retained, ctx.graph_remaining.labels(),
                                      static_cast<std::size_t>(graph_full.num_classes()));
    for (std::size_t i = 0; i < ctx.targets.size(); ++i) {
      ctx.tau_init.push_back(margin(cache.probs.row(ctx.targets[i]), ctx.target_labels[i], ctx.prototypes));
    }
  }
  return ctx;
}

double margin_loss(const ForwardCache& cache, std::span<const double> tau,
                   const UnlearnContext& ctx, const UnlearnConfig& cfg, Matrix* logits_grad,
                   std::vector<double>* tau_grad) {
  const std::size_t t = ctx.targets.size();
  if (t == 0) return 0.0;
  const std::size_t c = cache.probs.cols();
  const auto& labels = ctx.graph_remaining.labels();
  const Matrix protos = class_prototypes(cache.probs, ctx.retained, labels, c);
  const double inv_t = 1.0 / static_cast<double>(t);
  const bool learnable = cfg.tau_mode == TauMode::Learnable;

  Matrix dprobs(cache.probs.rows(), c);
  Matrix dprotos(c, c);
  double loss = 0.0;
  for (std::size_t i = 0; i < t; ++i) {
    const NodeId v = ctx.targets[i];
    const int y = ctx.target_labels[i];
    const auto h = cache.probs.row(v);
    const double x = margin(h, y, protos) - tau[i];
    loss += softplus(x) * inv_t;
    if (learnable) {
      const double d = tau[i] - ctx.tau_init[i];
      loss += cfg.tau_anchor_mu * d * d * inv_t;
    }
    if (!logits_grad) continue;
    const double g = sigmoid(x) * inv_t;
    if (tau_grad && learnable) {
      (*tau_grad)[i] += -g + 2.0 * cfg.tau_anchor_mu * (tau[i] - ctx.tau_init[i]) * inv_t;
    }
    for (std::size_t k = 0; k < c; ++k) {
      const double w = k == static_cast<std::size_t>(y) ? -1.0 : 1.0 / static_cast<double>(c - 1);
      add_kl_grad_h(h, protos.row(k), g * w, dprobs.row(v));
      add_kl_grad_p(h, protos.row(k), g * w, dprotos.row(k));
    }
  }
  if (!logits_grad) return loss;

  std::vector<std::size_t> members(c, 0);
  for (NodeId v : ctx.retained) ++members[static_cast<std::size_t>(labels[v])];
  for (NodeId v : ctx.retained) {
    const auto y = static_cast<std::size_t>(labels[v]);
    const auto src = dprotos.row(y);
    auto dst = dprobs.row(v);
    const double scale = 1.0 / static_cast<double>(members[y]);
    for (std::size_t k = 0; k < c; ++k) dst[k] += src[k] * scale;
  }
  for (std::size_t r = 0; r < dprobs.rows(); ++r) {
    const auto dp = dprobs.row(r);
    if (std::all_of(dp.begin(), dp.end(), [](double x) { return x == 0.0; })) continue;
    softmax_backward_row(cache.probs.row(r), dp, logits_grad->row(r));
  }
  return loss;
}

double distill_loss(const ForwardCache& cache, const UnlearnContext& ctx, Matrix* logits_grad) {
  if (ctx.retained.empty()) return 0.0;
  const double inv_n = 1.0 / static_cast<double>(ctx.retained.size());
  double loss = 0.0;
  for (NodeId v : ctx.retained) {
    const double temp = ctx.temps[v];
    const auto zs = cache.logits.row(v);
    const auto zt = ctx.teacher_logits.row(v);
    const auto ls = log_softmax_scaled(zs, 1.0 / temp);
    const auto lt = log_softmax_scaled(zt, 1.0 / temp);
    const std::size_t c = ls.size();
    // Log-ratio ls - lt = delta - r with r = ln sum_k t_k exp(delta_k). Built
    // from the logit difference so that close distributions do not cancel
    // O(1) log-probabilities.
    std::vector<double> d(c);
    double max_abs = 0.0;
    for (std::size_t k = 0; k < c; ++k) {
      d[k] = (zs[k] - zt[k]) / temp;
      max_abs = std::max(max_abs, std::abs(d[k]));
    }
    if (max_abs <= 1.0) {
      double acc = 0.0;
      for (std::size_t k = 0; k < c; ++k) acc += std::exp(lt[k]) * std::expm1(d[k]);
      const double r = std::log1p(acc);
      for (auto& x : d) x -= r;
    } else {
      for (std::size_t k = 0; k < c; ++k) d[k] = ls[k] - lt[k];
    }
    double kl = 0.0;
    for (std::size_t k = 0; k < c; ++k) kl += std::exp(ls[k]) * d[k];
    loss += kl * temp * temp * inv_n;
    if (!logits_grad) continue;
    auto dz = logits_grad->row(v);
    for (std::size_t k = 0; k < c; ++k) dz[k] += temp * std::exp(ls[k]) * (d[k] - kl) * inv_n;
  }
  return loss;
}

LossGrad margin_loss(const ModelParams& student, const UnlearnContext& ctx,
                     const UnlearnConfig& cfg) {
  const auto cache = forward_cached(student, ctx.input_remaining);
  const auto& tau = student.tau ? *student.tau : ctx.tau_init;
  Matrix dlogits(cache.logits.rows(), cache.logits.cols());
  std::vector<double> dtau(tau.size(), 0.0);
  LossGrad out;
  out.value = margin_loss(cache, tau, ctx, cfg, &dlogits, &dtau);
  out.grad = backward(student, ctx.input_remaining, cache, dlogits);
  if (cfg.tau_mode == TauMode::Learnable) out.grad.tau = std::move(dtau);
  return out;
}

LossGrad distill_loss(const ModelParams& student, const UnlearnContext& ctx) {
  const auto cache = forward_cached(student, ctx.input_remaining);
  Matrix dlogits(cache.logits.rows(), cache.logits.cols());
  LossGrad out;
  out.value = distill_loss(cache, ctx, &dlogits);
  out.grad = backward(student, ctx.input_remaining, cache, dlogits);
  return out;
}

UnlearnTrace run_unlearning(const ModelParams& teacher, const Graph& graph_full,
                            const UnlearnRequest& request, const UnlearnConfig& cfg,
                            UnlearnVariant variant) {
  const auto ctx = UnlearnContext::build(teacher, graph_full, request, cfg);
  const bool use_margin = variant != UnlearnVariant::NoMargin && cfg.lambda != 0.0 && !ctx.targets.empty();
  const bool use_distill = variant != UnlearnVariant::NoDistill;
  const bool learn_tau = use_margin && cfg.tau_mode == TauMode::Learnable;

  ModelParams student = teacher;
  student.tau.reset();
  std::vector<double> tau = ctx.tau_init;
  Optimizer opt(OptimizerKind::Adam, cfg.learning_rate);
  UnlearnTrace trace;

  // Records the loss of the current student; fills the logits / tau
  // gradients when `dlogits` is non-null.
  auto evaluate = [&](Matrix* dlogits, std::vector<double>* dtau) {
    auto cache = forward_cached(student, ctx.input_remaining);
    Matrix dmargin;
    if (dlogits && use_margin) dmargin = Matrix(cache.logits.rows(), cache.logits.cols());
    const double lm = use_margin
                          ? margin_loss(cache, tau, ctx, cfg, dlogits ? &dmargin : nullptr, dtau)
                          : 0.0;
    const double ld = use_distill ? distill_loss(cache, ctx, dlogits) : 0.0;
    const double total = cfg.lambda * lm + ld;
    if (!std::isfinite(total)) {
      throw NumericError("unlearning loss became non-finite at epoch " +
                         std::to_string(trace.losses.size()));
    }
    trace.losses.push_back(total);
    trace.margin_losses.push_back(lm);
    trace.distill_losses.push_back(ld);
    if (dlogits && use_margin) {
      for (std::size_t i = 0; i < dlogits->size(); ++i) dlogits->data()[i] += cfg.lambda * dmargin.data()[i];
    }
    return cache;
  };

  for (int epoch = 0; epoch < cfg.epochs; ++epoch) {
    Matrix dlogits(ctx.input_remaining.num_nodes(), teacher.num_classes());
    std::vector<double> dtau(tau.size(), 0.0);
    const auto cache = evaluate(&dlogits, &dtau);
    auto grads = backward(student, ctx.input_remaining, cache, dlogits);
    std::vector<std::span<double>> ps{student.w1.data(), student.b1, student.w2.data(), student.b2};
    std::vector<std::span<const double>> gs{grads.w1.data(), grads.b1, grads.w2.data(), grads.b2};
    if (learn_tau) {
      for (auto& g : dtau) g *= cfg.lambda;
      ps.emplace_back(std::span(tau));
      gs.emplace_back(std::span<const double>(dtau));
    }
    opt.step(ps, gs);
  }
  evaluate(nullptr, nullptr);
  if (!student.all_finite()) throw NumericError("unlearned parameters are not finite");
  trace.params = std::move(student);
  return trace;
}

ModelParams unlearn_mgu(const ModelParams& teacher, const Graph& graph_full,
                        const UnlearnRequest& request, const UnlearnConfig& cfg) {
  return run_unlearning(teacher, graph_full, request, cfg, UnlearnVariant::Mgu).params;
}

ModelParams unlearn_ablation(const ModelParams& teacher, const Graph& graph_full,
                             const UnlearnRequest& request, const UnlearnConfig& cfg,
                             UnlearnVariant variant) {
  if (variant == UnlearnVariant::Mgu) throw InvalidArgument("ablation variant must drop a loss term");
  return run_unlearning(teacher, graph_full, request, cfg, variant).params;
}

ModelParams unlearn_retrain(const Graph& graph_full, const UnlearnRequest& request,
                            const TrainConfig& train_cfg) {
  request.validate(graph_full);
  return train(apply_request(graph_full, request), train_cfg);
}

}  // namespace mgu
