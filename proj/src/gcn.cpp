#include "mgu/gcn.hpp"

#include <algorithm>
#include <cmath>

#include "mgu/errors.hpp"
#include "mgu/rng.hpp"

namespace mgu {

double SparseMatrix::at(NodeId r, NodeId c) const {
  const auto first = cols.begin() + static_cast<std::ptrdiff_t>(offsets[r]);
  const auto last = cols.begin() + static_cast<std::ptrdiff_t>(offsets[r + 1]);
  const auto it = std::lower_bound(first, last, c);
  return (it != last && *it == c) ? vals[static_cast<std::size_t>(it - cols.begin())] : 0.0;
}

SparseMatrix normalize_adjacency(const Graph& graph) {
  const std::size_t n = graph.num_nodes();
  SparseMatrix a;
  a.n = n;
  a.offsets.assign(n + 1, 0);
  a.cols.reserve(graph.csr_targets().size() + n);
  a.vals.reserve(graph.csr_targets().size() + n);
  std::vector<double> inv_sqrt(n);
  for (std::size_t v = 0; v < n; ++v) {
    inv_sqrt[v] = 1.0 / std::sqrt(static_cast<double>(graph.degree(static_cast<NodeId>(v)) + 1));
  }
  for (std::size_t v = 0; v < n; ++v) {
    const auto self = static_cast<NodeId>(v);
    bool self_done = false;
    auto push = [&](NodeId u) {
      a.cols.push_back(u);
      a.vals.push_back(inv_sqrt[v] * inv_sqrt[u]);
    };
    for (NodeId u : graph.neighbors(self)) {
      if (!self_done && u > self) {
        push(self);
        self_done = true;
      }
      push(u);
    }
    if (!self_done) push(self);
    a.offsets[v + 1] = a.cols.size();
  }
  return a;
}

ModelParams ModelParams::zeros(std::size_t d, std::size_t h, std::size_t c) {
  return {Matrix(d, h), std::vector<double>(h, 0.0), Matrix(h, c), std::vector<double>(c, 0.0),
          std::nullopt};
}

bool ModelParams::all_finite() const {
  auto finite = [](const std::vector<double>& xs) {
    return std::all_of(xs.begin(), xs.end(), [](double x) { return std::isfinite(x); });
  };
  return finite(w1.data()) && finite(b1) && finite(w2.data()) && finite(b2) &&
         (!tau || finite(*tau));
}

void TrainConfig::validate() const {
  if (hidden_dim < 1) throw ConfigError("hidden_dim", "must be >= 1");
  if (epochs < 1) throw ConfigError("epochs", "must be >= 1");
  if (!(learning_rate > 0.0)) throw ConfigError("learning_rate", "must be > 0");
  if (!(weight_decay >= 0.0)) throw ConfigError("weight_decay", "must be >= 0");
}

void Optimizer::step(const std::vector<std::span<double>>& params,
                     const std::vector<std::span<const double>>& grads) {
  if (kind_ == OptimizerKind::Sgd) {
    for (std::size_t b = 0; b < params.size(); ++b) {
      for (std::size_t i = 0; i < params[b].size(); ++i) params[b][i] -= lr_ * grads[b][i];
    }
    return;
  }
  if (m_.empty()) {
    for (const auto& p : params) {
      m_.emplace_back(p.size(), 0.0);
      v_.emplace_back(p.size(), 0.0);
    }
  }
  ++t_;
  const double c1 = 1.0 - std::pow(kAdamBeta1, static_cast<double>(t_));
  const double c2 = 1.0 - std::pow(kAdamBeta2, static_cast<double>(t_));
  for (std::size_t b = 0; b < params.size(); ++b) {
    auto& m = m_[b];
    auto& v = v_[b];
    for (std::size_t i = 0; i < params[b].size(); ++i) {
      const double g = grads[b][i];
      m[i] = kAdamBeta1 * m[i] + (1.0 - kAdamBeta1) * g;
      v[i] = kAdamBeta2 * v[i] + (1.0 - kAdamBeta2) * g * g;
      const double m_hat = m[i] / c1;
      const double v_hat = v[i] / c2;
      params[b][i] -= lr_ * m_hat / (std::sqrt(v_hat) + kAdamEps);
    }
  }
}

GcnInput::GcnInput(const Graph& graph)
    : adj_(normalize_adjacency(graph)), feature_dim_(graph.feature_dim()) {
  const Matrix& x = graph.features();
  nz_offsets_.assign(x.rows() + 1, 0);
  for (std::size_t r = 0; r < x.rows(); ++r) {
    const auto row = x.row(r);
    for (std::size_t c = 0; c < row.size(); ++c) {
      if (row[c] != 0.0) {
        nz_cols_.push_back(static_cast<std::uint32_t>(c));
        nz_vals_.push_back(row[c]);
      }
    }
    nz_offsets_[r + 1] = nz_cols_.size();
  }
}

namespace {

// out = A * in, rows accumulated in ascending column order.
Matrix propagate(const SparseMatrix& a, const Matrix& in) {
  Matrix out(in.rows(), in.cols());
  for (std::size_t r = 0; r < a.n; ++r) {
    auto dst = out.row(r);
    for (std::uint64_t k = a.offsets[r]; k < a.offsets[r + 1]; ++k) {
      const double w = a.vals[k];
      const auto src = in.row(a.cols[k]);
      for (std::size_t c = 0; c < dst.size(); ++c) dst[c] += w * src[c];
    }
  }
  return out;
}

// out = in * w (dense), accumulated over in's columns in ascending order.
Matrix matmul(const Matrix& in, const Matrix& w) {
  Matrix out(in.rows(), w.cols());
  for (std::size_t r = 0; r < in.rows(); ++r) {
    auto dst = out.row(r);
    const auto src = in.row(r);
    for (std::size_t k = 0; k < src.size(); ++k) {
      const double s = src[k];
      if (s == 0.0) continue;
      const auto wrow = w.row(k);
      for (std::size_t c = 0; c < dst.size(); ++c) dst[c] += s * wrow[c];
    }
  }
  return out;
}

void check_shapes(const ModelParams& p, const GcnInput& input) {
  if (p.w1.rows() != input.feature_dim()) {
    throw InvalidArgument("model input dim " + std::to_string(p.w1.rows()) +
                          " != graph feature dim " + std::to_string(input.feature_dim()));
  }
  if (p.b1.size() != p.w1.cols() || p.w2.rows() != p.w1.cols() || p.b2.size() != p.w2.cols()) {
    throw InvalidArgument("inconsistent model parameter shapes");
  }
}

}  // namespace

Matrix softmax_rows(const Matrix& logits) {
  Matrix p(logits.rows(), logits.cols());
  for (std::size_t r = 0; r < logits.rows(); ++r) {
    const auto z = logits.row(r);
    auto out = p.row(r);
    const double m = *std::max_element(z.begin(), z.end());
    double sum = 0.0;
    for (std::size_t c = 0; c < z.size(); ++c) {
      out[c] = std::exp(z[c] - m);
      sum += out[c];
    }
    for (auto& v : out) v /= sum;
  }
  return p;
}

ForwardCache forward_cached(const ModelParams& params, const GcnInput& input) {
  check_shapes(params, input);
  const std::size_t n = input.num_nodes();
  const std::size_t h = params.hidden_dim();

  Matrix xw(n, h);
  for (std::size_t r = 0; r < n; ++r) {
    auto dst = xw.row(r);
    const auto cols = input.nz_cols(r);
    const auto vals = input.nz_vals(r);
    for (std::size_t k = 0; k < cols.size(); ++k) {
      const auto wrow = params.w1.row(cols[k]);
      const double s = vals[k];
      for (std::size_t c = 0; c < h; ++c) dst[c] += s * wrow[c];
    }
  }

  ForwardCache fc;
  fc.pre_hidden = propagate(input.adjacency(), xw);
  fc.hidden = Matrix(n, h);
  for (std::size_t r = 0; r < n; ++r) {
    auto pre = fc.pre_hidden.row(r);
    auto hid = fc.hidden.row(r);
    for (std::size_t c = 0; c < h; ++c) {
      pre[c] += params.b1[c];
      hid[c] = pre[c] > 0.0 ? pre[c] : 0.0;
    }
  }
  fc.logits = propagate(input.adjacency(), matmul(fc.hidden, params.w2));
  for (std::size_t r = 0; r < n; ++r) {
    auto z = fc.logits.row(r);
    for (std::size_t c = 0; c < z.size(); ++c) z[c] += params.b2[c];
  }
  fc.probs = softmax_rows(fc.logits);
  return fc;
}

Posteriors forward(const ModelParams& params, const GcnInput& input) {
  auto fc = forward_cached(params, input);
  return {std::move(fc.probs), std::move(fc.logits)};
}

Posteriors forward(const ModelParams& params, const Graph& graph) {
  return forward(params, GcnInput(graph));
}

ModelParams backward(const ModelParams& params, const GcnInput& input, const ForwardCache& cache,
                     const Matrix& logits_grad) {
  const std::size_t n = input.num_nodes();
  const std::size_t h = params.hidden_dim();
  const std::size_t c = params.num_classes();
  ModelParams g = ModelParams::zeros(params.input_dim(), h, c);

  for (std::size_t r = 0; r < n; ++r) {
    const auto dz = logits_grad.row(r);
    for (std::size_t k = 0; k < c; ++k) g.b2[k] += dz[k];
  }
  // Â is symmetric, so Âᵀ G = Â G.
  const Matrix d_hw = propagate(input.adjacency(), logits_grad);

  Matrix d_pre(n, h);
  for (std::size_t r = 0; r < n; ++r) {
    const auto hid = cache.hidden.row(r);
    const auto dhw = d_hw.row(r);
    for (std::size_t k = 0; k < h; ++k) {
      if (hid[k] != 0.0) {
        auto gw = g.w2.row(k);
        for (std::size_t j = 0; j < c; ++j) gw[j] += hid[k] * dhw[j];
      }
    }
    const auto pre = cache.pre_hidden.row(r);
    auto dp = d_pre.row(r);
    for (std::size_t k = 0; k < h; ++k) {
      if (pre[k] > 0.0) {
        const auto w2row = params.w2.row(k);
        double s = 0.0;
        for (std::size_t j = 0; j < c; ++j) s += dhw[j] * w2row[j];
        dp[k] = s;
      }
    }
    for (std::size_t k = 0; k < h; ++k) g.b1[k] += dp[k];
  }

  const Matrix d_xw = propagate(input.adjacency(), d_pre);
  for (std::size_t r = 0; r < n; ++r) {
    const auto cols = input.nz_cols(r);
    const auto vals = input.nz_vals(r);
    const auto src = d_xw.row(r);
    for (std::size_t k = 0; k < cols.size(); ++k) {
      auto dst = g.w1.row(cols[k]);
      const double s = vals[k];
      for (std::size_t j = 0; j < h; ++j) dst[j] += s * src[j];
    }
  }
  return g;
}

ModelParams backward(const ModelParams& params, const Graph& graph, const Matrix& logits_grad) {
  const GcnInput input(graph);
  return backward(params, input, forward_cached(params, input), logits_grad);
}

ModelParams glorot_init(std::size_t d, std::size_t h, std::size_t c, std::uint64_t seed) {
  ModelParams p = ModelParams::zeros(d, h, c);
  SplitMix64 rng(seed);
  const double lim1 = std::sqrt(6.0 / static_cast<double>(d + h));
  for (auto& w : p.w1.data()) w = (2.0 * rng.uniform() - 1.0) * lim1;
  const double lim2 = std::sqrt(6.0 / static_cast<double>(h + c));
  for (auto& w : p.w2.data()) w = (2.0 * rng.uniform() - 1.0) * lim2;
  return p;
}

double training_loss(const ModelParams& params, const ForwardCache& cache,
                     std::span<const NodeId> nodes, std::span<const int> labels,
                     double weight_decay, Matrix* logits_grad) {
  if (logits_grad) *logits_grad = Matrix(cache.logits.rows(), cache.logits.cols());
  double ce = 0.0;
  const double inv = nodes.empty() ? 0.0 : 1.0 / static_cast<double>(nodes.size());
  for (NodeId v : nodes) {
    const auto z = cache.logits.row(v);
    const auto p = cache.probs.row(v);
    const auto y = static_cast<std::size_t>(labels[v]);
    const double m = *std::max_element(z.begin(), z.end());
    double sum = 0.0;
    for (double zk : z) sum += std::exp(zk - m);
    ce -= (z[y] - m - std::log(sum));
    if (logits_grad) {
      auto dz = logits_grad->row(v);
      for (std::size_t k = 0; k < dz.size(); ++k) dz[k] = p[k] * inv;
      dz[y] -= inv;
    }
  }
  double reg = 0.0;
  for (double w : params.w1.data()) reg += w * w;
  for (double w : params.w2.data()) reg += w * w;
  return ce * inv + weight_decay * reg;
}

void add_weight_decay_grad(const ModelParams& params, double weight_decay, ModelParams& grads) {
  if (weight_decay == 0.0) return;
  for (std::size_t i = 0; i < params.w1.size(); ++i) {
    grads.w1.data()[i] += 2.0 * weight_decay * params.w1.data()[i];
  }
  for (std::size_t i = 0; i < params.w2.size(); ++i) {
    grads.w2.data()[i] += 2.0 * weight_decay * params.w2.data()[i];
  }
}

TrainResult train_on(const GcnInput& input, std::span<const NodeId> nodes,
                     std::span<const int> labels, std::size_t num_classes,
                     const TrainConfig& cfg) {
  cfg.validate();
  if (nodes.empty()) throw InvalidArgument("training requires at least one labeled node");
  TrainResult result;
  result.params = glorot_init(input.feature_dim(), cfg.hidden_dim, num_classes, cfg.seed);
  ModelParams& p = result.params;
  result.losses.reserve(static_cast<std::size_t>(cfg.epochs) + 1);
  Optimizer opt(cfg.optimizer, cfg.learning_rate);
  Matrix dz;
  for (int epoch = 0; epoch < cfg.epochs; ++epoch) {
    const ForwardCache fc = forward_cached(p, input);
    const double loss = training_loss(p, fc, nodes, labels, cfg.weight_decay, &dz);
    if (!std::isfinite(loss)) {
      throw NumericError("training diverged: non-finite loss at epoch " + std::to_string(epoch));
    }
    result.losses.push_back(loss);
    ModelParams g = backward(p, input, fc, dz);
    add_weight_decay_grad(p, cfg.weight_decay, g);
    opt.step({p.w1.data(), p.b1, p.w2.data(), p.b2},
             {g.w1.data(), g.b1, g.w2.data(), g.b2});
    // ReLU maps NaN to zero, so a poisoned weight can hide behind a finite loss.
    if (!p.all_finite()) {
      throw NumericError("training diverged: non-finite parameters after epoch " + std::to_string(epoch));
    }
  }
  const ForwardCache fc = forward_cached(p, input);
  const double final_loss = training_loss(p, fc, nodes, labels, cfg.weight_decay, nullptr);
  if (!std::isfinite(final_loss) || !p.all_finite()) {
    throw NumericError("training diverged: non-finite loss at epoch " + std::to_string(cfg.epochs));
  }
  result.losses.push_back(final_loss);
  return result;
}

TrainResult train_with_trace(const Graph& graph, const TrainConfig& cfg) {
  const GcnInput input(graph);
  const auto nodes = graph.train_nodes();
  return train_on(input, nodes, graph.labels(), static_cast<std::size_t>(graph.num_classes()), cfg);
}

ModelParams train(const Graph& graph, const TrainConfig& cfg) {
  return train_with_trace(graph, cfg).params;
}

std::size_t argmax(std::span<const double> row) {
  std::size_t best = 0;
  for (std::size_t k = 1; k < row.size(); ++k) {
    if (row[k] > row[best]) best = k;
  }
  return best;
}

double accuracy_from_probs(const Matrix& probs, const Graph& graph, std::span<const NodeId> nodes) {
  if (nodes.empty()) return 1.0;
  std::size_t correct = 0;
  for (NodeId v : nodes) {
    const int y = graph.label(v);
    if (y != kNoLabel && argmax(probs.row(v)) == static_cast<std::size_t>(y)) ++correct;
  }
  return static_cast<double>(correct) / static_cast<double>(nodes.size());
}

double accuracy(const ModelParams& params, const Graph& graph, std::span<const NodeId> nodes,
                const Graph* eval_graph) {
  if (nodes.empty()) return 1.0;
  const Graph& source = eval_graph ? *eval_graph : graph;
  if (source.num_nodes() != graph.num_nodes()) {
    throw InvalidArgument("evaluation graph has a different node count");
  }
  return accuracy_from_probs(forward(params, source).probs, graph, nodes);
}

}  // namespace mgu
