// Acceptance suite: one PASS/FAIL line per criterion.
//
//   acceptance          synthetic criteria (SBM based), exit 0 iff all pass
//   acceptance --cora   Cora criteria; exit 77 (skipped) when the dataset is
//                       not found under $MGU_CORA_DIR or data/cora

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <functional>
#include <map>
#include <optional>
#include <random>
#include <sstream>
#include <string>
#include <thread>

#include <fmt/format.h>

#include "mgu/centrality.hpp"
#include "mgu/config.hpp"
#include "mgu/eval.hpp"
#include "mgu/experiment.hpp"
#include "mgu/loaders.hpp"
#include "mgu/margin.hpp"
#include "mgu/memorization.hpp"
#include "mgu/report.hpp"
#include "mgu/sbm.hpp"
#include "mgu/stats.hpp"
#include "mgu/unlearn.hpp"
#include "oracles.hpp"

namespace fs = std::filesystem;
using namespace mgu;

namespace {

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point t0) {
  return std::chrono::duration<double>(Clock::now() - t0).count();
}

struct Tally {
  int passed = 0;
  int failed = 0;

  void report(const std::string& id, const std::string& name, bool ok, const std::string& detail) {
    std::printf("%s  %-4s %s: %s\n", ok ? "PASS" : "FAIL", id.c_str(), name.c_str(), detail.c_str());
    std::fflush(stdout);
    (ok ? passed : failed) += 1;
  }
};

std::size_t workers() { return std::max(1u, std::thread::hardware_concurrency()); }

fs::path scratch(const std::string& name) {
  const auto dir = fs::temp_directory_path() / "mgu_acceptance" / name;
  fs::remove_all(dir);
  fs::create_directories(dir);
  return dir;
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

// ---------------------------------------------------------------------------
// Shared fixtures

// 300 nodes, three blocks, 5% of train labels resampled.
SbmSpec acceptance_sbm_spec() {
  SbmSpec spec;
  spec.blocks = {100, 100, 100};
  spec.p_in = 0.05;
  spec.p_out = 0.005;
  spec.feat_dim = 16;
  spec.label_noise = 0.05;
  spec.seed = 0;
  return spec;
}

TrainConfig acceptance_train() {
  TrainConfig t;
  t.hidden_dim = 16;
  t.epochs = 200;
  return t;
}

struct AcceptanceSbm {
  Graph graph;
  std::vector<MemTable> mem;  // exact LOO, one table per memorization seed
  std::vector<double> mem_seconds;
};

const AcceptanceSbm& acceptance_sbm() {
  static const AcceptanceSbm data = [] {
    AcceptanceSbm d{gen_sbm(acceptance_sbm_spec()), {}, {}};
    for (std::uint64_t seed = 0; seed < 3; ++seed) {
      MemConfig m;
      m.seed = seed;
      m.workers = workers();
      const auto t0 = Clock::now();
      d.mem.push_back(estimate_mem_exact(d.graph, m, acceptance_train()));
      d.mem_seconds.push_back(seconds_since(t0));
    }
    return d;
  }();
  return data;
}

ExperimentConfig acceptance_experiment(std::vector<std::uint64_t> seeds,
                                       std::vector<DifficultySetting> settings) {
  ExperimentConfig cfg;
  cfg.dataset.source = "sbm";
  cfg.dataset.sbm = acceptance_sbm_spec();
  cfg.train = acceptance_train();
  cfg.mem_estimator_auto = false;
  cfg.ratio = 0.05;
  cfg.seeds = std::move(seeds);
  cfg.settings = std::move(settings);
  cfg.save_models = false;
  return cfg;
}

// Mean ToU per (method, setting) from a run's reports.
std::map<std::pair<std::string, std::string>, double> mean_tou(const ExperimentResult& r,
                                                               std::size_t max_seed_count) {
  std::map<std::pair<std::string, std::string>, std::vector<double>> by_cell;
  for (const auto& rep : r.reports) {
    if (rep.metadata.at("seed").get<std::uint64_t>() >= max_seed_count) continue;
    by_cell[{rep.metadata.at("method").get<std::string>(), rep.metadata.at("setting").get<std::string>()}]
        .push_back(rep.tou);
  }
  std::map<std::pair<std::string, std::string>, double> out;
  for (const auto& [key, xs] : by_cell) out[key] = stats::mean(xs);
  return out;
}

// ---------------------------------------------------------------------------
// Criterion 1: analytic gradients against central differences

void gradient_correctness(Tally& tally) {
  const auto t0 = Clock::now();
  double worst_forward = 0.0, worst_margin = 0.0, worst_distill = 0.0;
  std::size_t instances = 0;
  for (std::uint64_t seed = 0; seed < 24; ++seed, ++instances) {
    const std::size_t n = 10 + seed % 11;
    const int classes = 2 + static_cast<int>(seed % 2);
    const auto g = oracle::random_graph(n, 4, classes, 1000 + seed, 0.25);
    TrainConfig t;
    t.hidden_dim = 6;
    t.epochs = 30;
    t.seed = seed;
    const auto teacher = train(g, t);

    const auto train_nodes = g.train_nodes();
    const std::vector<UnlearnRequest> requests{
        UnlearnRequest::node_deletion({train_nodes[0], train_nodes[2]}),
        UnlearnRequest::edge_deletion({g.edge_list().front(), g.edge_list().back()}),
        UnlearnRequest::feature_deletion({train_nodes[1]})};
    const auto& req = requests[seed % 3];
    UnlearnConfig cfg;
    cfg.tau_mode = seed % 2 ? TauMode::Learnable : TauMode::Frozen;
    const auto ctx = UnlearnContext::build(teacher, g, req, cfg);

    // Redraw the student until no hidden pre-activation lies near a ReLU kink
    // on either graph, where a step of 1e-5 could cross it.
    std::mt19937_64 rng(seed);
    std::normal_distribution<double> nd(0.0, 0.1);
    const GcnInput input_full(g);
    auto clear_of_kinks = [&](const ModelParams& q) {
      for (const auto* in : {&input_full, &ctx.input_remaining}) {
        const auto cache = forward_cached(q, *in);
        for (double x : cache.pre_hidden.data()) {
          if (std::abs(x) < 1e-3) return false;
        }
      }
      return true;
    };
    ModelParams student;
    do {
      student = teacher;
      for (double* x : oracle::flat(student)) *x += nd(rng);
    } while (!clear_of_kinks(student));

    // Forward pass through a random linear functional of the logits.
    Matrix coef(n, static_cast<std::size_t>(classes));
    for (auto& c : coef.data()) c = nd(rng) * 10.0;
    auto functional = [&](const ModelParams& q) {
      const auto z = forward(q, g).logits;
      double s = 0.0;
      for (std::size_t i = 0; i < z.size(); ++i) s += z.data()[i] * coef.data()[i];
      return s;
    };
    worst_forward = std::max(worst_forward, oracle::max_rel_error(oracle::flat_grad(backward(student, g, coef)),
                                                                  oracle::central_diff(student, functional)));

    ModelParams with_tau = student;
    if (cfg.tau_mode == TauMode::Learnable) {
      with_tau.tau = ctx.tau_init;
      for (auto& x : *with_tau.tau) x += nd(rng);
    }
    const auto m = margin_loss(with_tau, ctx, cfg);
    worst_margin = std::max(
        worst_margin, oracle::max_rel_error(oracle::flat_grad(m.grad), oracle::central_diff(with_tau, [&](const auto& q) {
                                              return margin_loss(q, ctx, cfg).value;
                                            })));
    const auto d = distill_loss(student, ctx);
    worst_distill = std::max(
        worst_distill, oracle::max_rel_error(oracle::flat_grad(d.grad), oracle::central_diff(student, [&](const auto& q) {
                                               return distill_loss(q, ctx).value;
                                             })));
  }
  const double elapsed = seconds_since(t0);
  const double worst = std::max({worst_forward, worst_margin, worst_distill});
  tally.report("1", "gradient correctness", worst < 1e-6 && elapsed < 30.0,
               fmt::format("{} instances of 10-20 nodes, step 1e-5, max rel err forward {:.2e} margin {:.2e} "
                           "distill {:.2e} (< 1e-6), {:.1f} s (< 30 s)",
                           instances, worst_forward, worst_margin, worst_distill, elapsed));
}

// ---------------------------------------------------------------------------
// Criterion 2: formula oracles

std::vector<std::vector<double>> dense_probs(const ModelParams& p, std::size_t n, const std::vector<Edge>& edges,
                                             const Matrix& x) {
  auto z = oracle::dense_logits(p, n, edges, x);
  for (auto& row : z) {
    double mx = row[0];
    for (double v : row) mx = std::max(mx, v);
    double s = 0.0;
    for (double& v : row) s += (v = std::exp(v - mx));
    for (double& v : row) v /= s;
  }
  return z;
}

double dense_accuracy(const std::vector<std::vector<double>>& probs, const std::vector<int>& labels,
                      const std::vector<NodeId>& nodes) {
  if (nodes.empty()) return 1.0;
  double hits = 0.0;
  for (NodeId v : nodes) {
    const auto& row = probs[v];
    std::size_t best = 0;
    for (std::size_t k = 1; k < row.size(); ++k) {
      if (row[k] > row[best]) best = k;
    }
    hits += static_cast<int>(best) == labels[v];
  }
  return hits / static_cast<double>(nodes.size());
}

double dense_auc(const std::vector<std::vector<double>>& probs, const std::vector<Edge>& pos,
                 const std::vector<Edge>& neg) {
  auto cosine = [&](Edge e) {
    double dot = 0.0, na = 0.0, nb = 0.0;
    for (std::size_t k = 0; k < probs[e.u].size(); ++k) {
      dot += probs[e.u][k] * probs[e.v][k];
      na += probs[e.u][k] * probs[e.u][k];
      nb += probs[e.v][k] * probs[e.v][k];
    }
    return dot / std::sqrt(na * nb);
  };
  double wins = 0.0;
  for (const auto& p : pos)
    for (const auto& q : neg) {
      const double a = cosine(p), b = cosine(q);
      wins += a > b ? 1.0 : (a == b ? 0.5 : 0.0);
    }
  return wins / static_cast<double>(pos.size() * neg.size());
}

// Straight-line ToU of one request, sharing only the negative sample.
double oracle_tou(const ModelParams& u, const ModelParams& r, const Graph& g, const UnlearnRequest& req,
                  std::uint64_t negative_seed) {
  const std::size_t n = g.num_nodes();
  const auto edges = g.edge_list();
  const auto& x = g.features();
  std::vector<int> labels(n);
  std::vector<NodeId> train_nodes, test_nodes;
  for (NodeId v = 0; v < n; ++v) {
    labels[v] = g.label(v);
    if (g.is_train(v)) train_nodes.push_back(v);
    if (g.is_test(v)) test_nodes.push_back(v);
  }
  auto contains = [](const std::vector<NodeId>& s, NodeId v) { return std::find(s.begin(), s.end(), v) != s.end(); };

  std::vector<Edge> rem_edges;
  Matrix rem_x = x;
  std::vector<NodeId> rem_train;
  for (const auto& e : edges) {
    const bool cut = (req.kind == RequestKind::Node && (contains(req.nodes, e.u) || contains(req.nodes, e.v))) ||
                     (req.kind == RequestKind::Edge && std::find(req.edges.begin(), req.edges.end(), e) != req.edges.end());
    if (!cut) rem_edges.push_back(e);
  }
  for (NodeId v : train_nodes) {
    if (!(req.kind == RequestKind::Node && contains(req.nodes, v))) rem_train.push_back(v);
  }
  if (req.kind == RequestKind::Feature) {
    for (NodeId v : req.nodes)
      for (std::size_t j = 0; j < x.cols(); ++j) rem_x(v, j) = 0.0;
  }

  const auto pu = dense_probs(u, n, rem_edges, rem_x);
  const auto pr = dense_probs(r, n, rem_edges, rem_x);
  const double d_rem = std::abs(dense_accuracy(pu, labels, rem_train) - dense_accuracy(pr, labels, rem_train));
  const double d_test = std::abs(dense_accuracy(pu, labels, test_nodes) - dense_accuracy(pr, labels, test_nodes));
  double d_del = 0.0;
  switch (req.kind) {
    case RequestKind::Node: {
      const auto fu = dense_probs(u, n, edges, x);
      const auto fr = dense_probs(r, n, edges, x);
      d_del = std::abs(dense_accuracy(fu, labels, req.nodes) - dense_accuracy(fr, labels, req.nodes));
      break;
    }
    case RequestKind::Edge: {
      const auto neg = sample_negative_pairs(g, req.edges.size(), negative_seed);
      d_del = std::abs(dense_auc(pu, req.edges, neg) - dense_auc(pr, req.edges, neg));
      break;
    }
    case RequestKind::Feature: {
      const auto su = dense_probs(u, n, edges, x);
      const auto sr = dense_probs(r, n, edges, x);
      const auto eu = dense_probs(u, n, {}, x);
      const auto er = dense_probs(r, n, {}, x);
      d_del = 0.5 * (std::abs(dense_accuracy(su, labels, req.nodes) - dense_accuracy(sr, labels, req.nodes)) +
                     std::abs(dense_accuracy(eu, labels, req.nodes) - dense_accuracy(er, labels, req.nodes)));
      break;
    }
  }
  return oracle::tou(d_del, d_rem, d_test);
}

void formula_oracles(Tally& tally) {
  std::mt19937_64 rng(2024);
  std::uniform_real_distribution<double> u01(0.0, 1.0);
  constexpr int kCases = 1000;
  std::map<std::string, double> worst;
  std::map<std::string, int> cases;

  for (int i = 0; i < kCases; ++i) {
    const auto g = oracle::random_graph(10 + i % 7, 2, 2 + i % 3, 7000 + i, 0.1 + 0.2 * u01(rng));
    const auto n = g.num_nodes();
    const auto edges = g.edge_list();
    std::vector<std::uint8_t> eligible(n);
    for (auto& e : eligible) e = u01(rng) < 0.7;

    // Neighbor weights.
    {
      const NodeId v = static_cast<NodeId>(rng() % n);
      const double beta = 0.05 + 0.95 * u01(rng);
      const auto k = static_cast<std::uint32_t>(1 + rng() % 3);
      const auto got = neighbor_weights(g, v, k, beta, &eligible);
      const auto want = oracle::neighbor_weights(n, edges, v, k, beta, &eligible);
      double w = got.size() == want.size() ? 0.0 : 1.0;
      for (const auto& [node, x] : got) w = std::max(w, want.count(node) ? std::abs(x - want.at(node)) : 1.0);
      worst["neighbor weights"] = std::max(worst["neighbor weights"], w);
      ++cases["neighbor weights"];
    }
    // Edge and feature difficulty.
    std::vector<double> scores(n);
    for (auto& s : scores) s = u01(rng);
    {
      double w = 0.0;
      for (const auto& es : edge_difficulty(g, scores)) {
        w = std::max(w, std::abs(es.score - oracle::edge_difficulty(scores[es.edge.u], scores[es.edge.v],
                                                                    g.degree(es.edge.u), g.degree(es.edge.v))));
      }
      worst["edge difficulty"] = std::max(worst["edge difficulty"], w);
      ++cases["edge difficulty"];

      std::vector<std::vector<NodeId>> owners(3);
      for (auto& set : owners) {
        for (NodeId v = 0; v < n; ++v) {
          if (u01(rng) < 0.3 || (set.empty() && v + 1 == n)) set.push_back(v);
        }
        set.push_back(g.train_nodes()[rng() % g.train_nodes().size()]);
      }
      const auto feat = feature_difficulty(g, scores, owners);
      double fw = 0.0;
      for (std::size_t f = 0; f < owners.size(); ++f) {
        double s = 0.0, c = 0.0;
        for (NodeId v : owners[f]) {
          if (g.is_train(v)) s += scores[v], c += 1.0;
        }
        fw = std::max(fw, std::abs(feat[f] - s / c));
      }
      worst["feature difficulty"] = std::max(worst["feature difficulty"], fw);
      ++cases["feature difficulty"];
    }
    // Margins and temperatures on random simplices.
    {
      const std::size_t c = 2 + rng() % 5;
      std::gamma_distribution<double> gam(0.5, 1.0);
      auto simplex = [&] {
        std::vector<double> v(c);
        double s = 0.0;
        for (auto& x : v) s += (x = gam(rng) + 1e-12);
        for (auto& x : v) x /= s;
        return v;
      };
      const auto h = simplex();
      oracle::Mat protos;
      Matrix pm(c, c);
      for (std::size_t r = 0; r < c; ++r) {
        protos.push_back(simplex());
        for (std::size_t k = 0; k < c; ++k) pm(r, k) = protos[r][k];
      }
      const int y = static_cast<int>(rng() % c);
      worst["margin"] = std::max(worst["margin"], std::abs(margin(h, y, pm) - oracle::margin(h, y, protos)));
      ++cases["margin"];
      const double kl = 10.0 * u01(rng), t_max = 1.0 + 15.0 * u01(rng);
      worst["temperature"] =
          std::max(worst["temperature"], std::abs(temperature(kl, t_max) - oracle::temperature(kl, t_max)));
      ++cases["temperature"];
    }
    // ToU of node, edge and feature requests against the dense oracle.
    if (!(i % 3 == 1 && edges.empty())) {
      const auto pu = glorot_init(2, 4, static_cast<std::size_t>(g.num_classes()), 2 * i);
      const auto pr = glorot_init(2, 4, static_cast<std::size_t>(g.num_classes()), 2 * i + 1);
      const auto train_nodes = g.train_nodes();
      UnlearnRequest req;
      switch (i % 3) {
        case 0: req = UnlearnRequest::node_deletion({train_nodes[rng() % train_nodes.size()], train_nodes[0]}); break;
        case 1: req = UnlearnRequest::edge_deletion({edges[rng() % edges.size()], edges.front()}); break;
        default: req = UnlearnRequest::feature_deletion({train_nodes[rng() % train_nodes.size()], 1}); break;
      }
      const auto report = evaluate(pu, pr, g, req, 99 + i);
      const double want = oracle_tou(pu, pr, g, req, 99 + i);
      const std::string key = i % 3 == 0 ? "tou node" : (i % 3 == 1 ? "tou edge" : "tou feature");
      worst[key] = std::max(worst[key], std::abs(report.tou - want));
      ++cases[key];
    }
    {
      // The product itself on random diffs.
      const double a = u01(rng), b = u01(rng), c = u01(rng);
      worst["tou product"] = std::max(worst["tou product"], std::abs(tou_product(a, b, c) - oracle::tou(a, b, c)));
      ++cases["tou product"];
    }
  }
  // Each ToU family gets its own 1000 cases.
  for (int i = 0; cases["tou node"] < kCases || cases["tou edge"] < kCases || cases["tou feature"] < kCases; ++i) {
    const auto g = oracle::random_graph(10 + i % 7, 2, 2 + i % 3, 90000 + i, 0.25);
    const auto pu = glorot_init(2, 4, static_cast<std::size_t>(g.num_classes()), 5 * i);
    const auto pr = glorot_init(2, 4, static_cast<std::size_t>(g.num_classes()), 5 * i + 1);
    const auto train_nodes = g.train_nodes();
    const auto edges = g.edge_list();
    for (int kind = 0; kind < 3; ++kind) {
      UnlearnRequest req;
      std::string key;
      if (kind == 0) {
        req = UnlearnRequest::node_deletion({train_nodes[rng() % train_nodes.size()]});
        key = "tou node";
      } else if (kind == 1) {
        if (edges.empty()) continue;
        req = UnlearnRequest::edge_deletion({edges[rng() % edges.size()]});
        key = "tou edge";
      } else {
        req = UnlearnRequest::feature_deletion({train_nodes[rng() % train_nodes.size()]});
        key = "tou feature";
      }
      if (cases[key] >= kCases) continue;
      const auto report = evaluate(pu, pr, g, req, 3 + i);
      worst[key] = std::max(worst[key], std::abs(report.tou - oracle_tou(pu, pr, g, req, 3 + i)));
      ++cases[key];
    }
  }

  bool ok = true;
  std::string detail;
  for (const auto& [name, w] : worst) {
    ok = ok && w <= 1e-12 && cases[name] >= kCases;
    detail += fmt::format("{}{} {:.1e}/{}", detail.empty() ? "" : ", ", name, w, cases[name]);
  }
  tally.report("2", "formula oracles", ok, "max abs err/cases: " + detail + " (<= 1e-12, >= 1000 cases)");
}

// ---------------------------------------------------------------------------
// Criterion 3: subsample estimator against exact LOO

Graph oracle_sbm20() {
  SbmSpec spec;
  spec.blocks = {10, 10};
  spec.p_in = 0.4;
  spec.p_out = 0.05;
  spec.feat_dim = 8;
  spec.label_noise = 0.1;
  spec.seed = 20;
  return gen_sbm(spec);
}

void estimator_equivalence(Tally& tally) {
  const auto t0 = Clock::now();
  const auto g = oracle_sbm20();
  TrainConfig t = acceptance_train();
  MemConfig exact;
  exact.num_seeds = 5;
  exact.workers = workers();
  MemConfig sub = exact;
  sub.estimator = MemEstimator::Subsample;
  sub.num_subsample_models = 2000;
  sub.subsample_keep_frac = 0.7;
  const auto a = estimate_mem(g, exact, t);
  const auto b = estimate_mem(g, sub, t);
  double total = 0.0;
  std::size_t count = 0;
  for (std::size_t i = 0; i < a.rows.size(); ++i) {
    if (!b.rows[i].defined) continue;
    total += std::abs(a.rows[i].mem - b.rows[i].mem);
    ++count;
  }
  const double mad = count ? total / static_cast<double>(count) : 1.0;
  const double elapsed = seconds_since(t0);
  tally.report("3", "memorization estimator equivalence",
               count == a.rows.size() && mad <= 0.15 && elapsed < 600.0,
               fmt::format("20-node SBM, {} train nodes, subsample M=2000 keep 0.7 vs exact K=5: mean |diff| {:.4f} "
                           "(<= 0.15), {}/{} defined, {:.1f} s (< 600 s)",
                           a.rows.size(), mad, count, a.rows.size(), elapsed));
}

// ---------------------------------------------------------------------------
// Criterion 4: long-tailed memorization

void long_tail(Tally& tally) {
  const auto& d = acceptance_sbm();
  bool ok = true;
  std::string detail;
  double total_time = 0.0;
  for (std::size_t s = 0; s < d.mem.size(); ++s) {
    std::vector<double> mem;
    for (const auto& r : d.mem[s].rows) mem.push_back(r.mem);
    const double mean = stats::mean(mem), median = stats::median(mem), skew = stats::skewness(mem);
    ok = ok && mean > median && skew > 0.0;
    detail += fmt::format("seed {}: mean {:.4f} median {:.4f} skew {:.3f}; ", s, mean, median, skew);
    total_time += d.mem_seconds[s];
  }
  ok = ok && total_time < 1200.0;
  tally.report("4", "long-tailed memorization", ok,
               detail + fmt::format("exact LOO K=5 on 300-node SBM, {:.0f} s for 3 seeds (< 1200 s)", total_time));
}

// ---------------------------------------------------------------------------
// Criteria 5 and 7: ToU by difficulty setting and method on the acceptance SBM

void difficulty_and_ablation(Tally& tally) {
  const auto& d = acceptance_sbm();
  auto cfg = acceptance_experiment({0, 1, 2, 3, 4}, {DifficultySetting::Easy, DifficultySetting::Random,
                                                     DifficultySetting::Hard});
  ArtifactWriter out(scratch("sbm_experiment"));
  const auto result = run_experiment(cfg, out, workers(), &d.mem[0]);

  const auto three = mean_tou(result, 3);
  bool ok5 = true;
  std::string detail5;
  for (const char* method : {"MGU", "w/o Margin", "w/o Distill"}) {
    const double low = three.at({method, "easy"});
    const double high = three.at({method, "hard"});
    ok5 = ok5 && low - high >= 0.03;
    detail5 += fmt::format("{} easy {:.4f} hard {:.4f} gap {:+.4f}; ", method, low, high, low - high);
  }
  tally.report("5", "difficulty ordering", ok5, detail5 + "N=5%, 3 seeds, gap >= 0.03 required");

  const auto five = mean_tou(result, 5);
  const double mgu = five.at({"MGU", "hard"});
  const double nm = five.at({"w/o Margin", "hard"});
  const double nd = five.at({"w/o Distill", "hard"});
  const bool ok7 = mgu >= nm && mgu >= nd && std::max(mgu - nm, mgu - nd) >= 0.02;
  tally.report("7", "ablation superiority", ok7,
               fmt::format("hard setting, 5 seeds: MGU {:.4f}, w/o Margin {:.4f}, w/o Distill {:.4f}; gaps {:+.4f} "
                           "{:+.4f} (>= 0, one >= 0.02)",
                           mgu, nm, nd, mgu - nm, mgu - nd));

  // Supporting shape check: the aggregate covers three methods by three settings.
  std::size_t rows = result.aggregate.size();
  if (rows != 9) std::printf("note: aggregate has %zu rows, expected 9\n", rows);
}

// ---------------------------------------------------------------------------
// Criterion 6: generalization impact of deleting easy vs hard nodes

void generalization(Tally& tally) {
  const auto& d = acceptance_sbm();
  const auto test_nodes = d.graph.test_nodes();
  const auto sets = build_difficulty_sets(d.mem[0].mem_by_node(d.graph.num_nodes()), d.graph, test_nodes, 0.05, 0);
  const auto rows = generalization_impact(d.graph, sets, {DifficultySetting::Easy, DifficultySetting::Hard}, {0.05},
                                          acceptance_train(), {0, 1, 2}, workers());
  const auto& easy = rows[0];
  const auto& hard = rows[1];
  tally.report("6", "generalization impact", hard.mean_abs_delta > easy.mean_abs_delta,
               fmt::format("5% deletion, 3 seeds: mean |test acc delta| high_mem {:.4f} (mean {:+.4f}) vs low_mem "
                           "{:.4f} (mean {:+.4f})",
                           hard.mean_abs_delta, hard.mean_delta, easy.mean_abs_delta, easy.mean_delta));
}

// ---------------------------------------------------------------------------
// Criterion 10: determinism of the experiment command

int run_cli(const std::string& args) {
  const std::string cmd = std::string(MGU_BIN) + " " + args + " > /dev/null";
  const int status = std::system(cmd.c_str());
  return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

void determinism(Tally& tally) {
  const auto root = scratch("determinism");
  nlohmann::json cfg = {
      {"dataset",
       {{"source", "sbm"},
        {"sbm", {{"blocks", {30, 30, 30}}, {"p_in", 0.1}, {"p_out", 0.01}, {"feat_dim", 8}, {"label_noise", 0.05}}}}},
      {"train", {{"hidden_dim", 16}, {"epochs", 100}}},
      {"mem", {{"estimator", "exact_loo"}, {"num_seeds", 2}}},
      {"task", "edge"},
      {"settings", {"easy", "random", "hard", "local", "distant"}},
      {"seeds", {1, 2, 3}}};
  std::ofstream(root / "config.json") << cfg.dump(2);
  const std::string base = "experiment --config " + (root / "config.json").string();
  bool ok = true;
  for (const auto& [dir, w] : std::vector<std::pair<std::string, int>>{{"a", 1}, {"b", 1}, {"c", 4}}) {
    ok = ok && run_cli(base + " --workers " + std::to_string(w) + " --out " + (root / dir).string()) == 0;
  }
  std::size_t compared = 0, differing = 0;
  if (ok) {
    for (const auto& entry : fs::recursive_directory_iterator(root / "a")) {
      if (!entry.is_regular_file()) continue;
      const auto rel = fs::relative(entry.path(), root / "a");
      const auto name = rel.generic_string();
      const bool model = name.rfind("models/", 0) == 0;
      if (name != "aggregate.csv" && !model) continue;
      ++compared;
      const auto bytes = slurp(entry.path());
      for (const char* other : {"b", "c"}) {
        if (slurp(root / other / rel) != bytes) {
          ++differing;
          std::printf("note: %s differs in run %s\n", name.c_str(), other);
        }
      }
    }
  }
  ok = ok && compared > 1 && differing == 0;
  tally.report("10", "determinism", ok,
               fmt::format("experiment command rerun (workers 1, 1, 4): aggregate.csv and {} model files compared, "
                           "{} differing",
                           compared - 1, differing));
}

// ---------------------------------------------------------------------------
// Criterion 11: centrality contrast

std::string centrality_detail(const std::vector<std::vector<CentralityRow>>& per_seed, bool& ok) {
  std::string detail;
  ok = true;
  for (std::size_t m = 0; m < 3; ++m) {
    double easy = 0.0, hard = 0.0;
    for (const auto& rows : per_seed) {
      easy += rows[m].easy;
      hard += rows[m].hard;
    }
    easy /= static_cast<double>(per_seed.size());
    hard /= static_cast<double>(per_seed.size());
    const double ratio = hard > 0.0 ? easy / hard : INFINITY;
    const auto metric = per_seed.front()[m].metric;
    if (metric != CentralityMetric::PageRank) ok = ok && ratio > 1.0;
    detail += fmt::format("{} easy {:.4g} hard {:.4g} ratio {:.3f}; ", to_string(metric), easy, hard, ratio);
  }
  return detail;
}

void centrality_sbm(Tally& tally) {
  const auto& d = acceptance_sbm();
  std::vector<std::vector<CentralityRow>> per_seed;
  for (const auto& table : d.mem) {
    const auto sets = build_difficulty_sets(table.mem_by_node(d.graph.num_nodes()), d.graph, d.graph.test_nodes(),
                                            0.05, 0);
    per_seed.push_back(centrality_contrast(d.graph, sets));
  }
  bool ok = false;
  const auto detail = centrality_detail(per_seed, ok);
  tally.report("11a", "centrality contrast (SBM)", ok, detail + "mean over 3 seeds, degree and k-core ratio > 1");
}

// Auxiliary: sign of the margin proxy against exact memorization.
void proxy_orientation(Tally& tally) {
  const auto& d = acceptance_sbm();
  TrainConfig t = acceptance_train();
  const auto model = train(d.graph, t);
  const auto proxy = margin_proxy_difficulty(model, d.graph);
  std::vector<double> a, b;
  for (const auto& r : d.mem[0].rows) {
    a.push_back(proxy.scores[r.node]);
    b.push_back(r.mem);
  }
  const double rho = stats::spearman(a, b);
  tally.report("aux", "margin proxy correlation", std::abs(rho) >= 0.3,
               fmt::format("Spearman(proxy as_written, exact mem) = {:+.4f} on the acceptance SBM (|rho| >= 0.3); "
                           "orientation {}",
                           rho, rho >= 0 ? "as_written" : "negated"));
}

// ---------------------------------------------------------------------------
// Cora criteria 8, 9, 11b

std::optional<fs::path> find_cora() {
  std::vector<fs::path> candidates;
  if (const char* env = std::getenv("MGU_CORA_DIR")) candidates.emplace_back(env);
  candidates.emplace_back(fs::path(MGU_DATA_DIR) / "cora");
  for (const auto& dir : candidates) {
    if (fs::exists(dir / "cora.content") && fs::exists(dir / "cora.cites")) return dir;
  }
  return std::nullopt;
}

int run_cora(Tally& tally) {
  const auto dir = find_cora();
  if (!dir) {
    for (const char* line : {"8    desk-scale Cora reference", "9    efficiency sanity",
                             "11b  centrality contrast (Cora)"}) {
      std::printf("SKIP  %s: Cora not found (set MGU_CORA_DIR to a directory with cora.content and cora.cites)\n",
                  line);
    }
    return 77;
  }
  ExperimentConfig cfg;
  cfg.dataset.source = "linqs";
  cfg.dataset.content = (*dir / "cora.content").string();
  cfg.dataset.cites = (*dir / "cora.cites").string();
  cfg.mem_estimator_auto = false;
  cfg.mem.estimator = MemEstimator::Subsample;
  cfg.mem.num_subsample_models = 200;
  cfg.seeds = {0, 1, 2};
  cfg.settings = {DifficultySetting::Easy, DifficultySetting::Hard};
  cfg.save_models = false;

  const auto t0 = Clock::now();
  ArtifactWriter out(scratch("cora_experiment"));
  const auto result = run_experiment(cfg, out, workers());
  const double elapsed = seconds_since(t0);
  const auto tou = mean_tou(result, 3);
  const double easy = tou.at({"MGU", "easy"});
  const double hard = tou.at({"MGU", "hard"});
  tally.report("8", "desk-scale Cora reference", easy >= 0.90 && hard >= 0.80 && elapsed < 900.0,
               fmt::format("MGU node unlearning, 3 seeds: easy ToU {:.4f} (>= 0.90), hard ToU {:.4f} (>= 0.80); "
                           "pipeline {:.0f} s (< 900 s)",
                           easy, hard, elapsed));

  const Graph graph = load_dataset(cfg.dataset);
  const auto teacher = train(graph, cfg.train);
  const auto request = build_request(RequestKind::Node, DifficultySetting::Random, graph,
                                     result.mem.mem_by_node(graph.num_nodes()), 0.05, 0);
  const auto u0 = Clock::now();
  const auto unlearned = unlearn_mgu(teacher, graph, request, cfg.unlearn);
  const double unlearn_s = seconds_since(u0);
  const auto r0 = Clock::now();
  const auto retrained = unlearn_retrain(graph, request, cfg.train);
  const double retrain_s = seconds_since(r0);
  tally.report("9", "efficiency sanity", unlearn_s < 5.0 && retrain_s > unlearn_s,
               fmt::format("MGU 20 epochs {:.3f} s (< 5 s), retraining {:.3f} s (must be slower)", unlearn_s,
                           retrain_s));

  std::vector<std::vector<CentralityRow>> per_seed;
  for (std::uint64_t seed = 0; seed < 3; ++seed) {
    MemConfig m = cfg.mem;
    m.seed = seed;
    m.workers = workers();
    const auto table = seed == 0 ? result.mem : estimate_mem(graph, m, cfg.train);
    const auto sets = build_difficulty_sets(table.mem_by_node(graph.num_nodes()), graph, graph.test_nodes(), 0.05, 0);
    per_seed.push_back(centrality_contrast(graph, sets));
  }
  bool ok = false;
  const auto detail = centrality_detail(per_seed, ok);
  tally.report("11b", "centrality contrast (Cora)", ok, detail + "mean over 3 seeds, degree and k-core ratio > 1");
  (void)unlearned;
  (void)retrained;
  return tally.failed == 0 ? 0 : 1;
}

}  // namespace

int main(int argc, char** argv) {
  Tally tally;
  const bool cora = argc > 1 && std::string(argv[1]) == "--cora";
  if (cora) return run_cora(tally);

  const auto t0 = Clock::now();
  gradient_correctness(tally);
  formula_oracles(tally);
  estimator_equivalence(tally);
  long_tail(tally);
  difficulty_and_ablation(tally);
  generalization(tally);
  determinism(tally);
  centrality_sbm(tally);
  proxy_orientation(tally);
  std::printf("%d passed, %d failed, %.0f s\n", tally.passed, tally.failed, seconds_since(t0));
  return tally.failed == 0 ? 0 : 1;
}
