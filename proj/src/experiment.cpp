#include "mgu/experiment.hpp"

#include <algorithm>
#include <array>
#include <chrono>
#include <cmath>

#include <fmt/format.h>
#include <spdlog/spdlog.h>

#include "mgu/errors.hpp"
#include "mgu/parallel.hpp"
#include "mgu/rng.hpp"
#include "mgu/serialize.hpp"
#include "mgu/unlearn.hpp"

namespace mgu {

namespace {

// Seed streams derived from each run seed.
constexpr std::uint64_t kRandomSetStream = 1;
constexpr std::uint64_t kNegativeStream = 2;

template <typename Fn>
auto stage(const char* name, Fn&& fn) {
  spdlog::info("stage {}", name);
  try {
    return fn();
  } catch (const StageError&) {
    throw;
  } catch (const Error& e) {
    throw StageError(name, e.kind(), e.what());
  } catch (const std::exception& e) {
    throw StageError(name, "runtime", e.what());
  }
}

std::vector<Edge> select_edges(const Graph& graph, const std::vector<double>& node_scores,
                               DifficultySetting setting, double ratio, std::uint64_t seed) {
  const auto scored = edge_difficulty(graph, node_scores, MissingScorePolicy::Zero);
  const std::size_t count = difficulty_set_size(ratio, scored.size());
  std::vector<std::size_t> order(scored.size());
  for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
  switch (setting) {
    case DifficultySetting::Easy:
      std::stable_sort(order.begin(), order.end(),
                       [&](auto a, auto b) { return scored[a].score < scored[b].score; });
      break;
    case DifficultySetting::Hard:
      std::stable_sort(order.begin(), order.end(),
                       [&](auto a, auto b) { return scored[a].score > scored[b].score; });
      break;
    case DifficultySetting::Random: {
      SplitMix64 rng(seed);
      shuffle(order, rng);
      break;
    }
    case DifficultySetting::Local:
    case DifficultySetting::Distant: {
      const auto test = graph.test_nodes();
      const auto dist = hop_distances(graph, test);
      auto near = [&](std::size_t i) { return std::min(dist[scored[i].edge.u], dist[scored[i].edge.v]); };
      if (setting == DifficultySetting::Local) {
        std::stable_sort(order.begin(), order.end(), [&](auto a, auto b) { return near(a) < near(b); });
      } else {
        std::stable_sort(order.begin(), order.end(), [&](auto a, auto b) { return near(a) > near(b); });
      }
      break;
    }
  }
  std::vector<Edge> out;
  for (std::size_t i = 0; i < count; ++i) out.push_back(scored[order[i]].edge);
  return out;
}

std::string run_dir(std::uint64_t seed, DifficultySetting setting) {
  return fmt::format("seed{}/{}", seed, to_string(setting));
}

}  // namespace

MemConfig resolve_mem_config(const ExperimentConfig& cfg, const Graph& graph) {
  MemConfig m = cfg.mem;
  if (cfg.mem_estimator_auto) {
    m.estimator = graph.train_nodes().size() > cfg.subsample_threshold ? MemEstimator::Subsample
                                                                       : MemEstimator::ExactLoo;
  }
  return m;
}

UnlearnRequest build_request(RequestKind task, DifficultySetting setting, const Graph& graph,
                             const std::vector<double>& node_scores, double ratio,
                             std::uint64_t seed) {
  if (task == RequestKind::Edge) {
    return UnlearnRequest::edge_deletion(select_edges(graph, node_scores, setting, ratio, seed));
  }
  const auto sets = build_difficulty_sets(node_scores, graph, graph.test_nodes(), ratio, seed);
  const auto& nodes = sets.get(setting);
  return task == RequestKind::Node ? UnlearnRequest::node_deletion(nodes)
                                   : UnlearnRequest::feature_deletion(nodes);
}

ExperimentResult run_experiment(const ExperimentConfig& cfg, ArtifactWriter& out,
                                std::size_t workers, const MemTable* mem_override) {
  const auto started = std::chrono::steady_clock::now();
  cfg.validate();
  out.write_json("config.json", to_json(cfg));

  const Graph graph = stage("load", [&] { return load_dataset(cfg.dataset); });
  ExperimentResult result;

  result.mem = stage("memorization", [&] {
    if (mem_override) return *mem_override;
    MemConfig m = resolve_mem_config(cfg, graph);
    m.workers = workers;
    return estimate_mem(graph, m, cfg.train);
  });
  const auto scores = result.mem.mem_by_node(graph.num_nodes());
  out.write("mem/mem_table.csv", mem_table_csv(result.mem));
  out.write_json("mem/mem_table.json", mem_table_metadata(result.mem));
  out.write("mem/mem_hist.svg", histogram_svg(scores, "memorization score"));

  result.centrality = stage("centrality", [&] {
    const auto sets = build_difficulty_sets(scores, graph, graph.test_nodes(), cfg.ratio, 0);
    return centrality_contrast(graph, sets);
  });
  out.write("centrality.csv", centrality_csv(result.centrality));

  const auto& seeds = cfg.seeds;
  const auto& settings = cfg.settings;
  auto seeded = [&](std::uint64_t seed) {
    TrainConfig t = cfg.train;
    t.seed = seed;
    return t;
  };

  std::vector<ModelParams> originals(seeds.size());
  stage("train_original", [&] {
    parallel_for(seeds.size(), workers, [&](std::size_t s) { originals[s] = train(graph, seeded(seeds[s])); });
    return 0;
  });
  if (cfg.save_models) {
    for (std::size_t s = 0; s < seeds.size(); ++s) {
      out.write(fmt::format("models/seed{}/original.json", seeds[s]), save_model(originals[s]));
    }
  }

  constexpr std::size_t kMethods = 3;
  const std::size_t cells = seeds.size() * settings.size();
  std::vector<std::array<EvalReport, kMethods>> cell_reports(cells);
  std::vector<std::array<ModelParams, kMethods + 1>> cell_models(cells);
  stage("unlearn", [&] {
    parallel_for(cells, workers, [&](std::size_t cell) {
      const std::size_t s = cell / settings.size();
      const auto setting = settings[cell % settings.size()];
      const std::uint64_t seed = seeds[s];
      const auto request = build_request(cfg.task, setting, graph, scores, cfg.ratio,
                                         derive_seed(seed, kRandomSetStream));
      UnlearnConfig ucfg = cfg.unlearn;
      ucfg.seed = seed;
      const auto retrained = unlearn_retrain(graph, request, seeded(seed));
      const UnlearnVariant variants[kMethods] = {UnlearnVariant::Mgu, UnlearnVariant::NoMargin,
                                                 UnlearnVariant::NoDistill};
      for (std::size_t m = 0; m < kMethods; ++m) {
        auto params = run_unlearning(originals[s], graph, request, ucfg, variants[m]).params;
        auto report = evaluate(params, retrained, graph, request, derive_seed(seed, kNegativeStream));
        report.metadata["method"] = to_string(variants[m]);
        report.metadata["setting"] = to_string(setting);
        report.metadata["seed"] = seed;
        report.metadata["deleted_count"] =
            request.kind == RequestKind::Edge ? request.edges.size() : request.nodes.size();
        cell_reports[cell][m] = std::move(report);
        cell_models[cell][m] = std::move(params);
      }
      cell_models[cell][kMethods] = retrained;
    });
    return 0;
  });

  for (std::size_t m = 0; m < kMethods; ++m) {
    for (std::size_t k = 0; k < settings.size(); ++k) {
      for (std::size_t s = 0; s < seeds.size(); ++s) {
        const std::size_t cell = s * settings.size() + k;
        const auto dir = run_dir(seeds[s], settings[k]);
        out.write_json(fmt::format("reports/{}/{}.json", dir, kMethodSlugs[m]),
                       report_to_json(cell_reports[cell][m]));
        if (cfg.save_models) {
          out.write(fmt::format("models/{}/{}.json", dir, kMethodSlugs[m]), save_model(cell_models[cell][m]));
          if (m == 0) {
            out.write(fmt::format("models/{}/retrained.json", dir), save_model(cell_models[cell][kMethods]));
          }
        }
        result.reports.push_back(cell_reports[cell][m]);
      }
    }
  }
  result.aggregate = aggregate_reports(result.reports);
  out.write("aggregate.csv", aggregate_csv(result.aggregate));

  const double wall = std::chrono::duration<double>(std::chrono::steady_clock::now() - started).count();
  out.write_manifest({{"command", "experiment"},
                      {"config", to_json(cfg)},
                      {"seeds", cfg.seeds},
                      {"workers", workers},
                      {"wall_time_s", wall}});
  return result;
}

}  // namespace mgu
