// mgu: command-line front end for training, memorization scoring, deletion
// sampling, unlearning, evaluation and the end-to-end experiment runner.

#include <chrono>
#include <cstdlib>
#include <filesystem>
#include <iostream>
#include <limits>
#include <optional>
#include <string>

#include <spdlog/sinks/stdout_color_sinks.h>
#include <spdlog/spdlog.h>

#include "CLI11.hpp"
#include "json.hpp"

#include "mgu/config.hpp"
#include "mgu/errors.hpp"
#include "mgu/eval.hpp"
#include "mgu/experiment.hpp"
#include "mgu/memorization.hpp"
#include "mgu/parallel.hpp"
#include "mgu/report.hpp"
#include "mgu/sbm.hpp"
#include "mgu/serialize.hpp"
#include "mgu/unlearn.hpp"

namespace fs = std::filesystem;
using nlohmann::json;
using namespace mgu;

namespace {

struct Common {
  std::string config;
  std::string out = "out";
  std::optional<std::uint64_t> seed;
  std::size_t workers = default_workers();
  std::string format = "json";
};

struct Inputs {
  std::string graph, model, scores, request, unlearned, retrained;
  std::string method = "mgu";
  std::string setting = "hard";
  std::string task;
  std::optional<double> ratio;
  bool proxy = false;
  std::string orientation = "as_written";
};

void add_common(CLI::App* cmd, Common& c) {
  cmd->add_option("--config", c.config, "JSON config file");
  cmd->add_option("--out", c.out, "output directory");
  cmd->add_option("--seed", c.seed, "root seed (overrides the config)");
  cmd->add_option("--workers", c.workers, "worker threads")->check(CLI::PositiveNumber);
  cmd->add_option("--format", c.format, "table format")->check(CLI::IsMember({"json", "csv"}));
}

json load_config_doc(const Common& c) {
  if (c.config.empty()) return json::object();
  if (!fs::exists(c.config)) throw ConfigError("config", "file not found: " + c.config);
  try {
    return read_json(c.config);
  } catch (const json::exception& e) {
    throw ConfigError("config", e.what());
  }
}

fs::path config_dir(const Common& c) {
  return c.config.empty() ? fs::path{} : fs::absolute(c.config).parent_path();
}

// The config with a `--graph` artifact standing in for the dataset.
ExperimentConfig load_config(const Common& c, const std::string& graph_path) {
  json doc = load_config_doc(c);
  if (!graph_path.empty()) doc["dataset"] = {{"source", "graph"}, {"graph", fs::absolute(graph_path).string()}};
  return experiment_config_from_json(doc, config_dir(c));
}

std::string require_flag(const std::string& value, const char* flag) {
  if (value.empty()) throw ConfigError(flag, "missing required flag --" + std::string(flag));
  if (!fs::exists(value)) throw ConfigError(flag, "file not found: " + value);
  return value;
}

class Run {
 public:
  Run(const Common& c, std::string command)
      : writer_(c.out), command_(std::move(command)), started_(std::chrono::steady_clock::now()) {}

  ArtifactWriter& out() { return writer_; }

  void finish(json config, json seeds) {
    const double wall = std::chrono::duration<double>(std::chrono::steady_clock::now() - started_).count();
    writer_.write_manifest({{"command", command_},
                            {"config", std::move(config)},
                            {"seeds", std::move(seeds)},
                            {"wall_time_s", wall}});
  }

 private:
  ArtifactWriter writer_;
  std::string command_;
  std::chrono::steady_clock::time_point started_;
};

void write_graph_if_generated(Run& run, const ExperimentConfig& cfg, const Graph& graph) {
  if (cfg.dataset.source != "graph") run.out().write_json("graph.json", graph_to_json(graph));
}

// Accepts mem_table.csv or the mem_table.json written with --format json.
std::vector<double> read_scores(const std::string& path, std::size_t n) {
  if (std::filesystem::path(path).extension() != ".json") {
    return mem_table_from_csv(read_file(path)).mem_by_node(n);
  }
  const json doc = read_json(path);
  if (!doc.contains("rows")) throw ConfigError("scores", path + " has no rows; write it with --format json");
  std::vector<double> scores(n, std::numeric_limits<double>::quiet_NaN());
  for (const auto& row : doc.at("rows")) {
    const auto v = row.at("node_id").get<std::size_t>();
    if (v >= n) throw ConfigError("scores", "node_id " + std::to_string(v) + " out of range");
    if (!row.at("mem").is_null()) scores[v] = row.at("mem").get<double>();
  }
  return scores;
}

json mem_rows_json(const MemTable& table) {
  json rows = json::array();
  for (const auto& r : table.rows) {
    if (r.defined) {
      rows.push_back({{"node_id", r.node}, {"delta_self", r.delta_self}, {"delta_nbr", r.delta_nbr}, {"mem", r.mem}});
    } else {
      rows.push_back({{"node_id", r.node}, {"delta_self", nullptr}, {"delta_nbr", nullptr}, {"mem", nullptr}});
    }
  }
  return rows;
}

void cmd_gen_sbm(const Common& c) {
  json doc = load_config_doc(c);
  if (doc.contains("dataset")) doc = doc.at("dataset");
  if (!doc.contains("sbm")) throw ConfigError("sbm", "missing required field");
  SbmSpec spec = sbm_spec_from_json(doc.at("sbm"));
  if (c.seed) spec.seed = *c.seed;
  Run run(c, "gen-sbm");
  run.out().write_json("graph.json", graph_to_json(gen_sbm(spec)));
  run.finish({{"sbm", to_json(spec)}}, {spec.seed});
}

void cmd_train(const Common& c, const Inputs& in) {
  auto cfg = load_config(c, in.graph);
  if (c.seed) cfg.train.seed = *c.seed;
  const Graph graph = load_dataset(cfg.dataset);
  Run run(c, "train");
  write_graph_if_generated(run, cfg, graph);
  const auto result = train_with_trace(graph, cfg.train);
  run.out().write("model.json", save_model(result.params));
  std::string losses = "epoch,loss\n";
  for (std::size_t i = 0; i < result.losses.size(); ++i) {
    losses += std::to_string(i) + "," + format_number(result.losses[i]) + "\n";
  }
  run.out().write("losses.csv", losses);
  spdlog::info("test accuracy {:.4f}", accuracy(result.params, graph, graph.test_nodes()));
  run.finish(to_json(cfg), {cfg.train.seed});
}

void cmd_memscore(const Common& c, const Inputs& in) {
  auto cfg = load_config(c, in.graph);
  if (c.seed) cfg.mem.seed = *c.seed;
  const Graph graph = load_dataset(cfg.dataset);
  MemConfig mem = resolve_mem_config(cfg, graph);
  mem.workers = c.workers;
  Run run(c, "memscore");
  write_graph_if_generated(run, cfg, graph);
  const auto table = estimate_mem(graph, mem, cfg.train);
  json meta = mem_table_metadata(table);
  if (c.format == "csv") {
    run.out().write("mem_table.csv", mem_table_csv(table));
  } else {
    meta["rows"] = mem_rows_json(table);
  }
  run.out().write_json("mem_table.json", meta);
  run.out().write("mem_hist.svg", histogram_svg(table.mem_by_node(graph.num_nodes()), "memorization score"));
  run.finish(to_json(cfg), table.model_seeds);
}

void cmd_difficulty(const Common& c, const Inputs& in) {
  auto cfg = load_config(c, in.graph);
  const Graph graph = load_dataset(cfg.dataset);
  if (!in.task.empty()) cfg.task = request_kind_from_string(in.task);
  Run run(c, "difficulty");
  std::vector<double> node_scores;
  if (in.proxy) {
    const auto model = load_model(read_file(require_flag(in.model, "model")));
    node_scores = margin_proxy_difficulty(model, graph, proxy_orientation_from_string(in.orientation)).scores;
  } else {
    node_scores = read_scores(require_flag(in.scores, "scores"), graph.num_nodes());
  }
  auto emit = [&](const std::string& stem, const std::string& csv, json rows) {
    if (c.format == "csv") {
      run.out().write(stem + ".csv", csv);
    } else {
      run.out().write_json(stem + ".json", rows);
    }
  };
  switch (cfg.task) {
    case RequestKind::Node: {
      std::string csv = "node_id,score\n";
      json rows = json::array();
      for (NodeId v : graph.train_nodes()) {
        csv += std::to_string(v) + "," + format_number(node_scores[v]) + "\n";
        rows.push_back({{"node_id", v}, {"score", std::isnan(node_scores[v]) ? json(nullptr) : json(node_scores[v])}});
      }
      emit("node_scores", csv, rows);
      break;
    }
    case RequestKind::Edge: {
      const auto scores = edge_difficulty(graph, node_scores);
      json rows = json::array();
      for (const auto& s : scores) rows.push_back({{"u", s.edge.u}, {"v", s.edge.v}, {"score", s.score}});
      emit("edge_scores", edge_scores_csv(scores), rows);
      break;
    }
    case RequestKind::Feature: {
      const auto owners = row_owner_sets(graph);
      const auto scores = feature_difficulty(graph, node_scores, owners);
      json rows = json::array();
      for (std::size_t f = 0; f < scores.size(); ++f) rows.push_back({{"feature_id", owners[f][0]}, {"score", scores[f]}});
      emit("feature_scores", feature_scores_csv(scores, owners), rows);
      break;
    }
  }
  run.finish(to_json(cfg), json::array());
}

void cmd_sample(const Common& c, const Inputs& in) {
  auto cfg = load_config(c, in.graph);
  const Graph graph = load_dataset(cfg.dataset);
  if (!in.task.empty()) cfg.task = request_kind_from_string(in.task);
  if (in.ratio) cfg.ratio = *in.ratio;
  cfg.validate();
  const std::uint64_t seed = c.seed.value_or(cfg.seeds.front());
  const auto setting = difficulty_setting_from_string(in.setting);
  const auto scores = read_scores(require_flag(in.scores, "scores"), graph.num_nodes());
  Run run(c, "sample");
  const auto request = build_request(cfg.task, setting, graph, scores, cfg.ratio, seed);
  run.out().write_json("request.json", request_to_json(request));
  const auto sets = build_difficulty_sets(scores, graph, graph.test_nodes(), cfg.ratio, seed);
  run.out().write_json("sets.json", {{"low_mem", sets.low_mem},
                                     {"high_mem", sets.high_mem},
                                     {"random", sets.random},
                                     {"local", sets.local},
                                     {"distant", sets.distant}});
  run.finish(to_json(cfg), {seed});
}

void cmd_unlearn(const Common& c, const Inputs& in) {
  auto cfg = load_config(c, in.graph);
  const Graph graph = load_dataset(cfg.dataset);
  const auto request = request_from_json(read_json(require_flag(in.request, "request")));
  Run run(c, "unlearn");
  ModelParams result;
  json seeds;
  if (in.method == "retrain") {
    if (c.seed) cfg.train.seed = *c.seed;
    result = unlearn_retrain(graph, request, cfg.train);
    seeds = {cfg.train.seed};
  } else {
    if (c.seed) cfg.unlearn.seed = *c.seed;
    const auto teacher = load_model(read_file(require_flag(in.model, "model")));
    const auto variant = in.method == "mgu"         ? UnlearnVariant::Mgu
                         : in.method == "no_margin" ? UnlearnVariant::NoMargin
                                                    : UnlearnVariant::NoDistill;
    const auto trace = run_unlearning(teacher, graph, request, cfg.unlearn, variant);
    std::string csv = "epoch,loss,margin_loss,distill_loss\n";
    for (std::size_t i = 0; i < trace.losses.size(); ++i) {
      csv += std::to_string(i) + "," + format_number(trace.losses[i]) + "," +
             format_number(trace.margin_losses[i]) + "," + format_number(trace.distill_losses[i]) + "\n";
    }
    run.out().write("losses.csv", csv);
    result = trace.params;
    seeds = {cfg.unlearn.seed};
  }
  run.out().write("model.json", save_model(result));
  json config = to_json(cfg);
  config["method"] = in.method;
  config["request"] = request_to_json(request);
  run.finish(config, seeds);
}

void cmd_evaluate(const Common& c, const Inputs& in) {
  auto cfg = load_config(c, in.graph);
  const Graph graph = load_dataset(cfg.dataset);
  const auto request = request_from_json(read_json(require_flag(in.request, "request")));
  const auto u = load_model(read_file(require_flag(in.unlearned, "unlearned")));
  const auto r = load_model(read_file(require_flag(in.retrained, "retrained")));
  const std::uint64_t seed = c.seed.value_or(cfg.seeds.front());
  Run run(c, "evaluate");
  const auto report = evaluate(u, r, graph, request, seed);
  if (c.format == "csv") {
    run.out().write("report.csv", report_csv(report));
  } else {
    run.out().write_json("report.json", report_to_json(report));
  }
  run.finish(to_json(cfg), {seed});
}

void cmd_experiment(const Common& c, bool out_given) {
  const json doc = load_config_doc(c);
  auto cfg = experiment_config_from_json(doc, config_dir(c));
  if (c.seed) cfg.seeds = {*c.seed};
  if (out_given || cfg.output_dir.empty()) cfg.output_dir = c.out;
  ArtifactWriter out(cfg.output_dir);
  const auto result = run_experiment(cfg, out, c.workers);
  std::cout << aggregate_csv(result.aggregate);
}

int error_exit(const std::string& kind, const std::string& message, const json& extra = json::object()) {
  json err = {{"error", kind}, {"message", message}};
  err.update(extra);
  std::cerr << err.dump() << '\n';
  return kind == "config" ? 2 : 1;
}

void configure_logging() {
  auto logger = spdlog::stderr_color_mt("mgu");
  spdlog::set_default_logger(logger);
  const char* level = std::getenv("MGU_LOG");
  spdlog::set_level(level ? spdlog::level::from_str(level) : spdlog::level::warn);
}

}  // namespace

int main(int argc, char** argv) {
  configure_logging();
  CLI::App app{"Memorization-guided graph unlearning toolkit"};
  app.require_subcommand(1);
  Common common;
  Inputs in;

  auto* gen = app.add_subcommand("gen-sbm", "generate a stochastic block model graph");
  auto* trn = app.add_subcommand("train", "train a GCN");
  auto* mem = app.add_subcommand("memscore", "estimate per-node memorization");
  auto* dif = app.add_subcommand("difficulty", "derive node/edge/feature difficulty");
  auto* smp = app.add_subcommand("sample", "build a deletion request for a difficulty setting");
  auto* unl = app.add_subcommand("unlearn", "unlearn a request from a trained model");
  auto* evl = app.add_subcommand("evaluate", "compare an unlearned model against retraining");
  auto* exp = app.add_subcommand("experiment", "run the full pipeline");
  for (auto* cmd : {gen, trn, mem, dif, smp, unl, evl, exp}) add_common(cmd, common);
  for (auto* cmd : {trn, mem, dif, smp, unl, evl}) cmd->add_option("--graph", in.graph, "graph artifact (graph.json)");
  for (auto* cmd : {dif, smp}) {
    cmd->add_option("--scores", in.scores, "mem_table.csv or mem_table.json");
    cmd->add_option("--task", in.task, "node|edge|feature");
  }
  dif->add_flag("--proxy", in.proxy, "use the margin proxy of --model instead of --scores");
  dif->add_option("--orientation", in.orientation, "as_written|negated");
  dif->add_option("--model", in.model, "original model for the margin proxy");
  smp->add_option("--setting", in.setting, "easy|random|hard|local|distant");
  smp->add_option("--ratio", in.ratio, "deletion ratio of the train set");
  unl->add_option("--model", in.model, "original model");
  unl->add_option("--request", in.request, "request.json");
  unl->add_option("--method", in.method, "mgu|no_margin|no_distill|retrain")
      ->check(CLI::IsMember({"mgu", "no_margin", "no_distill", "retrain"}));
  evl->add_option("--request", in.request, "request.json");
  evl->add_option("--unlearned", in.unlearned, "unlearned model");
  evl->add_option("--retrained", in.retrained, "retrained model");

  try {
    app.parse(argc, argv);
  } catch (const CLI::Success& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    return error_exit("config", e.what());
  }

  try {
    if (gen->parsed()) cmd_gen_sbm(common);
    if (trn->parsed()) cmd_train(common, in);
    if (mem->parsed()) cmd_memscore(common, in);
    if (dif->parsed()) cmd_difficulty(common, in);
    if (smp->parsed()) cmd_sample(common, in);
    if (unl->parsed()) cmd_unlearn(common, in);
    if (evl->parsed()) cmd_evaluate(common, in);
    if (exp->parsed()) cmd_experiment(common, exp->count("--out") > 0);
  } catch (const ConfigError& e) {
    return error_exit("config", e.what(), {{"field", e.field()}});
  } catch (const StageError& e) {
    return error_exit(e.kind(), e.what(), {{"stage", e.stage()}});
  } catch (const Error& e) {
    return error_exit(e.kind(), e.what());
  } catch (const std::exception& e) {
    return error_exit("runtime", e.what());
  }
  return 0;
}
