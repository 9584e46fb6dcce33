#include "mgu/config.hpp"

#include <set>

#include "mgu/errors.hpp"
#include "mgu/loaders.hpp"
#include "mgu/serialize.hpp"

namespace mgu {

namespace {

using nlohmann::json;

// Typed access to one JSON object; remembers which keys were read so that
// typos surface as errors.
class Section {
 public:
  Section(const json& doc, std::string prefix) : doc_(doc), prefix_(std::move(prefix)) {
    if (!doc_.is_object()) throw ConfigError(prefix_.empty() ? "config" : prefix_, "expected an object");
  }

  std::string field(const std::string& key) const { return prefix_.empty() ? key : prefix_ + "." + key; }

  bool has(const std::string& key) {
    seen_.insert(key);
    return doc_.contains(key);
  }

  template <typename T>
  T get(const std::string& key, T fallback) {
    if (!has(key)) return fallback;
    return convert<T>(key);
  }

  template <typename T>
  T require(const std::string& key) {
    if (!has(key)) throw ConfigError(field(key), "missing required field");
    return convert<T>(key);
  }

  Section child(const std::string& key) {
    seen_.insert(key);
    return Section(doc_.at(key), field(key));
  }

  void finish() const {
    for (const auto& [key, value] : doc_.items()) {
      if (!seen_.contains(key)) throw ConfigError(field(key), "unknown field");
    }
  }

 private:
  template <typename T>
  T convert(const std::string& key) {
    const auto& v = doc_.at(key);
    if constexpr (std::is_same_v<T, bool>) {
      if (!v.is_boolean()) throw ConfigError(field(key), "expected a boolean");
    } else if constexpr (std::is_same_v<T, std::string>) {
      if (!v.is_string()) throw ConfigError(field(key), "expected a string");
    } else if constexpr (std::is_unsigned_v<T>) {
      if (!v.is_number_unsigned()) throw ConfigError(field(key), "expected a non-negative integer");
    } else if constexpr (std::is_integral_v<T>) {
      if (!v.is_number_integer()) throw ConfigError(field(key), "expected an integer");
    } else if constexpr (std::is_floating_point_v<T>) {
      if (!v.is_number()) throw ConfigError(field(key), "expected a number");
    }
    try {
      return v.get<T>();
    } catch (const json::exception& e) {
      throw ConfigError(field(key), e.what());
    }
  }

  const json& doc_;
  std::string prefix_;
  std::set<std::string> seen_;
};

std::filesystem::path resolve(const std::filesystem::path& base, const std::string& p) {
  const std::filesystem::path path(p);
  return path.is_absolute() || base.empty() ? path : base / path;
}

TrainConfig train_from(Section s) {
  TrainConfig t;
  t.hidden_dim = s.get<std::size_t>("hidden_dim", t.hidden_dim);
  t.epochs = s.get<int>("epochs", t.epochs);
  t.learning_rate = s.get<double>("learning_rate", t.learning_rate);
  t.weight_decay = s.get<double>("weight_decay", t.weight_decay);
  t.seed = s.get<std::uint64_t>("seed", t.seed);
  const auto opt = s.get<std::string>("optimizer", "adam");
  if (opt == "adam") {
    t.optimizer = OptimizerKind::Adam;
  } else if (opt == "sgd") {
    t.optimizer = OptimizerKind::Sgd;
  } else {
    throw ConfigError(s.field("optimizer"), "expected adam|sgd");
  }
  s.finish();
  try {
    t.validate();
  } catch (const ConfigError& e) {
    throw ConfigError(s.field(e.field()), e.what());
  }
  return t;
}

void mem_from(Section s, ExperimentConfig& cfg) {
  MemConfig& m = cfg.mem;
  m.alpha = s.get<double>("alpha", m.alpha);
  m.beta = s.get<double>("beta", m.beta);
  m.k_hops = s.get<std::uint32_t>("k_hops", m.k_hops);
  const auto est = s.get<std::string>("estimator", "auto");
  cfg.mem_estimator_auto = est == "auto";
  if (!cfg.mem_estimator_auto) {
    try {
      m.estimator = mem_estimator_from_string(est);
    } catch (const ConfigError& e) {
      throw ConfigError(s.field("estimator"), e.what());
    }
  }
  cfg.subsample_threshold = s.get<std::size_t>("subsample_threshold", cfg.subsample_threshold);
  m.num_seeds = s.get<std::size_t>("num_seeds", m.num_seeds);
  m.num_subsample_models = s.get<std::size_t>("num_subsample_models", m.num_subsample_models);
  m.subsample_keep_frac = s.get<double>("subsample_keep_frac", m.subsample_keep_frac);
  if (s.has("exclusion_mode")) {
    m.exclusion_mode = exclusion_mode_from_string(s.get<std::string>("exclusion_mode", ""));
  }
  m.seed = s.get<std::uint64_t>("seed", m.seed);
  s.finish();
  try {
    m.validate();
  } catch (const ConfigError& e) {
    throw ConfigError(s.field(e.field()), e.what());
  }
}

UnlearnConfig unlearn_from(Section s) {
  UnlearnConfig u;
  u.lambda = s.get<double>("lambda", u.lambda);
  u.t_max = s.get<double>("t_max", u.t_max);
  u.epochs = s.get<int>("epochs", u.epochs);
  u.learning_rate = s.get<double>("learning_rate", u.learning_rate);
  if (s.has("tau_mode")) u.tau_mode = tau_mode_from_string(s.get<std::string>("tau_mode", ""));
  u.tau_anchor_mu = s.get<double>("tau_anchor_mu", u.tau_anchor_mu);
  if (s.has("temperature_mode")) {
    u.temperature_mode = temperature_mode_from_string(s.get<std::string>("temperature_mode", ""));
  }
  u.seed = s.get<std::uint64_t>("seed", u.seed);
  s.finish();
  try {
    u.validate();
  } catch (const ConfigError& e) {
    throw ConfigError(s.field(e.field()), e.what());
  }
  return u;
}

}  // namespace

SbmSpec sbm_spec_from_json(const nlohmann::json& doc, const std::string& prefix) {
  Section s(doc, prefix);
  SbmSpec spec;
  spec.blocks = s.require<std::vector<std::size_t>>("blocks");
  spec.p_in = s.get<double>("p_in", spec.p_in);
  spec.p_out = s.get<double>("p_out", spec.p_out);
  spec.feat_dim = s.get<std::size_t>("feat_dim", spec.feat_dim);
  spec.mean_shift = s.get<double>("mean_shift", spec.mean_shift);
  spec.noise_std = s.get<double>("noise_std", spec.noise_std);
  spec.label_noise = s.get<double>("label_noise", spec.label_noise);
  spec.train_frac = s.get<double>("train_frac", spec.train_frac);
  spec.seed = s.get<std::uint64_t>("seed", spec.seed);
  s.finish();
  try {
    spec.validate();
  } catch (const ConfigError& e) {
    throw ConfigError(s.field(e.field()), e.what());
  }
  return spec;
}

nlohmann::json to_json(const SbmSpec& spec) {
  return {{"blocks", spec.blocks},         {"p_in", spec.p_in},
          {"p_out", spec.p_out},           {"feat_dim", spec.feat_dim},
          {"mean_shift", spec.mean_shift}, {"noise_std", spec.noise_std},
          {"label_noise", spec.label_noise}, {"train_frac", spec.train_frac},
          {"seed", spec.seed}};
}

DatasetConfig dataset_config_from_json(const nlohmann::json& doc, const std::filesystem::path& base_dir) {
  Section s(doc, "dataset");
  DatasetConfig d;
  d.source = s.require<std::string>("source");
  if (d.source == "linqs") {
    d.content = resolve(base_dir, s.require<std::string>("content"));
    d.cites = resolve(base_dir, s.require<std::string>("cites"));
  } else if (d.source == "csv") {
    d.nodes = resolve(base_dir, s.require<std::string>("nodes"));
    d.edges = resolve(base_dir, s.require<std::string>("edges"));
  } else if (d.source == "sbm") {
    if (!s.has("sbm")) throw ConfigError("dataset.sbm", "missing required field");
    d.sbm = sbm_spec_from_json(doc.at("sbm"), "dataset.sbm");
  } else if (d.source == "graph") {
    d.graph = resolve(base_dir, s.require<std::string>("graph"));
  } else {
    throw ConfigError("dataset.source", "expected linqs|csv|sbm|graph, got '" + d.source + "'");
  }
  d.train_frac = s.get<double>("train_frac", d.train_frac);
  if (!(d.train_frac > 0.0 && d.train_frac < 1.0)) {
    throw ConfigError("dataset.train_frac", "must lie in (0, 1)");
  }
  d.split_seed = s.get<std::uint64_t>("split_seed", d.split_seed);
  s.finish();
  return d;
}

void ExperimentConfig::validate() const {
  if (!(ratio > 0.0 && ratio <= 0.5)) throw ConfigError("ratio", "must lie in (0, 0.5]");
  if (seeds.empty()) throw ConfigError("seeds", "need at least one seed");
  if (settings.empty()) throw ConfigError("settings", "need at least one setting");
  train.validate();
  unlearn.validate();
}

ExperimentConfig experiment_config_from_json(const nlohmann::json& doc,
                                             const std::filesystem::path& base_dir) {
  Section s(doc, "");
  ExperimentConfig cfg;
  if (!s.has("dataset")) throw ConfigError("dataset", "missing required field");
  cfg.dataset = dataset_config_from_json(doc.at("dataset"), base_dir);
  if (s.has("train")) cfg.train = train_from(s.child("train"));
  if (s.has("mem")) mem_from(s.child("mem"), cfg);
  if (s.has("unlearn")) cfg.unlearn = unlearn_from(s.child("unlearn"));
  if (s.has("task")) {
    try {
      cfg.task = request_kind_from_string(s.get<std::string>("task", ""));
    } catch (const Error&) {
      throw ConfigError("task", "expected node|edge|feature");
    }
  }
  if (s.has("settings")) {
    cfg.settings.clear();
    for (const auto& name : s.get<std::vector<std::string>>("settings", {})) {
      cfg.settings.push_back(difficulty_setting_from_string(name));
    }
  }
  cfg.ratio = s.get<double>("ratio", cfg.ratio);
  cfg.seeds = s.get<std::vector<std::uint64_t>>("seeds", cfg.seeds);
  cfg.output_dir = s.get<std::string>("output_dir", cfg.output_dir);
  if (!cfg.output_dir.empty()) cfg.output_dir = resolve(base_dir, cfg.output_dir).string();
  cfg.save_models = s.get<bool>("save_models", cfg.save_models);
  s.finish();
  cfg.validate();
  return cfg;
}

nlohmann::json to_json(const ExperimentConfig& cfg) {
  json dataset = {{"source", cfg.dataset.source},
                  {"train_frac", cfg.dataset.train_frac},
                  {"split_seed", cfg.dataset.split_seed}};
  if (cfg.dataset.source == "linqs") {
    dataset["content"] = cfg.dataset.content.string();
    dataset["cites"] = cfg.dataset.cites.string();
  } else if (cfg.dataset.source == "csv") {
    dataset["nodes"] = cfg.dataset.nodes.string();
    dataset["edges"] = cfg.dataset.edges.string();
  } else if (cfg.dataset.source == "sbm") {
    dataset["sbm"] = to_json(cfg.dataset.sbm);
  } else if (cfg.dataset.source == "graph") {
    dataset["graph"] = cfg.dataset.graph.string();
  }
  const auto& t = cfg.train;
  const auto& m = cfg.mem;
  const auto& u = cfg.unlearn;
  json settings = json::array();
  for (auto st : cfg.settings) settings.push_back(to_string(st));
  return {{"dataset", dataset},
          {"train",
           {{"hidden_dim", t.hidden_dim},
            {"epochs", t.epochs},
            {"learning_rate", t.learning_rate},
            {"weight_decay", t.weight_decay},
            {"seed", t.seed},
            {"optimizer", t.optimizer == OptimizerKind::Adam ? "adam" : "sgd"}}},
          {"mem",
           {{"alpha", m.alpha},
            {"beta", m.beta},
            {"k_hops", m.k_hops},
            {"estimator", cfg.mem_estimator_auto ? "auto" : to_string(m.estimator)},
            {"subsample_threshold", cfg.subsample_threshold},
            {"num_seeds", m.num_seeds},
            {"num_subsample_models", m.num_subsample_models},
            {"subsample_keep_frac", m.subsample_keep_frac},
            {"exclusion_mode", to_string(m.exclusion_mode)},
            {"seed", m.seed}}},
          {"unlearn",
           {{"lambda", u.lambda},
            {"t_max", u.t_max},
            {"epochs", u.epochs},
            {"learning_rate", u.learning_rate},
            {"tau_mode", to_string(u.tau_mode)},
            {"tau_anchor_mu", u.tau_anchor_mu},
            {"temperature_mode", to_string(u.temperature_mode)},
            {"seed", u.seed}}},
          {"task", to_string(cfg.task)},
          {"settings", settings},
          {"ratio", cfg.ratio},
          {"seeds", cfg.seeds},
          {"output_dir", cfg.output_dir},
          {"save_models", cfg.save_models}};
}

Graph load_dataset(const DatasetConfig& cfg) {
  for (const auto* p : {&cfg.content, &cfg.cites, &cfg.nodes, &cfg.edges, &cfg.graph}) {
    if (!p->empty() && !std::filesystem::exists(*p)) {
      throw ConfigError("dataset", "file not found: " + p->string());
    }
  }
  if (cfg.source == "sbm") return gen_sbm(cfg.sbm);
  if (cfg.source == "graph") return graph_from_json(read_json(cfg.graph));
  const auto loaded = cfg.source == "linqs" ? load_linqs(cfg.content, cfg.cites)
                                            : load_csv(cfg.nodes, cfg.edges);
  // Unlabeled nodes cannot be split; they stay outside both masks.
  const Graph& g = loaded.graph;
  std::vector<NodeId> labeled;
  for (NodeId v = 0; v < g.num_nodes(); ++v) {
    if (g.has_label(v)) labeled.push_back(v);
  }
  if (labeled.size() == g.num_nodes()) return split(g, cfg.train_frac, cfg.split_seed);
  throw SchemaError("dataset has unlabeled nodes; supply a pre-split graph artifact instead");
}

}  // namespace mgu
