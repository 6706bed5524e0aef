#include <set>

#include "hwnas/errors.hpp"
#include "hwnas/rng.hpp"
#include "src/pipeline/internal.hpp"

namespace hwnas {

namespace {

using nlohmann::json;

[[noreturn]] void fail(const std::string& where, const std::string& what) {
  throw ConfigError("config " + where + ": " + what);
}

void reject_unknown_keys(const json& obj, const std::string& where,
                         const std::set<std::string>& allowed) {
  for (const auto& [key, value] : obj.items()) {
    (void)value;
    if (allowed.count(key) == 0) fail(where, "unknown key '" + key + "'");
  }
}

double get_number(const json& obj, const std::string& where, const std::string& key,
                  double fallback) {
  if (!obj.contains(key)) return fallback;
  if (!obj[key].is_number()) fail(where + "." + key, "must be a number");
  return obj[key].get<double>();
}

int get_int(const json& obj, const std::string& where, const std::string& key, int fallback) {
  if (!obj.contains(key)) return fallback;
  if (!obj[key].is_number_integer()) fail(where + "." + key, "must be an integer");
  return obj[key].get<int>();
}

std::uint64_t get_seed(const json& obj, const std::string& where, std::uint64_t fallback) {
  if (!obj.contains("seed")) return fallback;
  if (!obj["seed"].is_number_integer()) fail(where + ".seed", "must be an integer");
  return obj["seed"].get<std::uint64_t>();
}

std::string get_string(const json& obj, const std::string& where, const std::string& key,
                       const std::string& fallback) {
  if (!obj.contains(key)) return fallback;
  if (!obj[key].is_string()) fail(where + "." + key, "must be a string");
  return obj[key].get<std::string>();
}

std::vector<double> get_double_list(const json& value, const std::string& where) {
  if (!value.is_array() || value.empty()) fail(where, "must be a non-empty array of numbers");
  std::vector<double> out;
  for (const json& v : value) {
    if (!v.is_number()) fail(where, "must contain only numbers");
    out.push_back(v.get<double>());
  }
  return out;
}

std::vector<int> get_int_list(const json& value, const std::string& where) {
  if (!value.is_array() || value.empty()) fail(where, "must be a non-empty array of integers");
  std::vector<int> out;
  for (const json& v : value) {
    if (!v.is_number_integer()) fail(where, "must contain only integers");
    out.push_back(v.get<int>());
  }
  return out;
}

DataConfig parse_data(const json& obj, std::uint64_t master_seed) {
  DataConfig data;
  reject_unknown_keys(obj, "data",
                      {"path", "label_column", "synthetic", "split", "seed"});
  if (obj.contains("synthetic")) {
    const json& syn = obj["synthetic"];
    if (!syn.is_object()) fail("data.synthetic", "must be an object");
    reject_unknown_keys(syn, "data.synthetic",
                        {"n_per_class", "dim", "classes", "separation"});
    DataConfig::Synthetic s;
    s.n_per_class = get_int(syn, "data.synthetic", "n_per_class", s.n_per_class);
    s.dim = get_int(syn, "data.synthetic", "dim", s.dim);
    s.classes = get_int(syn, "data.synthetic", "classes", s.classes);
    s.separation = get_number(syn, "data.synthetic", "separation", s.separation);
    data.synthetic = s;
  }
  data.path = get_string(obj, "data", "path", "");
  data.label_column = get_string(obj, "data", "label_column", "label");
  if (!data.synthetic && data.path.empty()) {
    fail("data", "needs either 'path' or 'synthetic'");
  }
  if (data.synthetic && !data.path.empty()) {
    fail("data", "'path' and 'synthetic' are mutually exclusive");
  }
  if (obj.contains("split")) {
    const json& split = obj["split"];
    if (!split.is_object()) fail("data.split", "must be an object");
    reject_unknown_keys(split, "data.split", {"train", "val", "test"});
    data.split.train = get_number(split, "data.split", "train", 0.6);
    data.split.val = get_number(split, "data.split", "val", 0.2);
    data.split.test = get_number(split, "data.split", "test", 0.2);
    if (data.split.train <= 0.0 || data.split.val < 0.0 || data.split.test < 0.0) {
      fail("data.split", "train must be positive, val and test non-negative");
    }
    if (data.split.train + data.split.val + data.split.test > 1.0 + 1e-9) {
      fail("data.split", "fractions must sum to at most 1");
    }
  }
  data.seed = get_seed(obj, "data", derive_seed(master_seed, 1));
  return data;
}

SpaceOverrides parse_space(const json& obj) {
  SpaceOverrides space;
  reject_unknown_keys(obj, "space",
                      {"num_layers", "widths", "activations", "batchnorm", "learning_rates",
                       "l1", "dropouts", "input_dim", "num_classes"});
  if (obj.contains("num_layers")) {
    space.num_layers = get_int_list(obj["num_layers"], "space.num_layers");
  }
  if (obj.contains("widths")) {
    const json& w = obj["widths"];
    if (!w.is_array() || w.empty() || w.size() > kMaxHiddenLayers) {
      fail("space.widths", "must be an array of 1.." + std::to_string(kMaxHiddenLayers) +
                               " choice lists");
    }
    std::array<std::vector<int>, kMaxHiddenLayers> widths;
    for (std::size_t i = 0; i < w.size(); ++i) {
      widths[i] = get_int_list(w[i], "space.widths[" + std::to_string(i) + "]");
    }
    // Unlisted trailing positions reuse the last provided choice list so the
    // genome stays total at every depth.
    for (std::size_t i = w.size(); i < kMaxHiddenLayers; ++i) widths[i] = widths[w.size() - 1];
    space.widths = widths;
  }
  if (obj.contains("activations")) {
    const json& acts = obj["activations"];
    if (!acts.is_array() || acts.empty()) fail("space.activations", "must be a non-empty array");
    std::vector<Activation> parsed;
    for (const json& a : acts) {
      if (!a.is_string()) fail("space.activations", "must contain strings");
      parsed.push_back(activation_from_string(a.get<std::string>()));
    }
    space.activations = parsed;
  }
  if (obj.contains("batchnorm")) {
    const json& bn = obj["batchnorm"];
    if (!bn.is_array() || bn.empty()) fail("space.batchnorm", "must be a non-empty array");
    std::vector<bool> parsed;
    for (const json& b : bn) {
      if (!b.is_boolean()) fail("space.batchnorm", "must contain booleans");
      parsed.push_back(b.get<bool>());
    }
    space.batchnorm = parsed;
  }
  if (obj.contains("learning_rates")) {
    space.learning_rates = get_double_list(obj["learning_rates"], "space.learning_rates");
  }
  if (obj.contains("l1")) space.l1 = get_double_list(obj["l1"], "space.l1");
  if (obj.contains("dropouts")) space.dropouts = get_double_list(obj["dropouts"], "space.dropouts");
  if (obj.contains("input_dim")) space.input_dim = get_int(obj, "space", "input_dim", 0);
  if (obj.contains("num_classes")) space.num_classes = get_int(obj, "space", "num_classes", 0);
  return space;
}

Optimizer parse_optimizer(const json& obj, const std::string& where) {
  const std::string name = get_string(obj, where, "optimizer", "adam");
  if (name == "adam") return Optimizer::kAdam;
  if (name == "sgd") return Optimizer::kSgd;
  fail(where + ".optimizer", "must be 'adam' or 'sgd'");
}

SearchSection parse_search(const json& obj, std::uint64_t master_seed) {
  SearchSection section;
  reject_unknown_keys(obj, "search",
                      {"population_size", "total_trials", "epochs_per_trial", "objective_set",
                       "seed", "batch_size", "optimizer", "crossover_prob", "mutation_rate",
                       "min_accuracy"});
  section.search.population_size =
      get_int(obj, "search", "population_size", section.search.population_size);
  section.search.total_trials = get_int(obj, "search", "total_trials", section.search.total_trials);
  section.search.epochs_per_trial =
      get_int(obj, "search", "epochs_per_trial", section.search.epochs_per_trial);
  section.search.objective_set =
      objective_set_from_string(get_string(obj, "search", "objective_set", "snacpack"));
  section.search.seed = get_seed(obj, "search", derive_seed(master_seed, 2));
  section.search.crossover_prob =
      get_number(obj, "search", "crossover_prob", section.search.crossover_prob);
  section.search.mutation_rate =
      get_number(obj, "search", "mutation_rate", section.search.mutation_rate);
  section.batch_size = get_int(obj, "search", "batch_size", section.batch_size);
  section.optimizer = parse_optimizer(obj, "search");
  section.min_accuracy = get_number(obj, "search", "min_accuracy", section.min_accuracy);
  return section;
}

LocalSection parse_local(const json& obj, std::uint64_t master_seed) {
  LocalSection section;
  reject_unknown_keys(obj, "local",
                      {"warmup_epochs", "iterations", "epochs_per_iteration", "prune_fraction",
                       "qat_bits", "seed", "batch_size", "optimizer", "target_sparsity",
                       "min_accuracy"});
  section.local.warmup_epochs =
      get_int(obj, "local", "warmup_epochs", section.local.warmup_epochs);
  section.local.iterations = get_int(obj, "local", "iterations", section.local.iterations);
  section.local.epochs_per_iteration =
      get_int(obj, "local", "epochs_per_iteration", section.local.epochs_per_iteration);
  section.local.prune_fraction =
      get_number(obj, "local", "prune_fraction", section.local.prune_fraction);
  section.local.qat_bits = get_int(obj, "local", "qat_bits", section.local.qat_bits);
  section.local.seed = get_seed(obj, "local", derive_seed(master_seed, 3));
  section.local.batch_size = get_int(obj, "local", "batch_size", section.local.batch_size);
  section.local.optimizer = parse_optimizer(obj, "local");
  section.target_sparsity = get_number(obj, "local", "target_sparsity", section.target_sparsity);
  section.min_accuracy = get_number(obj, "local", "min_accuracy", section.min_accuracy);
  return section;
}

EstimatorSection parse_estimator(const json& obj) {
  EstimatorSection section;
  reject_unknown_keys(obj, "estimator",
                      {"reuse_factor", "strategy", "dsp_bit_threshold", "device",
                       "surrogate_coefficients"});
  section.estimator.reuse_factor =
      get_int(obj, "estimator", "reuse_factor", section.estimator.reuse_factor);
  if (section.estimator.reuse_factor < 1) fail("estimator.reuse_factor", "must be >= 1");
  const std::string strategy = get_string(obj, "estimator", "strategy", "latency");
  if (strategy == "latency") {
    section.estimator.strategy = HlsStrategy::kLatency;
  } else if (strategy == "resource") {
    section.estimator.strategy = HlsStrategy::kResource;
  } else {
    fail("estimator.strategy", "must be 'latency' or 'resource'");
  }
  section.estimator.dsp_bit_threshold =
      get_int(obj, "estimator", "dsp_bit_threshold", section.estimator.dsp_bit_threshold);
  if (obj.contains("device") && obj["device"].is_object()) {
    const json& dev = obj["device"];
    reject_unknown_keys(dev, "estimator.device",
                        {"name", "lut_capacity", "ff_capacity", "dsp_capacity", "bram_capacity",
                         "clock_period_ns"});
    section.device.name = get_string(dev, "estimator.device", "name", "custom");
    section.device.lut_capacity = get_int(dev, "estimator.device", "lut_capacity", 0);
    section.device.ff_capacity = get_int(dev, "estimator.device", "ff_capacity", 0);
    section.device.dsp_capacity = get_int(dev, "estimator.device", "dsp_capacity", 0);
    section.device.bram_capacity = get_int(dev, "estimator.device", "bram_capacity", 0);
    section.device.clock_period_ns = get_number(dev, "estimator.device", "clock_period_ns", 0.0);
    if (section.device.lut_capacity <= 0 || section.device.ff_capacity <= 0 ||
        section.device.dsp_capacity <= 0 || section.device.bram_capacity <= 0 ||
        section.device.clock_period_ns <= 0.0) {
      fail("estimator.device", "capacities and clock_period_ns must be positive");
    }
  } else {
    section.device = device_profile(get_string(obj, "estimator", "device", "vu13p"));
  }
  section.surrogate_path = get_string(obj, "estimator", "surrogate_coefficients", "");
  return section;
}

}  // namespace

RunConfig load_run_config(const std::string& path) {
  const json doc = pipeline::read_json_file(path);
  if (!doc.is_object()) throw ConfigError("config " + path + ": top level must be an object");
  reject_unknown_keys(doc, path,
                      {"version", "master_seed", "output_dir", "data", "space", "search",
                       "local", "estimator"});
  if (!doc.contains("version") || !doc["version"].is_number_integer() ||
      doc["version"].get<int>() != 1) {
    fail(path, "missing or unsupported 'version' (expected 1)");
  }

  RunConfig cfg;
  cfg.source_path = path;
  if (doc.contains("master_seed")) {
    if (!doc["master_seed"].is_number_integer()) fail("master_seed", "must be an integer");
    cfg.master_seed = doc["master_seed"].get<std::uint64_t>();
  }
  cfg.output_dir = get_string(doc, path, "output_dir", "");
  if (cfg.output_dir.empty()) fail(path, "'output_dir' is required");

  if (!doc.contains("data") || !doc["data"].is_object()) fail(path, "'data' section is required");
  cfg.data = parse_data(doc["data"], cfg.master_seed);
  cfg.space = doc.contains("space") ? parse_space(doc["space"]) : SpaceOverrides{};
  cfg.search = doc.contains("search") ? parse_search(doc["search"], cfg.master_seed)
                                      : SearchSection{};
  if (!doc.contains("search")) cfg.search.search.seed = derive_seed(cfg.master_seed, 2);
  cfg.local = doc.contains("local") ? parse_local(doc["local"], cfg.master_seed) : LocalSection{};
  if (!doc.contains("local")) cfg.local.local.seed = derive_seed(cfg.master_seed, 3);
  cfg.est = doc.contains("estimator") ? parse_estimator(doc["estimator"]) : EstimatorSection{};
  if (!doc.contains("estimator")) cfg.est.device = device_profile("vu13p");
  return cfg;
}

ResolvedData resolve_dataset(const DataConfig& cfg) {
  Dataset full;
  if (cfg.synthetic) {
    const DataConfig::Synthetic& s = *cfg.synthetic;
    full = synth_blobs(s.n_per_class, s.dim, s.classes, s.separation, cfg.seed);
  } else {
    full = load_csv(cfg.path, cfg.label_column);
  }
  Splits splits = split(full, cfg.split, derive_seed(cfg.seed, 1));
  const Normalizer norm = fit_normalizer(splits.train);
  ResolvedData out;
  out.input_dim = full.num_features;
  out.num_classes = full.num_classes;
  out.train = apply_normalizer(norm, splits.train);
  out.val = apply_normalizer(norm, splits.val);
  out.test = apply_normalizer(norm, splits.test);
  return out;
}

SearchSpaceConfig resolve_space(const SpaceOverrides& overrides, std::size_t data_input_dim,
                                int data_num_classes) {
  if (overrides.input_dim && *overrides.input_dim != static_cast<int>(data_input_dim)) {
    throw ConfigError("space.input_dim=" + std::to_string(*overrides.input_dim) +
                      " contradicts the dataset's " + std::to_string(data_input_dim) +
                      " features");
  }
  if (overrides.num_classes && *overrides.num_classes != data_num_classes) {
    throw ConfigError("space.num_classes=" + std::to_string(*overrides.num_classes) +
                      " contradicts the dataset's " + std::to_string(data_num_classes) +
                      " classes");
  }
  SearchSpaceConfig space = SearchSpaceConfig::table_defaults(static_cast<int>(data_input_dim),
                                                              data_num_classes);
  if (overrides.num_layers) space.num_layers_choices = *overrides.num_layers;
  if (overrides.widths) space.width_choices = *overrides.widths;
  if (overrides.activations) space.activation_choices = *overrides.activations;
  if (overrides.batchnorm) space.batchnorm_choices = *overrides.batchnorm;
  if (overrides.learning_rates) space.lr_choices = *overrides.learning_rates;
  if (overrides.l1) space.l1_choices = *overrides.l1;
  if (overrides.dropouts) space.dropout_choices = *overrides.dropouts;
  space.validate();
  return space;
}

std::unique_ptr<Estimator> make_estimator(const EstimatorSection& section) {
  if (!section.surrogate_path.empty()) {
    return load_linear_surrogate(section.surrogate_path, section.estimator);
  }
  return std::make_unique<RuleBasedEstimator>(section.estimator);
}

}  // namespace hwnas
