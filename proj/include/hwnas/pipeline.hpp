#pragma once

#include <optional>
#include <string>

#include "hwnas/arch_space.hpp"
#include "hwnas/dataset.hpp"
#include "hwnas/estimator.hpp"
#include "hwnas/local_search.hpp"
#include "hwnas/moo.hpp"

namespace hwnas {

enum class LogLevel { kSilent = 0, kError = 1, kInfo = 2, kDebug = 3 };

// Verbosity from the HWNAS_LOG env var (silent|error|info|debug), default
// info. Messages go to stderr; artifact content never does.
LogLevel log_level();
void log_error(const std::string& msg);
void log_info(const std::string& msg);
void log_debug(const std::string& msg);

struct DataConfig {
  // Exactly one source: a CSV path or the synthetic generator.
  std::string path;
  std::string label_column = "label";
  struct Synthetic {
    int n_per_class = 200;
    int dim = 16;
    int classes = 5;
    double separation = 6.0;
  };
  std::optional<Synthetic> synthetic;
  SplitFractions split;
  std::uint64_t seed = 0;
};

struct SpaceOverrides {
  // Absent fields keep the built-in defaults.
  std::optional<std::vector<int>> num_layers;
  std::optional<std::array<std::vector<int>, kMaxHiddenLayers>> widths;
  std::optional<std::vector<Activation>> activations;
  std::optional<std::vector<bool>> batchnorm;
  std::optional<std::vector<double>> learning_rates;
  std::optional<std::vector<double>> l1;
  std::optional<std::vector<double>> dropouts;
  std::optional<int> input_dim;
  std::optional<int> num_classes;
};

struct SearchSection {
  SearchConfig search;
  int batch_size = 128;
  Optimizer optimizer = Optimizer::kAdam;
  double min_accuracy = 0.0;  // > 0 additionally writes pareto_filtered.json
};

struct LocalSection {
  LocalSearchConfig local;
  double target_sparsity = 0.5;
  double min_accuracy = 0.0;
};

struct EstimatorSection {
  EstimatorConfig estimator;
  DeviceProfile device;
  std::string surrogate_path;  // empty = rule-based default
};

struct RunConfig {
  DataConfig data;
  SpaceOverrides space;
  SearchSection search;
  LocalSection local;
  EstimatorSection est;
  std::string output_dir;
  std::uint64_t master_seed = 0;
  std::string source_path;  // config file this was loaded from
};

// Parses and validates the JSON config file (schema documented in README).
// Section seeds left unset derive from master_seed.
RunConfig load_run_config(const std::string& path);

struct ResolvedData {
  Dataset train;
  Dataset val;
  Dataset test;
  std::size_t input_dim = 0;
  int num_classes = 0;
};

// Load or synthesize, normalize on the training split, split stratified.
ResolvedData resolve_dataset(const DataConfig& cfg);

// Table defaults for the dataset's shape with config overrides applied;
// throws ConfigError when an explicit input_dim/num_classes contradicts the
// data.
SearchSpaceConfig resolve_space(const SpaceOverrides& overrides, std::size_t data_input_dim,
                                int data_num_classes);

std::unique_ptr<Estimator> make_estimator(const EstimatorSection& section);

// All commands return the run directory they wrote.
std::string cmd_search(const RunConfig& cfg);

struct LocalSearchRequest {
  // Either a genome key resolved against from_run's pareto.json, or a path
  // to a model/network JSON file.
  std::string genome;
  std::string from_run;
  std::optional<double> target_sparsity;
  std::optional<double> min_accuracy;
};
std::string cmd_localsearch(const RunConfig& cfg, const LocalSearchRequest& request);

std::string cmd_report(const std::string& run_dir);

struct PlotRequest {
  std::string x_metric;
  std::string y_metric;
  bool log_x = false;
};
std::string cmd_plot(const std::string& run_dir, const PlotRequest& request);

}  // namespace hwnas
