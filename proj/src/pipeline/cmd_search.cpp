#include <chrono>
#include <filesystem>
#include <fstream>

#include "hwnas/errors.hpp"
#include "hwnas/rng.hpp"
#include "hwnas/text.hpp"
#include "hwnas/trainer.hpp"
#include "src/pipeline/internal.hpp"

namespace hwnas {

namespace {

using nlohmann::json;

const char* sense_label(Sense s) { return s == Sense::kMaximize ? "maximize" : "minimize"; }

json archive_to_json(const std::vector<Individual>& archive, ObjectiveSet set,
                     std::size_t input_dim, int num_classes) {
  const std::vector<std::string> names = objective_names(set);
  const std::vector<Sense> senses = objective_senses(set);
  json doc;
  doc["objective_set"] = to_string(set);
  doc["input_dim"] = input_dim;
  doc["num_classes"] = num_classes;
  doc["objectives"] = names;
  json sense_list = json::array();
  for (Sense s : senses) sense_list.push_back(sense_label(s));
  doc["senses"] = std::move(sense_list);
  json entries = json::array();
  for (const Individual& ind : archive) {
    json entry;
    entry["trial_index"] = ind.trial_index;
    entry["genome_key"] = genome_key(ind.genome);
    entry["genome"] = json::parse(genome_to_json(ind.genome));
    json values = json::object();
    for (std::size_t i = 0; i < names.size(); ++i) values[names[i]] = ind.objectives.values[i];
    entry["objectives"] = std::move(values);
    entries.push_back(std::move(entry));
  }
  doc["archive"] = std::move(entries);
  return doc;
}

void write_json_artifact(const std::string& path, const json& doc) {
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw IoError("cannot write " + path);
  out << doc.dump(2) << "\n";
  if (!out) throw IoError("failed writing " + path);
}

}  // namespace

std::string cmd_search(const RunConfig& cfg) {
  namespace fs = std::filesystem;
  const std::string run_dir = cfg.output_dir;
  fs::create_directories(run_dir);
  pipeline::RunLock lock(run_dir);
  const std::string started_at = pipeline::iso8601_utc_now();
  const std::string config_hash = pipeline::copy_config_into(run_dir, cfg.source_path);

  log_info("resolving dataset");
  const ResolvedData data = resolve_dataset(cfg.data);
  const SearchSpaceConfig space = resolve_space(cfg.space, data.input_dim, data.num_classes);
  const std::unique_ptr<Estimator> estimator = make_estimator(cfg.est);
  const ObjectiveSet objective_set = cfg.search.search.objective_set;
  const std::vector<std::string> obj_names = objective_names(objective_set);

  const std::string trials_path = (fs::path(run_dir) / "trials.csv").string();
  std::ofstream trials_csv(trials_path, std::ios::trunc);
  if (!trials_csv) throw IoError("cannot write " + trials_path);
  trials_csv << "trial_index,genome_key";
  for (const std::string& col : pipeline::genome_csv_columns()) trials_csv << "," << col;
  for (const std::string& name : obj_names) trials_csv << "," << name;
  trials_csv << ",failed\n" << std::flush;

  std::vector<std::pair<int, double>> timings;  // trial_index, wall_ms

  const Evaluator evaluator = [&](const ArchitectureGenome& genome, int trial_index) {
    const auto t0 = std::chrono::steady_clock::now();
    EvalResult result;
    try {
      const NetworkDescription net = decode(genome, space);
      TrainConfig train_cfg;
      train_cfg.epochs = cfg.search.search.epochs_per_trial;
      train_cfg.batch_size = cfg.search.batch_size;
      train_cfg.learning_rate = genome.learning_rate;
      train_cfg.l1 = genome.l1;
      train_cfg.optimizer = cfg.search.optimizer;
      train_cfg.seed = derive_seed(cfg.search.search.seed, static_cast<std::uint64_t>(trial_index));
      TrainedModel trained = train(net, data.train, data.val, train_cfg);
      const double accuracy = evaluate(trained.model, data.val);
      if (objective_set == ObjectiveSet::kSnacPack) {
        const ResourceEstimate est = estimator->estimate(net);
        result.values = {accuracy, avg_resource_pct(est, cfg.est.device), est.latency_cycles};
      } else {
        result.values = {accuracy, static_cast<double>(count_bops(net))};
      }
    } catch (const FailedTrial& e) {
      log_info("trial " + std::to_string(trial_index) + " failed: " + e.what());
      result.failed = true;
    }
    const auto t1 = std::chrono::steady_clock::now();
    const double ms = std::chrono::duration<double, std::milli>(t1 - t0).count();
    timings.emplace_back(trial_index, ms);
    return result;
  };

  const TrialObserver observer = [&](const TrialRecord& record) {
    trials_csv << record.trial_index << "," << record.genome_key << ","
               << pipeline::genome_csv_fields(record.genome);
    for (double v : record.objectives.values) trials_csv << "," << fmt_double(v);
    trials_csv << (record.failed ? ",1\n" : ",0\n") << std::flush;
    log_debug("trial " + std::to_string(record.trial_index) + " " + record.genome_key);
  };

  log_info("starting search: " + std::to_string(cfg.search.search.total_trials) + " trials, " +
           "population " + std::to_string(cfg.search.search.population_size) + ", objectives " +
           to_string(objective_set));
  const SearchResult result = evolve(space, evaluator, cfg.search.search, observer);
  if (!trials_csv) throw IoError("failed writing " + trials_path);
  trials_csv.close();

  const std::string timings_path = (fs::path(run_dir) / "timings.csv").string();
  {
    std::ofstream timings_csv(timings_path, std::ios::trunc);
    if (!timings_csv) throw IoError("cannot write " + timings_path);
    timings_csv << "trial_index,wall_ms\n";
    for (const auto& [index, ms] : timings) {
      timings_csv << index << "," << fmt_fixed(ms, 3) << "\n";
    }
    if (!timings_csv) throw IoError("failed writing " + timings_path);
  }

  const std::string pareto_path = (fs::path(run_dir) / "pareto.json").string();
  write_json_artifact(pareto_path, archive_to_json(result.archive, objective_set, data.input_dim,
                                                   data.num_classes));

  std::vector<std::pair<std::string, std::string>> artifacts = {
      {"config", "config.json"},
      {"trials", "trials.csv"},
      {"timings", "timings.csv"},
      {"pareto", "pareto.json"},
  };
  if (cfg.search.min_accuracy > 0.0) {
    const std::vector<Individual> filtered =
        pareto_filter(result.archive, cfg.search.min_accuracy);
    const std::string filtered_path = (fs::path(run_dir) / "pareto_filtered.json").string();
    json doc = archive_to_json(filtered, objective_set, data.input_dim, data.num_classes);
    doc["min_accuracy"] = cfg.search.min_accuracy;
    write_json_artifact(filtered_path, doc);
    artifacts.emplace_back("pareto_filtered", "pareto_filtered.json");
    log_info("pareto archive: " + std::to_string(result.archive.size()) + " entries, " +
             std::to_string(filtered.size()) + " above accuracy " +
             fmt_double(cfg.search.min_accuracy));
  } else {
    log_info("pareto archive: " + std::to_string(result.archive.size()) + " entries");
  }

  pipeline::write_manifest(run_dir, "search", config_hash, started_at, artifacts);
  log_info("search run written to " + run_dir);
  return run_dir;
}

}  // namespace hwnas
