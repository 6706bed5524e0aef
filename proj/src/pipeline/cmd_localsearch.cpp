#include <filesystem>
#include <fstream>

#include "hwnas/errors.hpp"
#include "hwnas/model_io.hpp"
#include "hwnas/text.hpp"
#include "src/pipeline/internal.hpp"

namespace hwnas {

namespace {

using nlohmann::json;

struct ResolvedNet {
  NetworkDescription net;
  std::string identity;  // genome key, or the network JSON for file inputs
  std::string source;    // provenance label
};

ResolvedNet net_from_file(const std::string& path) {
  const json doc = pipeline::read_json_file(path);
  const json& net_json = doc.contains("network") ? doc["network"] : doc;
  ResolvedNet out;
  out.net = network_from_json(net_json.dump());
  out.identity = network_to_json(out.net);
  out.source = "file:" + path;
  return out;
}

ResolvedNet net_from_archive(const std::string& run_dir, const std::string& key,
                             const SearchSpaceConfig& space) {
  const std::string pareto_path =
      (std::filesystem::path(run_dir) / "pareto.json").string();
  const json doc = pipeline::read_json_file(pareto_path);
  if (!doc.contains("archive") || !doc["archive"].is_array()) {
    throw IoError(pareto_path + ": missing 'archive' array");
  }
  std::vector<std::string> available;
  for (const json& entry : doc["archive"]) {
    const std::string entry_key = entry.value("genome_key", "");
    if (entry_key == key) {
      ResolvedNet out;
      const ArchitectureGenome genome = genome_from_json(entry["genome"].dump());
      out.net = decode(genome, space);
      out.identity = key;
      out.source = "search:" + key;
      return out;
    }
    available.push_back(entry_key);
  }
  std::string msg = "genome key '" + key + "' not in " + pareto_path + "; archive holds:";
  for (const std::string& k : available) msg += "\n  " + k;
  throw ConfigError(msg);
}

}  // namespace

std::string cmd_localsearch(const RunConfig& cfg, const LocalSearchRequest& request) {
  namespace fs = std::filesystem;
  log_info("resolving dataset");
  const ResolvedData data = resolve_dataset(cfg.data);
  const SearchSpaceConfig space = resolve_space(cfg.space, data.input_dim, data.num_classes);

  ResolvedNet resolved;
  if (fs::exists(request.genome) && fs::is_regular_file(request.genome)) {
    resolved = net_from_file(request.genome);
  } else if (!request.from_run.empty()) {
    resolved = net_from_archive(request.from_run, request.genome, space);
  } else {
    throw ConfigError("'" + request.genome +
                      "' is not a model file, and no --from run was given to resolve it as a "
                      "genome key");
  }
  if (resolved.net.input_dim() != static_cast<int>(data.input_dim) ||
      resolved.net.output_dim() != data.num_classes) {
    throw ConfigError("network expects " + std::to_string(resolved.net.input_dim()) +
                      " features / " + std::to_string(resolved.net.output_dim()) +
                      " classes but the dataset has " + std::to_string(data.input_dim) + " / " +
                      std::to_string(data.num_classes));
  }

  const std::string run_name = "local_" + hex64(fnv1a64(resolved.identity)).substr(0, 8);
  const std::string run_dir = (fs::path(cfg.output_dir) / run_name).string();
  const std::string ckpt_dir = (fs::path(run_dir) / "checkpoints").string();
  fs::create_directories(ckpt_dir);
  pipeline::RunLock lock(run_dir);
  const std::string started_at = pipeline::iso8601_utc_now();
  const std::string config_hash = pipeline::copy_config_into(run_dir, cfg.source_path);

  const std::unique_ptr<Estimator> estimator = make_estimator(cfg.est);
  const double target_sparsity = request.target_sparsity.value_or(cfg.local.target_sparsity);
  const double min_accuracy = request.min_accuracy.value_or(cfg.local.min_accuracy);

  const std::string ckpt_csv_path = (fs::path(run_dir) / "checkpoints.csv").string();
  std::ofstream ckpt_csv(ckpt_csv_path, std::ios::trunc);
  if (!ckpt_csv) throw IoError("cannot write " + ckpt_csv_path);
  ckpt_csv << "iteration,sparsity,weight_bits,val_accuracy,bops,bram,dsp,ff,lut,"
              "ii_cycles,latency_cycles,weights_path\n"
           << std::flush;

  const CheckpointObserver observer = [&](const CheckpointRecord& rec) {
    const std::string rel =
        fs::path(rec.weights_path).lexically_relative(run_dir).generic_string();
    ckpt_csv << rec.iteration << "," << fmt_double(rec.sparsity) << "," << rec.weight_bits << ","
             << fmt_double(rec.val_accuracy) << "," << rec.bops << ","
             << fmt_double(rec.estimate.bram) << "," << fmt_double(rec.estimate.dsp) << ","
             << fmt_double(rec.estimate.ff) << "," << fmt_double(rec.estimate.lut) << ","
             << fmt_double(rec.estimate.ii_cycles) << ","
             << fmt_double(rec.estimate.latency_cycles) << "," << rel << "\n"
             << std::flush;
    log_info("checkpoint " + std::to_string(rec.iteration) + ": sparsity " +
             fmt_fixed(rec.sparsity, 3) + ", val accuracy " + fmt_fixed(rec.val_accuracy, 4));
  };

  log_info("compressing " + resolved.source + ": " + std::to_string(cfg.local.local.iterations) +
           " prune/QAT iterations");
  const std::vector<CheckpointRecord> records = local_search(
      resolved.net, data.train, data.val, cfg.local.local, *estimator, ckpt_dir, observer);
  if (!ckpt_csv) throw IoError("failed writing " + ckpt_csv_path);
  ckpt_csv.close();

  const SelectedCheckpoint selected = select_checkpoint(records, target_sparsity, min_accuracy);
  if (selected.below_min_accuracy) {
    log_error("no checkpoint reached accuracy " + fmt_double(min_accuracy) +
              "; exporting the most accurate one (iteration " +
              std::to_string(selected.record.iteration) + ")");
  }

  Mlp<float> snapshot = load_model(selected.record.weights_path);
  const double test_accuracy = evaluate(snapshot, data.test);
  log_info("selected checkpoint " + std::to_string(selected.record.iteration) + ": sparsity " +
           fmt_fixed(selected.record.sparsity, 3) + ", test accuracy " +
           fmt_fixed(test_accuracy, 4));

  json provenance;
  provenance["config_hash"] = config_hash;
  provenance["source"] = resolved.source;
  provenance["seed"] = cfg.local.local.seed;
  provenance["target_sparsity"] = target_sparsity;
  provenance["test_accuracy"] = test_accuracy;
  const std::string model_path = (fs::path(run_dir) / "model.json").string();
  const std::string weights_path = (fs::path(run_dir) / "weights.bin").string();
  export_model(selected.record, model_path, weights_path, provenance);

  pipeline::write_manifest(run_dir, "localsearch", config_hash, started_at,
                           {{"config", "config.json"},
                            {"checkpoints", "checkpoints.csv"},
                            {"model", "model.json"},
                            {"weights", "weights.bin"}});
  log_info("local search run written to " + run_dir);
  return run_dir;
}

}  // namespace hwnas
