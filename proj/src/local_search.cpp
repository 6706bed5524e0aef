#include "hwnas/local_search.hpp"

#include <cmath>
#include <filesystem>

#include "hwnas/errors.hpp"
#include "hwnas/model_io.hpp"

namespace hwnas {

void LocalSearchConfig::validate() const {
  if (prune_fraction < 0.0 || prune_fraction >= 1.0) {
    throw ConfigError("prune_fraction must be in [0,1)");
  }
  if (warmup_epochs < 0 || iterations < 0 || epochs_per_iteration < 0) {
    throw ConfigError("local search epoch/iteration counts must be >= 0");
  }
  if (qat_bits < 2 || qat_bits > 16) throw ConfigError("qat_bits must be in [2,16]");
  if (batch_size < 1) throw ConfigError("batch_size must be >= 1");
}

namespace {

CheckpointRecord make_checkpoint(Mlp<float>& model, int iteration, const Dataset& val_ds,
                                 const Estimator& estimator, const std::string& checkpoint_dir) {
  CheckpointRecord rec;
  rec.iteration = iteration;
  rec.sparsity = global_sparsity(model);
  rec.weight_bits = model.quantization_enabled() ? model.weight_bits() : 32;
  rec.val_accuracy = evaluate(model, val_ds);
  const NetworkDescription annotated = annotated_net(model);
  rec.bops = count_bops(annotated);
  rec.estimate = estimator.estimate(annotated);

  const std::filesystem::path dir(checkpoint_dir);
  const std::string stem = "ckpt" + std::to_string(iteration);
  const std::string manifest = (dir / (stem + ".model.json")).string();
  const std::string weights = (dir / (stem + ".weights.bin")).string();
  nlohmann::json provenance;
  provenance["checkpoint_iteration"] = iteration;
  provenance["val_accuracy"] = rec.val_accuracy;
  save_model(model, manifest, weights, provenance);
  rec.weights_path = manifest;
  return rec;
}

}  // namespace

std::vector<CheckpointRecord> local_search(const NetworkDescription& net,
                                           const Dataset& train_ds, const Dataset& val_ds,
                                           const LocalSearchConfig& cfg,
                                           const Estimator& estimator,
                                           const std::string& checkpoint_dir,
                                           const CheckpointObserver& observer) {
  cfg.validate();
  if (!std::filesystem::is_directory(checkpoint_dir)) {
    throw IoError("checkpoint directory does not exist: " + checkpoint_dir);
  }

  Mlp<float> model(net, derive_seed(cfg.seed, 0));
  TrainConfig tc;
  tc.batch_size = cfg.batch_size;
  tc.learning_rate = net.training_meta.learning_rate;
  tc.l1 = net.training_meta.l1;
  tc.optimizer = cfg.optimizer;

  tc.epochs = cfg.warmup_epochs;
  tc.seed = derive_seed(cfg.seed, 1);
  train_inplace(model, train_ds, val_ds, tc);

  std::vector<CheckpointRecord> records;
  records.push_back(make_checkpoint(model, 0, val_ds, estimator, checkpoint_dir));
  if (observer) observer(records.back());

  for (int k = 1; k <= cfg.iterations; ++k) {
    prune_step(model, cfg.prune_fraction);
    model.set_quantization(true, cfg.qat_bits, cfg.qat_bits);
    tc.epochs = cfg.epochs_per_iteration;
    tc.seed = derive_seed(cfg.seed, static_cast<std::uint64_t>(1 + k));
    train_inplace(model, train_ds, val_ds, tc);
    records.push_back(make_checkpoint(model, k, val_ds, estimator, checkpoint_dir));
    if (observer) observer(records.back());
  }
  return records;
}

SelectedCheckpoint select_checkpoint(const std::vector<CheckpointRecord>& records,
                                     double target_sparsity, double min_accuracy) {
  if (records.empty()) throw ConfigError("no checkpoints to select from");

  const CheckpointRecord* best = nullptr;
  for (const CheckpointRecord& rec : records) {
    if (rec.val_accuracy < min_accuracy) continue;
    if (best == nullptr) {
      best = &rec;
      continue;
    }
    const double d_new = std::abs(rec.sparsity - target_sparsity);
    const double d_best = std::abs(best->sparsity - target_sparsity);
    if (d_new < d_best ||
        (d_new == d_best && (rec.val_accuracy > best->val_accuracy ||
                             (rec.val_accuracy == best->val_accuracy &&
                              rec.iteration < best->iteration)))) {
      best = &rec;
    }
  }
  if (best != nullptr) return {*best, false};

  best = &records.front();
  for (const CheckpointRecord& rec : records) {
    if (rec.val_accuracy > best->val_accuracy) best = &rec;
  }
  return {*best, true};
}

void export_model(const CheckpointRecord& record, const std::string& manifest_out,
                  const std::string& weights_out, const nlohmann::json& provenance) {
  Mlp<float> model = load_model(record.weights_path);
  nlohmann::json prov = provenance;
  prov["checkpoint_iteration"] = record.iteration;
  prov["sparsity"] = record.sparsity;
  prov["weight_bits"] = record.weight_bits;
  prov["val_accuracy"] = record.val_accuracy;
  save_model(model, manifest_out, weights_out, prov);
}

}  // namespace hwnas
