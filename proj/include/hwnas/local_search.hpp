#pragma once

#include <functional>
#include <string>
#include <vector>

#include "hwnas/dataset.hpp"
#include "hwnas/estimator.hpp"
#include "hwnas/net_ir.hpp"
#include "hwnas/trainer.hpp"
#include "vendor/json.hpp"

namespace hwnas {

struct LocalSearchConfig {
  int warmup_epochs = 5;
  int iterations = 10;
  int epochs_per_iteration = 10;
  double prune_fraction = 0.2;
  int qat_bits = 8;
  std::uint64_t seed = 0;
  int batch_size = 128;
  Optimizer optimizer = Optimizer::kAdam;

  void validate() const;
};

struct CheckpointRecord {
  int iteration = 0;
  double sparsity = 0.0;
  int weight_bits = 32;
  double val_accuracy = 0.0;
  std::int64_t bops = 0;
  ResourceEstimate estimate;
  std::string weights_path;  // manifest of the per-checkpoint snapshot
};

using CheckpointObserver = std::function<void(const CheckpointRecord&)>;

// Warm-up at full precision, then `iterations` rounds of prune(prune_fraction)
// followed by QAT fine-tuning. Checkpoint 0 is the warm-up model; each
// checkpoint snapshot is persisted under checkpoint_dir before the observer
// fires, so an aborted run leaves the completed prefix on disk. Learning rate
// and l1 come from the network's training metadata.
std::vector<CheckpointRecord> local_search(const NetworkDescription& net,
                                           const Dataset& train_ds, const Dataset& val_ds,
                                           const LocalSearchConfig& cfg,
                                           const Estimator& estimator,
                                           const std::string& checkpoint_dir,
                                           const CheckpointObserver& observer = nullptr);

struct SelectedCheckpoint {
  CheckpointRecord record;
  // No checkpoint met min_accuracy; the highest-accuracy one was returned.
  bool below_min_accuracy = false;
};

// Among records meeting min_accuracy, picks the sparsity closest to the
// target; ties go to higher accuracy, then lower iteration.
SelectedCheckpoint select_checkpoint(const std::vector<CheckpointRecord>& records,
                                     double target_sparsity, double min_accuracy);

// Re-emits a checkpoint snapshot as a standalone model.json + weights.bin
// with the given provenance block.
void export_model(const CheckpointRecord& record, const std::string& manifest_out,
                  const std::string& weights_out, const nlohmann::json& provenance);

}  // namespace hwnas
