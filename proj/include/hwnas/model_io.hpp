#pragma once

#include <string>

#include "hwnas/trainer.hpp"
#include "vendor/json.hpp"

namespace hwnas {

// Persists a model as a JSON manifest plus a little-endian float32/u8 binary
// sidecar. Quantized models are materialized: the stored weight tensors are
// the fake-quantized values together with their per-tensor scales, so a
// reload reproduces eval-mode logits bitwise (the quantizer is idempotent).
// The manifest references the sidecar by basename; both live in one
// directory.
void save_model(Mlp<float>& model, const std::string& manifest_path,
                const std::string& weights_path, const nlohmann::json& provenance);

Mlp<float> load_model(const std::string& manifest_path);

// Provenance block stored alongside the tensors, returned verbatim.
nlohmann::json read_model_provenance(const std::string& manifest_path);

}  // namespace hwnas
