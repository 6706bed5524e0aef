#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

namespace hwnas {

enum class Activation { ReLU, Tanh, Sigmoid };

const char* to_string(Activation a);
Activation activation_from_string(const std::string& s);

enum class LayerKind { Dense, BatchNorm, Act, Dropout };

const char* to_string(LayerKind k);

// One layer of the network IR. Dense uses in_dim/out_dim; the shape-preserving
// kinds carry their feature dim in `dim`. weight_bits/act_bits default to full
// precision and drop to the QAT width during local search; sparsity is the
// fraction of zeroed weights (Dense only).
struct LayerDesc {
  LayerKind kind = LayerKind::Dense;
  int in_dim = 0;   // Dense
  int out_dim = 0;  // Dense
  int dim = 0;      // BatchNorm / Act / Dropout
  Activation activation = Activation::ReLU;  // Act
  double dropout_rate = 0.0;                 // Dropout
  int weight_bits = 32;
  int act_bits = 32;
  double sparsity = 0.0;

  static LayerDesc dense(int in, int out) {
    LayerDesc d;
    d.kind = LayerKind::Dense;
    d.in_dim = in;
    d.out_dim = out;
    return d;
  }
  static LayerDesc batchnorm(int dim) {
    LayerDesc d;
    d.kind = LayerKind::BatchNorm;
    d.dim = dim;
    return d;
  }
  static LayerDesc act(Activation a, int dim) {
    LayerDesc d;
    d.kind = LayerKind::Act;
    d.activation = a;
    d.dim = dim;
    return d;
  }
  static LayerDesc dropout(double rate, int dim) {
    LayerDesc d;
    d.kind = LayerKind::Dropout;
    d.dropout_rate = rate;
    d.dim = dim;
    return d;
  }

  bool operator==(const LayerDesc&) const = default;
};

struct TrainingMeta {
  double learning_rate = 1e-3;
  double l1 = 0.0;
  bool operator==(const TrainingMeta&) const = default;
};

struct NetworkDescription {
  std::vector<LayerDesc> layers;
  TrainingMeta training_meta;

  bool operator==(const NetworkDescription&) const = default;

  int input_dim() const;   // in_dim of the first Dense (0 if none)
  int output_dim() const;  // out_dim of the last Dense (0 if none)
};

struct ShapeError {
  int layer_index = 0;
  int expected = 0;
  int found = 0;
  std::string message;
};

// Accepts iff the dense dims chain through the shape-preserving layers.
// Returns the first offending layer on failure.
std::optional<ShapeError> validate_shapes(const NetworkDescription& net);

// Dense: in*out + out. BatchNorm: 2*dim (scale and shift; running statistics
// are not trainable parameters).
std::int64_t param_count(const NetworkDescription& net);

// Bit-operation count.
//   Dense(n->m, b_w, b_a, s): round((1-s) * m*n*b_w*b_a)
//                             + m*n*(b_w + b_a + ceil_log2(n))
//   BatchNorm(d):             d*(b_w*b_a + b_w + b_a)
//   Act/Dropout:              0 (table-based activations, no-op dropout)
// The accumulate term is not sparsity-scaled: the adder tree is laid out for
// the dense dimensions regardless of which weights are zero.
std::int64_t count_bops(const NetworkDescription& net);

int ceil_log2(int n);  // n=1 -> 0

// JSON layout shared by all CLI artifacts (model.json, pareto.json nets).
std::string network_to_json(const NetworkDescription& net, int indent = -1);
NetworkDescription network_from_json(const std::string& json_text);

}  // namespace hwnas
