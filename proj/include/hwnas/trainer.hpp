#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "hwnas/dataset.hpp"
#include "hwnas/kernels.hpp"
#include "hwnas/net_ir.hpp"
#include "hwnas/rng.hpp"

namespace hwnas {

enum class Mode { kTrain, kEval };
enum class Optimizer { kAdam, kSgd };

inline constexpr double kBnEps = 1e-5;
inline constexpr double kBnMomentum = 0.1;
inline constexpr double kAdamBeta1 = 0.9;
inline constexpr double kAdamBeta2 = 0.999;
inline constexpr double kAdamEps = 1e-8;

// Symmetric per-tensor fake quantization with straight-through gradients.
// scale = max|x| / (2^{bits-1} - 1); all-zero tensors stay all-zero. Values
// whose code saturates reproduce +-max|x| exactly, which makes the operation
// idempotent bitwise.
template <typename T>
void fake_quantize(const T* x, T* y, std::size_t n, int bits) {
  const int qmax = (1 << (bits - 1)) - 1;
  const T amax = kernels::Traits<T>::absmax(x, n);
  if (amax == T(0)) {
    for (std::size_t i = 0; i < n; ++i) y[i] = T(0);
    return;
  }
  kernels::Traits<T>::quantize_symmetric(x, y, n, amax, qmax);
}

template <typename T>
std::vector<T> fake_quantize(const std::vector<T>& x, int bits) {
  std::vector<T> y(x.size());
  fake_quantize(x.data(), y.data(), x.size(), bits);
  return y;
}

template <typename T>
struct DenseState {
  std::size_t in = 0;
  std::size_t out = 0;
  std::vector<T> w;  // row-major [out][in]
  std::vector<T> b;
  std::vector<std::uint8_t> mask;  // 1 = trainable, 0 = pruned to zero
  std::vector<T> wq;               // quantized weights used while QAT is on
  std::vector<T> gw, gb;
  std::vector<T> mw, vw, mb, vb;
  std::vector<T> x_cache;  // batch x in, input of the last forward
};

template <typename T>
struct BatchNormState {
  std::size_t dim = 0;
  std::vector<T> gamma, beta;
  std::vector<T> running_mean, running_var;
  std::vector<T> ggamma, gbeta;
  std::vector<T> mgamma, vgamma, mbeta, vbeta;
  std::vector<T> xhat;    // batch x dim, from the last forward
  std::vector<T> invstd;  // dim, statistics used by the last forward
};

template <typename T>
struct DropoutState {
  double rate = 0.0;
  std::vector<T> keep;  // batch x dim, 0 or 1/(1-rate)
};

// Training engine for one network. float instantiations route inner loops
// through the runtime kernel table; double is the scalar reference used by
// the finite-difference oracle. Instances are single-threaded.
template <typename T>
class Mlp {
 public:
  Mlp(NetworkDescription net, std::uint64_t init_seed);

  const NetworkDescription& net() const { return net_; }
  std::size_t input_dim() const { return in_dim_; }
  std::size_t output_dim() const { return out_dim_; }

  void set_quantization(bool enabled, int weight_bits, int act_bits);
  bool quantization_enabled() const { return qat_; }
  int weight_bits() const { return weight_bits_; }
  int act_bits() const { return act_bits_; }

  // x is batch x input_dim row-major; logits resized to batch x output_dim.
  // Train mode draws dropout masks from drop_rng and refreshes BatchNorm
  // running statistics.
  void forward(const T* x, std::size_t batch, Mode mode, std::vector<T>& logits,
               Rng* drop_rng = nullptr);

  // Mean cross-entropy over the batch; fills dlogits with d(loss)/d(logits).
  T cross_entropy(const std::vector<T>& logits, const int* labels, std::size_t batch,
                  std::vector<T>& dlogits) const;

  // Backpropagates through the layers of the most recent forward.
  void backward(const std::vector<T>& dlogits, std::size_t batch);

  void zero_grad();
  // Adds l1 * sign(w) to unmasked weight gradients.
  void apply_l1(T l1);
  void step(Optimizer opt, T lr);
  // Forces pruned weights back to exact zero.
  void apply_masks();

  T l1_penalty() const;

  struct TensorRef {
    std::string name;
    std::vector<T>* value;
    std::vector<T>* grad;
  };
  // Trainable tensors in a fixed order (masks and running stats excluded).
  std::vector<TensorRef> tensors();

  std::vector<DenseState<T>>& dense_layers() { return dense_; }
  const std::vector<DenseState<T>>& dense_layers() const { return dense_; }
  std::vector<BatchNormState<T>>& bn_layers() { return bn_; }
  const std::vector<BatchNormState<T>>& bn_layers() const { return bn_; }

  std::int64_t adam_steps() const { return adam_t_; }
  void set_adam_steps(std::int64_t t) { adam_t_ = t; }

 private:
  NetworkDescription net_;
  std::size_t in_dim_ = 0;
  std::size_t out_dim_ = 0;
  std::vector<DenseState<T>> dense_;
  std::vector<BatchNormState<T>> bn_;
  std::vector<DropoutState<T>> drop_;
  // per net layer: index into the matching state vector
  std::vector<std::size_t> slot_;
  // acts_[k] = input of layer k; acts_[L] = logits
  std::vector<std::vector<T>> acts_;
  Mode last_mode_ = Mode::kEval;
  bool qat_ = false;
  int weight_bits_ = 32;
  int act_bits_ = 32;
  std::int64_t adam_t_ = 0;
};

extern template class Mlp<float>;
extern template class Mlp<double>;

struct TrainConfig {
  int epochs = 5;
  int batch_size = 128;
  double learning_rate = 1e-3;
  double l1 = 0.0;
  Optimizer optimizer = Optimizer::kAdam;
  std::uint64_t seed = 0;
};

struct EpochStats {
  double train_loss = 0.0;
  double val_accuracy = 0.0;
};

struct TrainedModel {
  Mlp<float> model;
  std::vector<EpochStats> history;
};

// Deterministic given cfg.seed. Throws FailedTrial when the loss goes
// non-finite.
std::vector<EpochStats> train_inplace(Mlp<float>& model, const Dataset& train_ds,
                                      const Dataset& val_ds, const TrainConfig& cfg);
TrainedModel train(const NetworkDescription& net, const Dataset& train_ds, const Dataset& val_ds,
                   const TrainConfig& cfg);

// Eval-mode accuracy; argmax ties resolve to the lowest class index. Rows are
// processed in fixed chunks so results do not depend on dataset size split.
double evaluate(Mlp<float>& model, const Dataset& ds);

// Zeroes the smallest-magnitude `fraction` of currently unmasked weights,
// ranked globally across Dense layers. Masks only ever grow.
template <typename T>
void prune_step(Mlp<T>& model, double fraction);

// Pruned fraction over all Dense weight positions.
template <typename T>
double global_sparsity(const Mlp<T>& model);

// Writes each Dense layer's current sparsity (and active quantization bits)
// back into the NetworkDescription so estimates reflect the trained state.
template <typename T>
NetworkDescription annotated_net(const Mlp<T>& model);

// Max relative error between analytic and central finite-difference
// gradients (h = 1e-5) on a random batch, double precision, eval-mode
// BatchNorm. ReLU networks are re-batched until no pre-activation sits
// within 1e-3 of a kink.
double gradient_check(const NetworkDescription& net, std::uint64_t seed);

}  // namespace hwnas
