#include "hwnas/trainer.hpp"

#include <algorithm>
#include <cmath>
#include <tuple>

#include "hwnas/errors.hpp"

namespace hwnas {

namespace {

constexpr std::size_t kEvalChunk = 4096;

template <typename T>
T activate(Activation kind, T z) {
  switch (kind) {
    case Activation::ReLU:
      return z > T(0) ? z : T(0);
    case Activation::Tanh:
      return std::tanh(z);
    case Activation::Sigmoid:
      return T(1) / (T(1) + std::exp(-z));
  }
  return z;
}

template <typename T>
T activate_grad(Activation kind, T z) {
  switch (kind) {
    case Activation::ReLU:
      return z > T(0) ? T(1) : T(0);
    case Activation::Tanh: {
      const T t = std::tanh(z);
      return T(1) - t * t;
    }
    case Activation::Sigmoid: {
      const T s = T(1) / (T(1) + std::exp(-z));
      return s * (T(1) - s);
    }
  }
  return T(1);
}

}  // namespace

template <typename T>
Mlp<T>::Mlp(NetworkDescription net, std::uint64_t init_seed) : net_(std::move(net)) {
  if (auto err = validate_shapes(net_)) {
    throw ConfigError("invalid network: " + err->message);
  }
  in_dim_ = static_cast<std::size_t>(net_.input_dim());
  out_dim_ = static_cast<std::size_t>(net_.output_dim());
  slot_.resize(net_.layers.size());
  acts_.resize(net_.layers.size() + 1);

  Rng rng(init_seed);
  for (std::size_t k = 0; k < net_.layers.size(); ++k) {
    const LayerDesc& layer = net_.layers[k];
    switch (layer.kind) {
      case LayerKind::Dense: {
        DenseState<T> d;
        d.in = static_cast<std::size_t>(layer.in_dim);
        d.out = static_cast<std::size_t>(layer.out_dim);
        d.w.resize(d.in * d.out);
        d.b.assign(d.out, T(0));
        d.mask.assign(d.w.size(), 1);
        d.gw.assign(d.w.size(), T(0));
        d.gb.assign(d.out, T(0));
        d.mw.assign(d.w.size(), T(0));
        d.vw.assign(d.w.size(), T(0));
        d.mb.assign(d.out, T(0));
        d.vb.assign(d.out, T(0));
        const double bound = 1.0 / std::sqrt(static_cast<double>(d.in));
        for (T& wi : d.w) wi = static_cast<T>((2.0 * rng.uniform() - 1.0) * bound);
        slot_[k] = dense_.size();
        dense_.push_back(std::move(d));
        break;
      }
      case LayerKind::BatchNorm: {
        BatchNormState<T> bn;
        bn.dim = static_cast<std::size_t>(layer.dim);
        bn.gamma.assign(bn.dim, T(1));
        bn.beta.assign(bn.dim, T(0));
        bn.running_mean.assign(bn.dim, T(0));
        bn.running_var.assign(bn.dim, T(1));
        bn.ggamma.assign(bn.dim, T(0));
        bn.gbeta.assign(bn.dim, T(0));
        bn.mgamma.assign(bn.dim, T(0));
        bn.vgamma.assign(bn.dim, T(0));
        bn.mbeta.assign(bn.dim, T(0));
        bn.vbeta.assign(bn.dim, T(0));
        bn.invstd.assign(bn.dim, T(1));
        slot_[k] = bn_.size();
        bn_.push_back(std::move(bn));
        break;
      }
      case LayerKind::Dropout: {
        DropoutState<T> dr;
        dr.rate = net_.layers[k].dropout_rate;
        slot_[k] = drop_.size();
        drop_.push_back(std::move(dr));
        break;
      }
      case LayerKind::Act:
        slot_[k] = 0;
        break;
    }
  }
}

template <typename T>
void Mlp<T>::set_quantization(bool enabled, int weight_bits, int act_bits) {
  if (enabled && (weight_bits < 2 || weight_bits > 16 || act_bits < 2 || act_bits > 16)) {
    throw ConfigError("quantization bits must be in [2,16]");
  }
  qat_ = enabled;
  weight_bits_ = enabled ? weight_bits : 32;
  act_bits_ = enabled ? act_bits : 32;
  for (LayerDesc& layer : net_.layers) {
    layer.weight_bits = weight_bits_;
    layer.act_bits = act_bits_;
  }
}

template <typename T>
void Mlp<T>::forward(const T* x, std::size_t batch, Mode mode, std::vector<T>& logits,
                     Rng* drop_rng) {
  last_mode_ = mode;
  acts_[0].assign(x, x + batch * in_dim_);

  for (std::size_t k = 0; k < net_.layers.size(); ++k) {
    const LayerDesc& layer = net_.layers[k];
    const std::vector<T>& in = acts_[k];
    std::vector<T>& out = acts_[k + 1];

    switch (layer.kind) {
      case LayerKind::Dense: {
        DenseState<T>& d = dense_[slot_[k]];
        d.x_cache = in;
        const T* weights = d.w.data();
        if (qat_) {
          d.wq.resize(d.w.size());
          fake_quantize(d.w.data(), d.wq.data(), d.w.size(), weight_bits_);
          weights = d.wq.data();
        }
        out.resize(batch * d.out);
        for (std::size_t r = 0; r < batch; ++r) {
          const T* xr = in.data() + r * d.in;
          T* yr = out.data() + r * d.out;
          for (std::size_t o = 0; o < d.out; ++o) {
            yr[o] = kernels::Traits<T>::dot(weights + o * d.in, xr, d.in) + d.b[o];
          }
        }
        break;
      }
      case LayerKind::BatchNorm: {
        BatchNormState<T>& bn = bn_[slot_[k]];
        const std::size_t dim = bn.dim;
        out.resize(batch * dim);
        bn.xhat.resize(batch * dim);
        bn.invstd.resize(dim);
        std::vector<T> mean(dim, T(0));
        std::vector<T> var(dim, T(0));
        if (mode == Mode::kTrain) {
          for (std::size_t r = 0; r < batch; ++r) {
            const T* xr = in.data() + r * dim;
            for (std::size_t j = 0; j < dim; ++j) mean[j] += xr[j];
          }
          const T inv_b = T(1) / static_cast<T>(batch);
          for (std::size_t j = 0; j < dim; ++j) mean[j] *= inv_b;
          for (std::size_t r = 0; r < batch; ++r) {
            const T* xr = in.data() + r * dim;
            for (std::size_t j = 0; j < dim; ++j) {
              const T c = xr[j] - mean[j];
              var[j] += c * c;
            }
          }
          for (std::size_t j = 0; j < dim; ++j) var[j] *= inv_b;
          const T mom = static_cast<T>(kBnMomentum);
          for (std::size_t j = 0; j < dim; ++j) {
            bn.running_mean[j] = (T(1) - mom) * bn.running_mean[j] + mom * mean[j];
            bn.running_var[j] = (T(1) - mom) * bn.running_var[j] + mom * var[j];
          }
        } else {
          mean = bn.running_mean;
          var = bn.running_var;
        }
        for (std::size_t j = 0; j < dim; ++j) {
          bn.invstd[j] = T(1) / std::sqrt(var[j] + static_cast<T>(kBnEps));
        }
        for (std::size_t r = 0; r < batch; ++r) {
          const T* xr = in.data() + r * dim;
          T* hr = bn.xhat.data() + r * dim;
          T* yr = out.data() + r * dim;
          for (std::size_t j = 0; j < dim; ++j) {
            hr[j] = (xr[j] - mean[j]) * bn.invstd[j];
            yr[j] = bn.gamma[j] * hr[j] + bn.beta[j];
          }
        }
        break;
      }
      case LayerKind::Act: {
        out.resize(in.size());
        for (std::size_t i = 0; i < in.size(); ++i) {
          out[i] = activate(layer.activation, in[i]);
        }
        if (qat_) fake_quantize(out.data(), out.data(), out.size(), act_bits_);
        break;
      }
      case LayerKind::Dropout: {
        DropoutState<T>& dr = drop_[slot_[k]];
        out.resize(in.size());
        if (mode == Mode::kTrain && dr.rate > 0.0) {
          const T scale = static_cast<T>(1.0 / (1.0 - dr.rate));
          dr.keep.resize(in.size());
          for (std::size_t i = 0; i < in.size(); ++i) {
            dr.keep[i] = (drop_rng != nullptr && drop_rng->uniform() < dr.rate) ? T(0) : scale;
            out[i] = in[i] * dr.keep[i];
          }
        } else {
          out = in;
          dr.keep.assign(in.size(), T(1));
        }
        break;
      }
    }
  }
  logits = acts_.back();
}

template <typename T>
T Mlp<T>::cross_entropy(const std::vector<T>& logits, const int* labels, std::size_t batch,
                        std::vector<T>& dlogits) const {
  const std::size_t c = out_dim_;
  dlogits.resize(batch * c);
  T total = T(0);
  const T inv_b = T(1) / static_cast<T>(batch);
  for (std::size_t r = 0; r < batch; ++r) {
    const T* z = logits.data() + r * c;
    T* dz = dlogits.data() + r * c;
    T zmax = z[0];
    for (std::size_t j = 1; j < c; ++j) zmax = std::max(zmax, z[j]);
    T sum = T(0);
    for (std::size_t j = 0; j < c; ++j) sum += std::exp(z[j] - zmax);
    const T lse = zmax + std::log(sum);
    total += lse - z[labels[r]];
    for (std::size_t j = 0; j < c; ++j) {
      const T p = std::exp(z[j] - zmax) / sum;
      dz[j] = (p - (static_cast<int>(j) == labels[r] ? T(1) : T(0))) * inv_b;
    }
  }
  return total * inv_b;
}

template <typename T>
void Mlp<T>::backward(const std::vector<T>& dlogits, std::size_t batch) {
  std::vector<T> dy = dlogits;
  std::vector<T> dx;
  for (std::size_t k = net_.layers.size(); k-- > 0;) {
    const LayerDesc& layer = net_.layers[k];
    switch (layer.kind) {
      case LayerKind::Dense: {
        DenseState<T>& d = dense_[slot_[k]];
        const T* weights = qat_ ? d.wq.data() : d.w.data();
        dx.assign(batch * d.in, T(0));
        for (std::size_t r = 0; r < batch; ++r) {
          const T* xr = d.x_cache.data() + r * d.in;
          const T* dyr = dy.data() + r * d.out;
          T* dxr = dx.data() + r * d.in;
          for (std::size_t o = 0; o < d.out; ++o) {
            const T g = dyr[o];
            if (g == T(0)) continue;
            kernels::Traits<T>::axpy(g, weights + o * d.in, dxr, d.in);
            kernels::Traits<T>::axpy(g, xr, d.gw.data() + o * d.in, d.in);
            d.gb[o] += g;
          }
        }
        dy.swap(dx);
        break;
      }
      case LayerKind::BatchNorm: {
        BatchNormState<T>& bn = bn_[slot_[k]];
        const std::size_t dim = bn.dim;
        std::vector<T> dy_sum(dim, T(0));
        std::vector<T> dyxhat_sum(dim, T(0));
        for (std::size_t r = 0; r < batch; ++r) {
          const T* dyr = dy.data() + r * dim;
          const T* hr = bn.xhat.data() + r * dim;
          for (std::size_t j = 0; j < dim; ++j) {
            dy_sum[j] += dyr[j];
            dyxhat_sum[j] += dyr[j] * hr[j];
          }
        }
        for (std::size_t j = 0; j < dim; ++j) {
          bn.gbeta[j] += dy_sum[j];
          bn.ggamma[j] += dyxhat_sum[j];
        }
        dx.resize(batch * dim);
        if (last_mode_ == Mode::kTrain) {
          const T inv_b = T(1) / static_cast<T>(batch);
          for (std::size_t r = 0; r < batch; ++r) {
            const T* dyr = dy.data() + r * dim;
            const T* hr = bn.xhat.data() + r * dim;
            T* dxr = dx.data() + r * dim;
            for (std::size_t j = 0; j < dim; ++j) {
              dxr[j] = bn.gamma[j] * bn.invstd[j] *
                       (dyr[j] - dy_sum[j] * inv_b - hr[j] * dyxhat_sum[j] * inv_b);
            }
          }
        } else {
          for (std::size_t r = 0; r < batch; ++r) {
            const T* dyr = dy.data() + r * dim;
            T* dxr = dx.data() + r * dim;
            for (std::size_t j = 0; j < dim; ++j) {
              dxr[j] = dyr[j] * bn.gamma[j] * bn.invstd[j];
            }
          }
        }
        dy.swap(dx);
        break;
      }
      case LayerKind::Act: {
        const std::vector<T>& z = acts_[k];
        for (std::size_t i = 0; i < dy.size(); ++i) {
          dy[i] *= activate_grad(layer.activation, z[i]);
        }
        break;
      }
      case LayerKind::Dropout: {
        const DropoutState<T>& dr = drop_[slot_[k]];
        for (std::size_t i = 0; i < dy.size(); ++i) dy[i] *= dr.keep[i];
        break;
      }
    }
  }
}

template <typename T>
void Mlp<T>::zero_grad() {
  for (DenseState<T>& d : dense_) {
    std::fill(d.gw.begin(), d.gw.end(), T(0));
    std::fill(d.gb.begin(), d.gb.end(), T(0));
  }
  for (BatchNormState<T>& bn : bn_) {
    std::fill(bn.ggamma.begin(), bn.ggamma.end(), T(0));
    std::fill(bn.gbeta.begin(), bn.gbeta.end(), T(0));
  }
}

template <typename T>
void Mlp<T>::apply_l1(T l1) {
  if (l1 == T(0)) return;
  for (DenseState<T>& d : dense_) {
    for (std::size_t i = 0; i < d.w.size(); ++i) {
      if (d.mask[i] == 0 || d.w[i] == T(0)) continue;
      d.gw[i] += d.w[i] > T(0) ? l1 : -l1;
    }
  }
}

template <typename T>
T Mlp<T>::l1_penalty() const {
  T total = T(0);
  for (const DenseState<T>& d : dense_) {
    for (std::size_t i = 0; i < d.w.size(); ++i) {
      if (d.mask[i]) total += std::abs(d.w[i]);
    }
  }
  return total;
}

template <typename T>
void Mlp<T>::step(Optimizer opt, T lr) {
  for (DenseState<T>& d : dense_) {
    for (std::size_t i = 0; i < d.w.size(); ++i) {
      if (d.mask[i] == 0) d.gw[i] = T(0);
    }
  }
  if (opt == Optimizer::kAdam) {
    ++adam_t_;
    const T bc1 = static_cast<T>(1.0 - std::pow(kAdamBeta1, static_cast<double>(adam_t_)));
    const T bc2 = static_cast<T>(1.0 - std::pow(kAdamBeta2, static_cast<double>(adam_t_)));
    const T b1 = static_cast<T>(kAdamBeta1);
    const T b2 = static_cast<T>(kAdamBeta2);
    const T eps = static_cast<T>(kAdamEps);
    auto adam = [&](std::vector<T>& w, const std::vector<T>& g, std::vector<T>& m,
                    std::vector<T>& v) {
      kernels::Traits<T>::adam_update(w.data(), g.data(), m.data(), v.data(), w.size(), lr, b1, b2,
                                      eps, bc1, bc2);
    };
    for (DenseState<T>& d : dense_) {
      adam(d.w, d.gw, d.mw, d.vw);
      adam(d.b, d.gb, d.mb, d.vb);
    }
    for (BatchNormState<T>& bn : bn_) {
      adam(bn.gamma, bn.ggamma, bn.mgamma, bn.vgamma);
      adam(bn.beta, bn.gbeta, bn.mbeta, bn.vbeta);
    }
  } else {
    auto sgd = [&](std::vector<T>& w, const std::vector<T>& g) {
      kernels::Traits<T>::axpy(-lr, g.data(), w.data(), w.size());
    };
    for (DenseState<T>& d : dense_) {
      sgd(d.w, d.gw);
      sgd(d.b, d.gb);
    }
    for (BatchNormState<T>& bn : bn_) {
      sgd(bn.gamma, bn.ggamma);
      sgd(bn.beta, bn.gbeta);
    }
  }
  apply_masks();
}

template <typename T>
void Mlp<T>::apply_masks() {
  for (DenseState<T>& d : dense_) {
    for (std::size_t i = 0; i < d.w.size(); ++i) {
      if (d.mask[i] == 0) d.w[i] = T(0);
    }
  }
}

template <typename T>
std::vector<typename Mlp<T>::TensorRef> Mlp<T>::tensors() {
  std::vector<TensorRef> refs;
  for (std::size_t i = 0; i < dense_.size(); ++i) {
    const std::string tag = "dense" + std::to_string(i);
    refs.push_back({tag + ".w", &dense_[i].w, &dense_[i].gw});
    refs.push_back({tag + ".b", &dense_[i].b, &dense_[i].gb});
  }
  for (std::size_t i = 0; i < bn_.size(); ++i) {
    const std::string tag = "bn" + std::to_string(i);
    refs.push_back({tag + ".gamma", &bn_[i].gamma, &bn_[i].ggamma});
    refs.push_back({tag + ".beta", &bn_[i].beta, &bn_[i].gbeta});
  }
  return refs;
}

template class Mlp<float>;
template class Mlp<double>;

std::vector<EpochStats> train_inplace(Mlp<float>& model, const Dataset& train_ds,
                                      const Dataset& val_ds, const TrainConfig& cfg) {
  if (cfg.epochs < 0 || cfg.batch_size < 1) throw ConfigError("bad training configuration");
  if (train_ds.num_features != model.input_dim()) {
    throw ConfigError("training data feature dim does not match network input");
  }

  Rng shuffle_rng(derive_seed(cfg.seed, 1));
  Rng dropout_rng(derive_seed(cfg.seed, 2));

  std::vector<std::size_t> order(train_ds.num_rows);
  for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;

  const std::size_t bsz = static_cast<std::size_t>(cfg.batch_size);
  std::vector<float> batch_x;
  std::vector<int> batch_y;
  std::vector<float> logits;
  std::vector<float> dlogits;
  std::vector<EpochStats> history;

  for (int epoch = 0; epoch < cfg.epochs; ++epoch) {
    shuffle_rng.shuffle(order);
    double loss_sum = 0.0;
    std::size_t seen = 0;
    for (std::size_t start = 0; start < order.size(); start += bsz) {
      const std::size_t n = std::min(bsz, order.size() - start);
      batch_x.resize(n * train_ds.num_features);
      batch_y.resize(n);
      for (std::size_t r = 0; r < n; ++r) {
        const float* src = train_ds.row(order[start + r]);
        std::copy(src, src + train_ds.num_features,
                  batch_x.data() + r * train_ds.num_features);
        batch_y[r] = train_ds.labels[order[start + r]];
      }

      model.forward(batch_x.data(), n, Mode::kTrain, logits, &dropout_rng);
      float loss = model.cross_entropy(logits, batch_y.data(), n, dlogits);
      if (cfg.l1 > 0.0) loss += static_cast<float>(cfg.l1) * model.l1_penalty();
      if (!std::isfinite(loss)) {
        throw FailedTrial("non-finite loss at epoch " + std::to_string(epoch));
      }
      model.zero_grad();
      model.backward(dlogits, n);
      model.apply_l1(static_cast<float>(cfg.l1));
      model.step(cfg.optimizer, static_cast<float>(cfg.learning_rate));

      loss_sum += static_cast<double>(loss) * static_cast<double>(n);
      seen += n;
    }
    EpochStats stats;
    stats.train_loss = seen > 0 ? loss_sum / static_cast<double>(seen) : 0.0;
    stats.val_accuracy = val_ds.num_rows > 0 ? evaluate(model, val_ds) : 0.0;
    history.push_back(stats);
  }
  return history;
}

TrainedModel train(const NetworkDescription& net, const Dataset& train_ds, const Dataset& val_ds,
                   const TrainConfig& cfg) {
  Mlp<float> model(net, derive_seed(cfg.seed, 0));
  std::vector<EpochStats> history = train_inplace(model, train_ds, val_ds, cfg);
  return TrainedModel{std::move(model), std::move(history)};
}

double evaluate(Mlp<float>& model, const Dataset& ds) {
  if (ds.num_features != model.input_dim()) {
    throw ConfigError("eval data feature dim does not match network input");
  }
  if (ds.num_rows == 0) return 0.0;
  const std::size_t c = model.output_dim();
  std::vector<float> logits;
  std::size_t correct = 0;
  for (std::size_t start = 0; start < ds.num_rows; start += kEvalChunk) {
    const std::size_t n = std::min(kEvalChunk, ds.num_rows - start);
    model.forward(ds.row(start), n, Mode::kEval, logits);
    for (std::size_t r = 0; r < n; ++r) {
      const float* z = logits.data() + r * c;
      std::size_t best = 0;
      for (std::size_t j = 1; j < c; ++j) {
        if (z[j] > z[best]) best = j;
      }
      if (static_cast<int>(best) == ds.labels[start + r]) ++correct;
    }
  }
  return static_cast<double>(correct) / static_cast<double>(ds.num_rows);
}

template <typename T>
void prune_step(Mlp<T>& model, double fraction) {
  if (fraction < 0.0 || fraction >= 1.0) throw ConfigError("prune fraction must be in [0,1)");
  if (fraction == 0.0) return;

  struct Entry {
    T magnitude;
    std::size_t layer;
    std::size_t index;
  };
  std::vector<Entry> unmasked;
  auto& layers = model.dense_layers();
  for (std::size_t l = 0; l < layers.size(); ++l) {
    for (std::size_t i = 0; i < layers[l].w.size(); ++i) {
      if (layers[l].mask[i]) unmasked.push_back({std::abs(layers[l].w[i]), l, i});
    }
  }
  const std::size_t k = static_cast<std::size_t>(
      std::llround(fraction * static_cast<double>(unmasked.size())));
  if (k == 0) return;
  std::sort(unmasked.begin(), unmasked.end(), [](const Entry& a, const Entry& b) {
    return std::tie(a.magnitude, a.layer, a.index) < std::tie(b.magnitude, b.layer, b.index);
  });
  for (std::size_t i = 0; i < k && i < unmasked.size(); ++i) {
    DenseState<T>& d = layers[unmasked[i].layer];
    const std::size_t idx = unmasked[i].index;
    d.mask[idx] = 0;
    d.w[idx] = T(0);
    d.mw[idx] = T(0);
    d.vw[idx] = T(0);
  }
}

template <typename T>
double global_sparsity(const Mlp<T>& model) {
  std::size_t total = 0;
  std::size_t pruned = 0;
  for (const DenseState<T>& d : model.dense_layers()) {
    total += d.mask.size();
    for (std::uint8_t m : d.mask) pruned += (m == 0);
  }
  return total > 0 ? static_cast<double>(pruned) / static_cast<double>(total) : 0.0;
}

template <typename T>
NetworkDescription annotated_net(const Mlp<T>& model) {
  NetworkDescription net = model.net();
  std::size_t dense_idx = 0;
  for (LayerDesc& layer : net.layers) {
    if (layer.kind != LayerKind::Dense) continue;
    const DenseState<T>& d = model.dense_layers()[dense_idx++];
    std::size_t pruned = 0;
    for (std::uint8_t m : d.mask) pruned += (m == 0);
    layer.sparsity = d.mask.empty() ? 0.0 : static_cast<double>(pruned) /
                                                static_cast<double>(d.mask.size());
  }
  return net;
}

template void prune_step<float>(Mlp<float>&, double);
template void prune_step<double>(Mlp<double>&, double);
template double global_sparsity<float>(const Mlp<float>&);
template double global_sparsity<double>(const Mlp<double>&);
template NetworkDescription annotated_net<float>(const Mlp<float>&);
template NetworkDescription annotated_net<double>(const Mlp<double>&);

namespace {

bool has_relu(const NetworkDescription& net) {
  for (const LayerDesc& layer : net.layers) {
    if (layer.kind == LayerKind::Act && layer.activation == Activation::ReLU) return true;
  }
  return false;
}

// All ReLU pre-activations must sit clear of the kink for finite differences
// to be trustworthy.
bool clears_relu_kinks(Mlp<double>& model, const std::vector<double>& x, std::size_t batch) {
  std::vector<double> cur(x);
  std::vector<double> next;
  const NetworkDescription& net = model.net();
  std::size_t dense_idx = 0;
  std::size_t bn_idx = 0;
  for (std::size_t k = 0; k < net.layers.size(); ++k) {
    const LayerDesc& layer = net.layers[k];
    switch (layer.kind) {
      case LayerKind::Dense: {
        const DenseState<double>& d = model.dense_layers()[dense_idx++];
        next.assign(batch * d.out, 0.0);
        for (std::size_t r = 0; r < batch; ++r) {
          for (std::size_t o = 0; o < d.out; ++o) {
            next[r * d.out + o] =
                kernels::ref::dot(d.w.data() + o * d.in, cur.data() + r * d.in, d.in) + d.b[o];
          }
        }
        cur.swap(next);
        break;
      }
      case LayerKind::BatchNorm: {
        const BatchNormState<double>& bn = model.bn_layers()[bn_idx++];
        for (std::size_t r = 0; r < batch; ++r) {
          for (std::size_t j = 0; j < bn.dim; ++j) {
            double& v = cur[r * bn.dim + j];
            v = bn.gamma[j] * (v - bn.running_mean[j]) /
                    std::sqrt(bn.running_var[j] + kBnEps) +
                bn.beta[j];
          }
        }
        break;
      }
      case LayerKind::Act: {
        if (layer.activation == Activation::ReLU) {
          for (double v : cur) {
            if (std::abs(v) <= 1e-3) return false;
          }
        }
        for (double& v : cur) v = activate(layer.activation, v);
        break;
      }
      case LayerKind::Dropout:
        break;
    }
  }
  return true;
}

}  // namespace

double gradient_check(const NetworkDescription& net, std::uint64_t seed) {
  Mlp<double> model(net, derive_seed(seed, 0));
  Rng rng(derive_seed(seed, 1));

  // Non-trivial frozen statistics so the eval-mode BatchNorm path is
  // exercised rather than reduced to the identity.
  for (BatchNormState<double>& bn : model.bn_layers()) {
    for (std::size_t j = 0; j < bn.dim; ++j) {
      bn.running_mean[j] = 0.2 * rng.normal();
      bn.running_var[j] = 0.5 + rng.uniform();
    }
  }

  const std::size_t batch = 8;
  const std::size_t in_dim = model.input_dim();
  const int classes = static_cast<int>(model.output_dim());
  std::vector<double> x(batch * in_dim);
  std::vector<int> labels(batch);
  const bool relu = has_relu(net);
  for (int attempt = 0; attempt < 256; ++attempt) {
    for (double& v : x) v = rng.normal();
    for (int& y : labels) y = static_cast<int>(rng.uniform_index(static_cast<std::size_t>(classes)));
    if (!relu || clears_relu_kinks(model, x, batch)) break;
  }

  std::vector<double> logits;
  std::vector<double> dlogits;
  auto loss_at = [&]() {
    model.forward(x.data(), batch, Mode::kEval, logits);
    return model.cross_entropy(logits, labels.data(), batch, dlogits);
  };

  loss_at();
  model.zero_grad();
  model.backward(dlogits, batch);

  const double h = 1e-5;
  double max_rel = 0.0;
  for (auto& ref : model.tensors()) {
    for (std::size_t i = 0; i < ref.value->size(); ++i) {
      const double saved = (*ref.value)[i];
      (*ref.value)[i] = saved + h;
      const double lp = loss_at();
      (*ref.value)[i] = saved - h;
      const double lm = loss_at();
      (*ref.value)[i] = saved;
      const double numeric = (lp - lm) / (2.0 * h);
      const double analytic = (*ref.grad)[i];
      const double diff = std::abs(analytic - numeric);
      const double rel =
          diff <= 1e-9 ? 0.0 : diff / std::max(std::abs(analytic), std::abs(numeric));
      max_rel = std::max(max_rel, rel);
    }
  }
  return max_rel;
}

}  // namespace hwnas
