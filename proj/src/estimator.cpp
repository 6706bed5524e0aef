#include "hwnas/estimator.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>

#include "hwnas/errors.hpp"
#include "vendor/json.hpp"

namespace hwnas {

namespace {

constexpr double kBramBlockBits = 36864.0;
constexpr double kOnChipWeightBits = 262144.0;  // 2^18

const DeviceProfile kVu13p{"vu13p", 1728000, 3456000, 12288, 2688, 5.0};

}  // namespace

DeviceProfile device_profile(const std::string& name) {
  if (name == "vu13p") return kVu13p;
  throw ConfigError("unknown device profile: " + name);
}

std::vector<std::string> known_devices() { return {"vu13p"}; }

ResourceEstimate rule_estimate(const NetworkDescription& net, const EstimatorConfig& cfg) {
  ResourceEstimate est;
  if (net.layers.empty()) return est;

  const double reuse = static_cast<double>(cfg.reuse_factor);
  double total_weight_bits = 0.0;
  int stages = 0;
  int dense_count = 0;

  for (const LayerDesc& layer : net.layers) {
    const double bw = static_cast<double>(layer.weight_bits);
    const double ba = static_cast<double>(layer.act_bits);
    const double bmax = std::max(bw, ba);
    switch (layer.kind) {
      case LayerKind::Dense: {
        ++stages;
        ++dense_count;
        const double n = static_cast<double>(layer.in_dim);
        const double m = static_cast<double>(layer.out_dim);
        const double live = m * n * (1.0 - layer.sparsity);
        const double multipliers = std::ceil(live / reuse);
        if (bmax > static_cast<double>(cfg.dsp_bit_threshold)) {
          est.dsp += multipliers;
        } else {
          est.lut += multipliers * bw * ba;
        }
        est.lut += m * (n - 1.0) * bmax / reuse;
        est.ff += m * (bw + ba);
        est.latency_cycles +=
            static_cast<double>(ceil_log2(layer.in_dim)) + 1.0 + (reuse - 1.0);
        total_weight_bits += static_cast<double>(std::llround(live)) * bw;
        break;
      }
      case LayerKind::BatchNorm: {
        ++stages;
        const double d = static_cast<double>(layer.dim);
        if (bmax > static_cast<double>(cfg.dsp_bit_threshold)) {
          est.dsp += d;
        } else {
          est.lut += d * bw * ba;
        }
        est.lut += d * bmax;
        est.latency_cycles += 1.0;
        break;
      }
      case LayerKind::Act: {
        ++stages;
        const double d = static_cast<double>(layer.dim);
        if (layer.activation == Activation::ReLU) {
          est.lut += d * ba;
        } else {
          est.bram += 1024.0 / kBramBlockBits;
          est.lut += 64.0;
        }
        est.latency_cycles += 1.0;
        break;
      }
      case LayerKind::Dropout:
        break;
    }
  }

  est.latency_cycles += static_cast<double>(stages);
  if (cfg.reuse_factor == 1) {
    est.ii_cycles = stages > 0 ? 1.0 : 0.0;
  } else {
    est.ii_cycles = reuse * static_cast<double>(dense_count);
  }
  if (total_weight_bits > kOnChipWeightBits) {
    est.bram += std::ceil(total_weight_bits / kBramBlockBits);
  }
  return est;
}

ResourceEstimate RuleBasedEstimator::estimate(const NetworkDescription& net) const {
  return rule_estimate(net, cfg_);
}

double avg_resource_pct(const ResourceEstimate& est, const DeviceProfile& device) {
  const double pct_bram = 100.0 * est.bram / static_cast<double>(device.bram_capacity);
  const double pct_dsp = 100.0 * est.dsp / static_cast<double>(device.dsp_capacity);
  const double pct_ff = 100.0 * est.ff / static_cast<double>(device.ff_capacity);
  const double pct_lut = 100.0 * est.lut / static_cast<double>(device.lut_capacity);
  return (pct_bram + pct_dsp + pct_ff + pct_lut) / 4.0;
}

double latency_ns(const ResourceEstimate& est, const DeviceProfile& device) {
  return est.latency_cycles * device.clock_period_ns;
}

std::array<double, kSurrogateFeatureCount> surrogate_features(const NetworkDescription& net,
                                                              const EstimatorConfig& cfg) {
  double max_width = 0.0;
  double total_mults = 0.0;
  double max_bits = 0.0;
  for (const LayerDesc& layer : net.layers) {
    max_bits = std::max(max_bits,
                        static_cast<double>(std::max(layer.weight_bits, layer.act_bits)));
    if (layer.kind != LayerKind::Dense) continue;
    max_width = std::max({max_width, static_cast<double>(layer.in_dim),
                          static_cast<double>(layer.out_dim)});
    total_mults += static_cast<double>(std::llround(
        static_cast<double>(layer.out_dim) * static_cast<double>(layer.in_dim) *
        (1.0 - layer.sparsity)));
  }
  return {static_cast<double>(net.layers.size()), static_cast<double>(param_count(net)),
          max_width, total_mults, max_bits, static_cast<double>(cfg.reuse_factor)};
}

ResourceEstimate LinearSurrogateEstimator::estimate(const NetworkDescription& net) const {
  const auto features = surrogate_features(net, cfg_);
  std::array<double, 6> out{};
  for (std::size_t metric = 0; metric < 6; ++metric) {
    double v = coeffs_[metric].intercept;
    for (std::size_t j = 0; j < kSurrogateFeatureCount; ++j) {
      v += coeffs_[metric].weights[j] * features[j];
    }
    out[metric] = std::max(0.0, v);
  }
  return ResourceEstimate{out[0], out[1], out[2], out[3], out[4], out[5]};
}

std::unique_ptr<Estimator> load_linear_surrogate(const std::string& path,
                                                 const EstimatorConfig& cfg) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open surrogate coefficient file: " + path);
  nlohmann::json doc;
  try {
    in >> doc;
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError("surrogate file " + path + ": " + e.what());
  }
  if (!doc.contains("version") || doc["version"].get<int>() != 1) {
    throw ConfigError("surrogate file " + path + ": missing or unsupported 'version'");
  }
  if (!doc.contains("metrics") || !doc["metrics"].is_object()) {
    throw ConfigError("surrogate file " + path + ": missing 'metrics' object");
  }
  static const char* kMetricNames[6] = {"bram", "dsp", "ff", "lut", "ii_cycles",
                                        "latency_cycles"};
  std::array<LinearSurrogateEstimator::Coefficients, 6> coeffs;
  for (std::size_t i = 0; i < 6; ++i) {
    const nlohmann::json& metrics = doc["metrics"];
    if (!metrics.contains(kMetricNames[i])) {
      throw ConfigError("surrogate file " + path + ": missing metric '" +
                        kMetricNames[i] + "'");
    }
    const nlohmann::json& rec = metrics[kMetricNames[i]];
    if (!rec.contains("intercept") || !rec.contains("weights") || !rec["weights"].is_array() ||
        rec["weights"].size() != kSurrogateFeatureCount) {
      throw ConfigError("surrogate file " + path + ": metric '" + kMetricNames[i] +
                        "' needs 'intercept' and " + std::to_string(kSurrogateFeatureCount) +
                        " 'weights'");
    }
    coeffs[i].intercept = rec["intercept"].get<double>();
    for (std::size_t j = 0; j < kSurrogateFeatureCount; ++j) {
      coeffs[i].weights[j] = rec["weights"][j].get<double>();
    }
  }
  return std::make_unique<LinearSurrogateEstimator>(coeffs, cfg);
}

}  // namespace hwnas
