#pragma once

#include <array>
#include <memory>
#include <string>

#include "hwnas/net_ir.hpp"

namespace hwnas {

// Predicted FPGA cost of one network. Counts stay fractional; rounding is a
// report-time concern.
struct ResourceEstimate {
  double bram = 0.0;  // 36Kb blocks
  double dsp = 0.0;
  double ff = 0.0;
  double lut = 0.0;
  double ii_cycles = 0.0;
  double latency_cycles = 0.0;
};

struct DeviceProfile {
  std::string name;
  std::int64_t lut_capacity = 0;
  std::int64_t ff_capacity = 0;
  std::int64_t dsp_capacity = 0;
  std::int64_t bram_capacity = 0;
  double clock_period_ns = 0.0;
};

// Built-in profiles ("vu13p"). Throws ConfigError for unknown names.
DeviceProfile device_profile(const std::string& name);
std::vector<std::string> known_devices();

enum class HlsStrategy { kLatency, kResource };

struct EstimatorConfig {
  int reuse_factor = 1;
  HlsStrategy strategy = HlsStrategy::kLatency;
  int dsp_bit_threshold = 10;
};

class Estimator {
 public:
  virtual ~Estimator() = default;
  virtual ResourceEstimate estimate(const NetworkDescription& net) const = 0;
  virtual std::string kind() const = 0;
};

// Deterministic rule set over the layer list:
//  Dense(n,m,b_w,b_a,s): ceil(m*n*(1-s)/reuse) multipliers, counted as DSPs
//    when max(b_w,b_a) > dsp_bit_threshold and as b_w*b_a LUTs each
//    otherwise; adder tree m*(n-1)*max(b_w,b_a)/reuse LUTs; pipeline
//    registers m*(b_w+b_a) FFs; ceil(log2 n) + 1 + (reuse-1) cycles.
//  BatchNorm(d): d multipliers (same DSP/LUT rule) + d*max(b_w,b_a) adder
//    LUTs; 1 cycle.
//  ReLU: d*b_a LUTs, 1 cycle. Tanh/Sigmoid: a 1024-bit table (partial BRAM
//    block) + 64 LUTs, 1 cycle. Dropout vanishes at inference.
//  latency_cycles adds one interface register per surviving layer;
//  ii_cycles = 1 fully pipelined (reuse 1), else reuse * dense-layer count;
//  weight storage above 2^18 bits spills to BRAM at 36,864 bits per block.
class RuleBasedEstimator : public Estimator {
 public:
  explicit RuleBasedEstimator(EstimatorConfig cfg) : cfg_(cfg) {}
  ResourceEstimate estimate(const NetworkDescription& net) const override;
  std::string kind() const override { return "rule"; }
  const EstimatorConfig& config() const { return cfg_; }

 private:
  EstimatorConfig cfg_;
};

ResourceEstimate rule_estimate(const NetworkDescription& net, const EstimatorConfig& cfg);

// Mean of the four utilization percentages.
double avg_resource_pct(const ResourceEstimate& est, const DeviceProfile& device);
double latency_ns(const ResourceEstimate& est, const DeviceProfile& device);

// Feature vector for fitted linear surrogates: layer count, total params,
// max dense width, total multiplication count, max bit width, reuse factor.
inline constexpr std::size_t kSurrogateFeatureCount = 6;
std::array<double, kSurrogateFeatureCount> surrogate_features(const NetworkDescription& net,
                                                              const EstimatorConfig& cfg);

// Per-metric intercept + feature weights, clamped at zero. File format:
// {"version":1, "metrics":{"lut":{"intercept":r,"weights":[6 reals]}, ...}}
// with all six metric records required.
class LinearSurrogateEstimator : public Estimator {
 public:
  struct Coefficients {
    double intercept = 0.0;
    std::array<double, kSurrogateFeatureCount> weights{};
  };

  LinearSurrogateEstimator(std::array<Coefficients, 6> metric_coeffs, EstimatorConfig cfg)
      : coeffs_(metric_coeffs), cfg_(cfg) {}
  ResourceEstimate estimate(const NetworkDescription& net) const override;
  std::string kind() const override { return "linear"; }

 private:
  std::array<Coefficients, 6> coeffs_;  // bram, dsp, ff, lut, ii, latency
  EstimatorConfig cfg_;
};

// Throws IoError / ConfigError on unreadable or malformed coefficient files.
std::unique_ptr<Estimator> load_linear_surrogate(const std::string& path,
                                                 const EstimatorConfig& cfg);

}  // namespace hwnas
