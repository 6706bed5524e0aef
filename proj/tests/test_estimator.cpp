#include <cstdio>
#include <filesystem>
#include <fstream>

#include "hwnas/errors.hpp"
#include "hwnas/estimator.hpp"
#include "hwnas/rng.hpp"
#include "vendor/doctest.h"

using namespace hwnas;

namespace {

NetworkDescription single(LayerDesc layer) {
  NetworkDescription net;
  net.layers.push_back(layer);
  return net;
}

LayerDesc dense_bits(int in, int out, int bits, double sparsity = 0.0) {
  LayerDesc d = LayerDesc::dense(in, out);
  d.weight_bits = bits;
  d.act_bits = bits;
  d.sparsity = sparsity;
  return d;
}

NetworkDescription random_net(Rng& rng, int bits) {
  const int widths[] = {8, 16, 24, 32, 48, 64};
  NetworkDescription net;
  int in = widths[rng.uniform_index(6)];
  const int n_hidden = 1 + static_cast<int>(rng.uniform_index(3));
  for (int i = 0; i < n_hidden; ++i) {
    const int out = widths[rng.uniform_index(6)];
    net.layers.push_back(dense_bits(in, out, bits, 0.25 * rng.uniform()));
    if (rng.bernoulli(0.5)) {
      LayerDesc bn = LayerDesc::batchnorm(out);
      bn.weight_bits = bits;
      bn.act_bits = bits;
      net.layers.push_back(bn);
    }
    LayerDesc a = LayerDesc::act(
        std::array{Activation::ReLU, Activation::Tanh, Activation::Sigmoid}[rng.uniform_index(3)],
        out);
    a.act_bits = bits;
    net.layers.push_back(a);
    in = out;
  }
  net.layers.push_back(dense_bits(in, 5, bits));
  return net;
}

}  // namespace

TEST_CASE("rule estimate for a wide-precision dense layer") {
  // [DERIVED] Dense(16,64) at 32 bits, reuse 1: 1024 multipliers land on
  // DSPs (32 > threshold 10), adder tree 64*15*32 LUTs, 64*64 FFs,
  // ceil_log2(16)+1 pipeline cycles plus one interface register.
  EstimatorConfig cfg;
  const ResourceEstimate est = rule_estimate(single(dense_bits(16, 64, 32)), cfg);
  CHECK(est.dsp == 1024.0);
  CHECK(est.lut == 30720.0);
  CHECK(est.ff == 4096.0);
  CHECK(est.latency_cycles == 6.0);
  CHECK(est.ii_cycles == 1.0);
  CHECK(est.bram == 0.0);
}

TEST_CASE("narrow multipliers become LUTs and DSPs drop to zero") {
  // [DERIVED] 8 bits <= threshold: 1024 mults * 64 LUTs each + 7680 adder
  EstimatorConfig cfg;
  const ResourceEstimate est = rule_estimate(single(dense_bits(16, 64, 8)), cfg);
  CHECK(est.dsp == 0.0);
  CHECK(est.lut == 1024.0 * 64.0 + 64.0 * 15.0 * 8.0);
  CHECK(est.ff == 64.0 * 16.0);
}

TEST_CASE("sparsity removes multipliers but not the adder tree") {
  EstimatorConfig cfg;
  const ResourceEstimate dense = rule_estimate(single(dense_bits(16, 64, 32)), cfg);
  const ResourceEstimate half = rule_estimate(single(dense_bits(16, 64, 32, 0.5)), cfg);
  CHECK(half.dsp == 512.0);
  CHECK(half.lut == dense.lut);
  CHECK(half.ff == dense.ff);
  CHECK(half.latency_cycles == dense.latency_cycles);
}

TEST_CASE("reuse trades multipliers for cycles") {
  EstimatorConfig cfg;
  cfg.reuse_factor = 4;
  const ResourceEstimate est = rule_estimate(single(dense_bits(16, 64, 32)), cfg);
  CHECK(est.dsp == 256.0);  // ceil(1024/4)
  CHECK(est.lut == 30720.0 / 4.0);
  CHECK(est.ff == 4096.0);  // registers are not shared
  CHECK(est.latency_cycles == 4.0 + 1.0 + 3.0 + 1.0);
  CHECK(est.ii_cycles == 4.0);  // reuse * dense count
}

TEST_CASE("batchnorm and activation stage costs") {
  EstimatorConfig cfg;
  LayerDesc bn = LayerDesc::batchnorm(10);
  ResourceEstimate est = rule_estimate(single(bn), cfg);
  CHECK(est.dsp == 10.0);  // 32-bit multiplies
  CHECK(est.lut == 10.0 * 32.0);
  CHECK(est.latency_cycles == 2.0);

  bn.weight_bits = 8;
  bn.act_bits = 8;
  est = rule_estimate(single(bn), cfg);
  CHECK(est.dsp == 0.0);
  CHECK(est.lut == 10.0 * 64.0 + 10.0 * 8.0);

  LayerDesc relu = LayerDesc::act(Activation::ReLU, 12);
  relu.act_bits = 8;
  est = rule_estimate(single(relu), cfg);
  CHECK(est.lut == 96.0);
  CHECK(est.bram == 0.0);
  CHECK(est.latency_cycles == 2.0);

  for (Activation a : {Activation::Tanh, Activation::Sigmoid}) {
    est = rule_estimate(single(LayerDesc::act(a, 12)), cfg);
    CHECK(est.lut == 64.0);
    CHECK(est.bram == doctest::Approx(1024.0 / 36864.0));
  }
}

TEST_CASE("dropout and empty networks cost nothing") {
  EstimatorConfig cfg;
  const ResourceEstimate empty = rule_estimate(NetworkDescription{}, cfg);
  CHECK(empty.lut == 0.0);
  CHECK(empty.latency_cycles == 0.0);
  CHECK(empty.ii_cycles == 0.0);

  const ResourceEstimate drop = rule_estimate(single(LayerDesc::dropout(0.1, 16)), cfg);
  CHECK(drop.lut == 0.0);
  CHECK(drop.latency_cycles == 0.0);
  CHECK(drop.ii_cycles == 0.0);  // no pipeline stages at all
}

TEST_CASE("weight storage spills to BRAM past the on-chip budget") {
  EstimatorConfig cfg;
  // [DERIVED] 128*64*32 = 262144 bits sits exactly at the budget: no spill
  CHECK(rule_estimate(single(dense_bits(128, 64, 32)), cfg).bram == 0.0);
  // 65*128*32 = 266240 bits -> ceil(266240/36864) = 8 blocks
  CHECK(rule_estimate(single(dense_bits(65, 128, 32)), cfg).bram == 8.0);
}

TEST_CASE("layer costs add up across a small network") {
  // [DERIVED] Dense(16,32) + ReLU + Dense(32,5), all 32-bit
  NetworkDescription net;
  net.layers.push_back(dense_bits(16, 32, 32));
  net.layers.push_back(LayerDesc::act(Activation::ReLU, 32));
  net.layers.push_back(dense_bits(32, 5, 32));
  EstimatorConfig cfg;
  const ResourceEstimate est = rule_estimate(net, cfg);
  CHECK(est.dsp == 512.0 + 160.0);
  CHECK(est.lut == 32.0 * 15.0 * 32.0 + 32.0 * 32.0 + 5.0 * 31.0 * 32.0);
  CHECK(est.ff == 32.0 * 64.0 + 5.0 * 64.0);
  CHECK(est.latency_cycles == 5.0 + 1.0 + 6.0 + 3.0);
  CHECK(est.ii_cycles == 1.0);
}

TEST_CASE("estimator monotonicity properties") {
  Rng rng(0xe571);
  EstimatorConfig cfg;
  for (int trial = 0; trial < 50; ++trial) {
    NetworkDescription net = random_net(rng, rng.bernoulli(0.5) ? 32 : 8);

    // doubling one dense output width never lowers LUTs or latency
    std::vector<std::size_t> dense_idx;
    for (std::size_t i = 0; i < net.layers.size(); ++i) {
      if (net.layers[i].kind == LayerKind::Dense) dense_idx.push_back(i);
    }
    NetworkDescription wider = net;
    wider.layers[dense_idx[rng.uniform_index(dense_idx.size())]].out_dim *= 2;
    const ResourceEstimate base = rule_estimate(net, cfg);
    const ResourceEstimate wide = rule_estimate(wider, cfg);
    CHECK(wide.lut >= base.lut);
    CHECK(wide.latency_cycles >= base.latency_cycles);

    // time-multiplexing never adds multipliers
    EstimatorConfig reuse4 = cfg;
    reuse4.reuse_factor = 4;
    const ResourceEstimate shared = rule_estimate(net, reuse4);
    CHECK(shared.dsp <= base.dsp);

    // everything at 8 bits stays under the DSP threshold
    const ResourceEstimate narrow = rule_estimate(random_net(rng, 8), cfg);
    CHECK(narrow.dsp == 0.0);
  }
}

TEST_CASE("device profiles and utilization math") {
  const DeviceProfile dev = device_profile("vu13p");
  CHECK(dev.lut_capacity == 1728000);
  CHECK(dev.ff_capacity == 3456000);
  CHECK(dev.dsp_capacity == 12288);
  CHECK(dev.bram_capacity == 2688);
  CHECK(dev.clock_period_ns == 5.0);
  CHECK_THROWS_AS(device_profile("zu3eg"), ConfigError);
  CHECK(known_devices() == std::vector<std::string>{"vu13p"});

  ResourceEstimate est;
  est.bram = 4;
  est.dsp = 262;
  est.ff = 25714;
  est.lut = 155080;
  est.latency_cycles = 21;
  const double avg = avg_resource_pct(est, dev);
  // [DERIVED] mean of 0.14881, 2.13216, 0.74404, 8.97454
  CHECK(avg == doctest::Approx(2.99989).epsilon(1e-4));
  CHECK(latency_ns(est, dev) == 105.0);
}

TEST_CASE("surrogate features summarize the network") {
  NetworkDescription net;
  net.layers.push_back(dense_bits(16, 32, 32, 0.5));
  net.layers.push_back(LayerDesc::act(Activation::ReLU, 32));
  net.layers.push_back(dense_bits(32, 5, 8));
  EstimatorConfig cfg;
  cfg.reuse_factor = 3;
  const auto f = surrogate_features(net, cfg);
  CHECK(f[0] == 3.0);                                // layer count
  CHECK(f[1] == double(16 * 32 + 32 + 32 * 5 + 5));  // params
  CHECK(f[2] == 32.0);                               // max dense width
  CHECK(f[3] == 256.0 + 160.0);                      // live multiplies
  CHECK(f[4] == 32.0);                               // max bit width
  CHECK(f[5] == 3.0);                                // reuse factor
}

TEST_CASE("linear surrogate reproduces its coefficient file") {
  namespace fs = std::filesystem;
  const fs::path dir = fs::temp_directory_path() / "hwnas_test_surrogate";
  fs::create_directories(dir);
  const fs::path path = dir / "coeffs.json";

  // truth model: each metric = intercept + w . features, exactly linear
  const char* metric_names[6] = {"bram", "dsp", "ff", "lut", "ii_cycles", "latency_cycles"};
  Rng rng(0x5a11);
  double intercepts[6];
  double weights[6][kSurrogateFeatureCount];
  {
    std::ofstream out(path);
    out.precision(17);
    out << "{\"version\":1,\"metrics\":{";
    for (int m = 0; m < 6; ++m) {
      intercepts[m] = rng.uniform() * 10.0;
      out << (m ? "," : "") << "\"" << metric_names[m] << "\":{\"intercept\":" << intercepts[m]
          << ",\"weights\":[";
      for (std::size_t j = 0; j < kSurrogateFeatureCount; ++j) {
        weights[m][j] = rng.uniform() * 2.0 - 0.5;
        out << (j ? "," : "") << weights[m][j];
      }
      out << "]}";
    }
    out << "}}";
  }

  EstimatorConfig cfg;
  cfg.reuse_factor = 2;
  const auto estimator = load_linear_surrogate(path.string(), cfg);
  CHECK(estimator->kind() == "linear");
  for (int trial = 0; trial < 20; ++trial) {
    const NetworkDescription net = random_net(rng, 32);
    const auto f = surrogate_features(net, cfg);
    const ResourceEstimate est = estimator->estimate(net);
    const double* got[6] = {&est.bram, &est.dsp,       &est.ff,
                            &est.lut,  &est.ii_cycles, &est.latency_cycles};
    for (int m = 0; m < 6; ++m) {
      double want = intercepts[m];
      for (std::size_t j = 0; j < kSurrogateFeatureCount; ++j) want += weights[m][j] * f[j];
      CHECK(*got[m] == doctest::Approx(std::max(0.0, want)).epsilon(1e-9));
    }
  }
  fs::remove_all(dir);
}

TEST_CASE("surrogate file validation") {
  namespace fs = std::filesystem;
  const fs::path dir = fs::temp_directory_path() / "hwnas_test_surrogate_bad";
  fs::create_directories(dir);
  EstimatorConfig cfg;

  CHECK_THROWS_AS(load_linear_surrogate((dir / "missing.json").string(), cfg), IoError);

  const auto write = [&](const char* name, const std::string& body) {
    const fs::path p = dir / name;
    std::ofstream(p) << body;
    return p.string();
  };
  CHECK_THROWS_AS(load_linear_surrogate(write("v2.json", "{\"version\":2,\"metrics\":{}}"), cfg),
                  ConfigError);
  CHECK_THROWS_AS(
      load_linear_surrogate(
          write("partial.json",
                "{\"version\":1,\"metrics\":{\"lut\":{\"intercept\":0,\"weights\":[0,0,0,0,0,0]}}}"),
          cfg),
      ConfigError);
  CHECK_THROWS_AS(load_linear_surrogate(write("garbage.json", "not json"), cfg), ConfigError);
  fs::remove_all(dir);
}
