#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "hwnas/rng.hpp"

namespace hwnas {

// Row-major labeled feature matrix. Immutable after construction; shared
// freely across evaluator threads.
struct Dataset {
  std::vector<float> features;  // num_rows x num_features
  std::vector<int> labels;      // each in [0, num_classes)
  std::size_t num_rows = 0;
  std::size_t num_features = 0;
  int num_classes = 0;
  std::vector<std::string> feature_names;
  // Original label values column order was remapped from, sorted ascending.
  std::vector<std::int64_t> class_values;

  const float* row(std::size_t i) const { return features.data() + i * num_features; }
};

// Reads a headered CSV; every non-label column becomes a feature in file
// order. Labels must be (near-)integers and are remapped to 0..C-1 in sorted
// order of the distinct originals. Throws IoError naming the offending line
// and column on malformed input.
Dataset load_csv(const std::string& path, const std::string& label_column);

// Per-feature affine transform x -> (x - mean) / scale.
struct Normalizer {
  std::vector<float> mean;
  std::vector<float> scale;  // strictly positive; constant features get 1
};

// Population statistics of the training split only.
Normalizer fit_normalizer(const Dataset& train);
Dataset apply_normalizer(const Normalizer& norm, const Dataset& ds);

struct SplitFractions {
  double train = 0.6;
  double val = 0.2;
  double test = 0.2;
};

struct Splits {
  Dataset train;
  Dataset val;
  Dataset test;
};

// Stratified split: rows of each class are shuffled with the seeded generator
// and partitioned by cumulative rounding, so a 100-row balanced set at
// (0.8, 0.1, 0.1) lands exactly 80/10/10. Throws ConfigError on bad fractions.
Splits split(const Dataset& ds, const SplitFractions& fractions, std::uint64_t seed);

// Isotropic unit-variance Gaussian blobs, one per class, with centers placed
// pairwise at least `separation` apart. Deterministic given seed.
Dataset synth_blobs(int n_per_class, int dim, int classes, double separation, std::uint64_t seed);

}  // namespace hwnas
