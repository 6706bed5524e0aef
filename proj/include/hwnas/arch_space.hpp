#pragma once

#include <array>
#include <cstdint>
#include <string>
#include <vector>

#include "hwnas/net_ir.hpp"
#include "hwnas/rng.hpp"

namespace hwnas {

inline constexpr int kMaxHiddenLayers = 8;
// Gene order: num_layers, widths[0..7], activation, batchnorm, lr, l1, dropout.
inline constexpr int kGeneCount = 14;

// Categorical MLP search space. Construct via table_defaults() or the config
// loader; validate() throws on malformed choice lists.
struct SearchSpaceConfig {
  std::vector<int> num_layers_choices;
  std::array<std::vector<int>, kMaxHiddenLayers> width_choices;
  std::vector<Activation> activation_choices;
  std::vector<bool> batchnorm_choices;
  std::vector<double> lr_choices;
  std::vector<double> l1_choices;
  std::vector<double> dropout_choices;
  int input_dim = 0;
  int num_classes = 0;

  // The stock MLP space: layers {4..8}; per-position width sets
  // {64,120,128} {32,60,64} {16,32} {32,64} {32,64} {32,64} {16,32}
  // {32,44,64}; all three activations; batchnorm on/off;
  // lr {0.001,0.0015,0.002}; l1 {0,1e-6,1e-5,1e-4}; dropout {0,0.05,0.1}.
  static SearchSpaceConfig table_defaults(int input_dim, int num_classes);

  void validate() const;  // throws std::invalid_argument

  double default_mutation_rate() const { return 1.0 / kGeneCount; }
};

// Fixed-length categorical genome. Width positions beyond num_layers are
// inert for decoding but always populated so variation operators stay
// shape-free.
struct ArchitectureGenome {
  int num_layers = 0;
  std::array<int, kMaxHiddenLayers> widths{};
  Activation activation = Activation::ReLU;
  bool use_batchnorm = false;
  double learning_rate = 1e-3;
  double l1 = 0.0;
  double dropout = 0.0;

  bool operator==(const ArchitectureGenome&) const = default;
};

// Uniform draw of every gene. Deterministic given the rng state.
ArchitectureGenome sample(const SearchSpaceConfig& space, Rng& rng);

// Each gene independently resampled from its choice list with probability
// per_gene_rate (a resample may redraw the current value).
ArchitectureGenome mutate(const ArchitectureGenome& g, const SearchSpaceConfig& space,
                          double per_gene_rate, Rng& rng);

// Uniform per-gene exchange; the two children carry complementary picks.
std::pair<ArchitectureGenome, ArchitectureGenome> crossover(const ArchitectureGenome& a,
                                                            const ArchitectureGenome& b, Rng& rng);

// True iff every gene value is a member of its choice list.
bool genome_in_space(const ArchitectureGenome& g, const SearchSpaceConfig& space);

// input(input_dim) -> [Dense -> BatchNorm? -> Act -> Dropout?] x num_layers
// -> Dense(num_classes), logits out. Throws std::invalid_argument if the
// genome's used genes are malformed.
NetworkDescription decode(const ArchitectureGenome& g, const SearchSpaceConfig& space);

// Canonical text key, injective over genomes (inert width positions
// included). Used for dedup and trial caching.
std::string genome_key(const ArchitectureGenome& g);

std::string genome_to_json(const ArchitectureGenome& g);
ArchitectureGenome genome_from_json(const std::string& json_text);

}  // namespace hwnas
