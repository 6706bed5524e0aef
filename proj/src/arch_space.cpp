#include "hwnas/arch_space.hpp"

#include <algorithm>
#include <stdexcept>

#include <json.hpp>

#include "hwnas/text.hpp"

namespace hwnas {

SearchSpaceConfig SearchSpaceConfig::table_defaults(int input_dim, int num_classes) {
  SearchSpaceConfig s;
  s.num_layers_choices = {4, 5, 6, 7, 8};
  s.width_choices = {{{64, 120, 128},
                      {32, 60, 64},
                      {16, 32},
                      {32, 64},
                      {32, 64},
                      {32, 64},
                      {16, 32},
                      {32, 44, 64}}};
  s.activation_choices = {Activation::ReLU, Activation::Tanh, Activation::Sigmoid};
  s.batchnorm_choices = {true, false};
  s.lr_choices = {0.0010, 0.0015, 0.0020};
  s.l1_choices = {0.0, 1e-6, 1e-5, 1e-4};
  s.dropout_choices = {0.0, 0.05, 0.1};
  s.input_dim = input_dim;
  s.num_classes = num_classes;
  return s;
}

void SearchSpaceConfig::validate() const {
  auto require = [](bool ok, const char* msg) {
    if (!ok) throw std::invalid_argument(msg);
  };
  require(!num_layers_choices.empty(), "num_layers_choices empty");
  for (int n : num_layers_choices) {
    require(n >= 1 && n <= kMaxHiddenLayers, "num_layers choice outside 1..8");
  }
  for (const auto& wc : width_choices) {
    require(!wc.empty(), "width choice list empty");
    for (int w : wc) require(w >= 1, "width < 1");
  }
  require(!activation_choices.empty(), "activation_choices empty");
  require(!batchnorm_choices.empty(), "batchnorm_choices empty");
  require(!lr_choices.empty(), "lr_choices empty");
  for (double v : lr_choices) require(v > 0.0, "learning rate must be positive");
  require(!l1_choices.empty(), "l1_choices empty");
  for (double v : l1_choices) require(v >= 0.0, "l1 must be non-negative");
  require(!dropout_choices.empty(), "dropout_choices empty");
  for (double v : dropout_choices) require(v >= 0.0 && v < 1.0, "dropout must be in [0,1)");
  require(input_dim >= 1, "input_dim must be positive");
  require(num_classes >= 1, "num_classes must be positive");
}

namespace {

template <typename T>
T pick(const std::vector<T>& choices, Rng& rng) {
  return choices[rng.uniform_index(choices.size())];
}

}  // namespace

ArchitectureGenome sample(const SearchSpaceConfig& space, Rng& rng) {
  ArchitectureGenome g;
  g.num_layers = pick(space.num_layers_choices, rng);
  for (int i = 0; i < kMaxHiddenLayers; ++i) g.widths[i] = pick(space.width_choices[i], rng);
  g.activation = pick(space.activation_choices, rng);
  g.use_batchnorm = pick(space.batchnorm_choices, rng);
  g.learning_rate = pick(space.lr_choices, rng);
  g.l1 = pick(space.l1_choices, rng);
  g.dropout = pick(space.dropout_choices, rng);
  return g;
}

ArchitectureGenome mutate(const ArchitectureGenome& g, const SearchSpaceConfig& space,
                          double per_gene_rate, Rng& rng) {
  if (per_gene_rate < 0.0 || per_gene_rate > 1.0) {
    throw std::invalid_argument("per_gene_rate outside [0,1]");
  }
  ArchitectureGenome out = g;
  if (rng.bernoulli(per_gene_rate)) out.num_layers = pick(space.num_layers_choices, rng);
  for (int i = 0; i < kMaxHiddenLayers; ++i) {
    if (rng.bernoulli(per_gene_rate)) out.widths[i] = pick(space.width_choices[i], rng);
  }
  if (rng.bernoulli(per_gene_rate)) out.activation = pick(space.activation_choices, rng);
  if (rng.bernoulli(per_gene_rate)) out.use_batchnorm = pick(space.batchnorm_choices, rng);
  if (rng.bernoulli(per_gene_rate)) out.learning_rate = pick(space.lr_choices, rng);
  if (rng.bernoulli(per_gene_rate)) out.l1 = pick(space.l1_choices, rng);
  if (rng.bernoulli(per_gene_rate)) out.dropout = pick(space.dropout_choices, rng);
  return out;
}

std::pair<ArchitectureGenome, ArchitectureGenome> crossover(const ArchitectureGenome& a,
                                                            const ArchitectureGenome& b, Rng& rng) {
  ArchitectureGenome c = a;
  ArchitectureGenome d = b;
  auto maybe_swap = [&](auto& x, auto& y) {
    if (rng.bernoulli(0.5)) std::swap(x, y);
  };
  maybe_swap(c.num_layers, d.num_layers);
  for (int i = 0; i < kMaxHiddenLayers; ++i) maybe_swap(c.widths[i], d.widths[i]);
  maybe_swap(c.activation, d.activation);
  maybe_swap(c.use_batchnorm, d.use_batchnorm);
  maybe_swap(c.learning_rate, d.learning_rate);
  maybe_swap(c.l1, d.l1);
  maybe_swap(c.dropout, d.dropout);
  return {c, d};
}

namespace {

template <typename T>
bool member(const std::vector<T>& choices, const T& v) {
  return std::find(choices.begin(), choices.end(), v) != choices.end();
}

}  // namespace

bool genome_in_space(const ArchitectureGenome& g, const SearchSpaceConfig& space) {
  if (!member(space.num_layers_choices, g.num_layers)) return false;
  for (int i = 0; i < kMaxHiddenLayers; ++i) {
    if (!member(space.width_choices[i], g.widths[i])) return false;
  }
  if (!member(space.activation_choices, g.activation)) return false;
  if (std::find(space.batchnorm_choices.begin(), space.batchnorm_choices.end(), g.use_batchnorm) ==
      space.batchnorm_choices.end()) {
    return false;
  }
  return member(space.lr_choices, g.learning_rate) && member(space.l1_choices, g.l1) &&
         member(space.dropout_choices, g.dropout);
}

NetworkDescription decode(const ArchitectureGenome& g, const SearchSpaceConfig& space) {
  if (g.num_layers < 1 || g.num_layers > kMaxHiddenLayers) {
    throw std::invalid_argument("genome num_layers outside 1..8");
  }
  for (int i = 0; i < g.num_layers; ++i) {
    if (g.widths[i] < 1) {
      throw std::invalid_argument("genome width at used position " + std::to_string(i) + " missing");
    }
  }
  NetworkDescription net;
  net.training_meta = {g.learning_rate, g.l1};
  int cur = space.input_dim;
  for (int i = 0; i < g.num_layers; ++i) {
    const int w = g.widths[i];
    net.layers.push_back(LayerDesc::dense(cur, w));
    if (g.use_batchnorm) net.layers.push_back(LayerDesc::batchnorm(w));
    net.layers.push_back(LayerDesc::act(g.activation, w));
    if (g.dropout > 0.0) net.layers.push_back(LayerDesc::dropout(g.dropout, w));
    cur = w;
  }
  net.layers.push_back(LayerDesc::dense(cur, space.num_classes));
  return net;
}

std::string genome_key(const ArchitectureGenome& g) {
  std::string key = "L" + std::to_string(g.num_layers) + "|";
  for (int i = 0; i < kMaxHiddenLayers; ++i) {
    if (i) key += '-';
    key += std::to_string(g.widths[i]);
  }
  key += '|';
  key += to_string(g.activation);
  key += g.use_batchnorm ? "|bn1" : "|bn0";
  key += "|lr" + fmt_double(g.learning_rate);
  key += "|l1" + fmt_double(g.l1);
  key += "|do" + fmt_double(g.dropout);
  return key;
}

std::string genome_to_json(const ArchitectureGenome& g) {
  nlohmann::json j;
  j["num_layers"] = g.num_layers;
  j["widths"] = g.widths;
  j["activation"] = to_string(g.activation);
  j["batchnorm"] = g.use_batchnorm;
  j["learning_rate"] = g.learning_rate;
  j["l1"] = g.l1;
  j["dropout"] = g.dropout;
  return j.dump();
}

ArchitectureGenome genome_from_json(const std::string& json_text) {
  const nlohmann::json j = nlohmann::json::parse(json_text);
  ArchitectureGenome g;
  g.num_layers = j.at("num_layers").get<int>();
  const auto& w = j.at("widths");
  if (w.size() != kMaxHiddenLayers) throw std::invalid_argument("genome widths must have 8 entries");
  for (int i = 0; i < kMaxHiddenLayers; ++i) g.widths[i] = w[i].get<int>();
  g.activation = activation_from_string(j.at("activation").get<std::string>());
  g.use_batchnorm = j.at("batchnorm").get<bool>();
  g.learning_rate = j.at("learning_rate").get<double>();
  g.l1 = j.at("l1").get<double>();
  g.dropout = j.at("dropout").get<double>();
  return g;
}

}  // namespace hwnas
