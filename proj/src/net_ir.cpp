#include "hwnas/net_ir.hpp"

#include <cmath>
#include <stdexcept>

#include <json.hpp>

namespace hwnas {

const char* to_string(Activation a) {
  switch (a) {
    case Activation::ReLU:
      return "relu";
    case Activation::Tanh:
      return "tanh";
    case Activation::Sigmoid:
      return "sigmoid";
  }
  return "relu";
}

Activation activation_from_string(const std::string& s) {
  if (s == "relu") return Activation::ReLU;
  if (s == "tanh") return Activation::Tanh;
  if (s == "sigmoid") return Activation::Sigmoid;
  throw std::invalid_argument("unknown activation: " + s);
}

const char* to_string(LayerKind k) {
  switch (k) {
    case LayerKind::Dense:
      return "dense";
    case LayerKind::BatchNorm:
      return "batchnorm";
    case LayerKind::Act:
      return "activation";
    case LayerKind::Dropout:
      return "dropout";
  }
  return "dense";
}

int NetworkDescription::input_dim() const {
  for (const auto& l : layers) {
    if (l.kind == LayerKind::Dense) return l.in_dim;
  }
  return 0;
}

int NetworkDescription::output_dim() const {
  for (auto it = layers.rbegin(); it != layers.rend(); ++it) {
    if (it->kind == LayerKind::Dense) return it->out_dim;
  }
  return 0;
}

std::optional<ShapeError> validate_shapes(const NetworkDescription& net) {
  int cur = -1;  // unknown until the first layer pins it
  for (int i = 0; i < static_cast<int>(net.layers.size()); ++i) {
    const LayerDesc& l = net.layers[i];
    const int expects = (l.kind == LayerKind::Dense) ? l.in_dim : l.dim;
    if (expects <= 0) {
      return ShapeError{i, cur, expects, "layer " + std::to_string(i) + " has non-positive dim"};
    }
    if (cur >= 0 && expects != cur) {
      return ShapeError{i, cur, expects,
                        "layer " + std::to_string(i) + " expects dim " + std::to_string(cur) +
                            " but declares " + std::to_string(expects)};
    }
    cur = (l.kind == LayerKind::Dense) ? l.out_dim : expects;
    if (l.kind == LayerKind::Dense && l.out_dim <= 0) {
      return ShapeError{i, -1, l.out_dim, "dense layer " + std::to_string(i) + " has non-positive out_dim"};
    }
  }
  return std::nullopt;
}

std::int64_t param_count(const NetworkDescription& net) {
  std::int64_t total = 0;
  for (const auto& l : net.layers) {
    if (l.kind == LayerKind::Dense) {
      total += static_cast<std::int64_t>(l.in_dim) * l.out_dim + l.out_dim;
    } else if (l.kind == LayerKind::BatchNorm) {
      total += 2LL * l.dim;
    }
  }
  return total;
}

int ceil_log2(int n) {
  int bits = 0;
  for (int v = n - 1; v > 0; v >>= 1) ++bits;
  return bits;
}

std::int64_t count_bops(const NetworkDescription& net) {
  std::int64_t total = 0;
  for (const auto& l : net.layers) {
    if (l.kind == LayerKind::Dense) {
      const std::int64_t mn = static_cast<std::int64_t>(l.in_dim) * l.out_dim;
      const double mults = (1.0 - l.sparsity) * static_cast<double>(mn) * l.weight_bits * l.act_bits;
      total += std::llround(mults);
      total += mn * (l.weight_bits + l.act_bits + ceil_log2(l.in_dim));
    } else if (l.kind == LayerKind::BatchNorm) {
      total += static_cast<std::int64_t>(l.dim) *
               (static_cast<std::int64_t>(l.weight_bits) * l.act_bits + l.weight_bits + l.act_bits);
    }
  }
  return total;
}

namespace {

nlohmann::json layer_to_json(const LayerDesc& l) {
  nlohmann::json j;
  j["kind"] = to_string(l.kind);
  switch (l.kind) {
    case LayerKind::Dense:
      j["in"] = l.in_dim;
      j["out"] = l.out_dim;
      break;
    case LayerKind::BatchNorm:
      j["dim"] = l.dim;
      break;
    case LayerKind::Act:
      j["dim"] = l.dim;
      j["activation"] = to_string(l.activation);
      break;
    case LayerKind::Dropout:
      j["dim"] = l.dim;
      j["rate"] = l.dropout_rate;
      break;
  }
  j["weight_bits"] = l.weight_bits;
  j["act_bits"] = l.act_bits;
  j["sparsity"] = l.sparsity;
  return j;
}

LayerDesc layer_from_json(const nlohmann::json& j) {
  LayerDesc l;
  const std::string kind = j.at("kind").get<std::string>();
  if (kind == "dense") {
    l = LayerDesc::dense(j.at("in").get<int>(), j.at("out").get<int>());
  } else if (kind == "batchnorm") {
    l = LayerDesc::batchnorm(j.at("dim").get<int>());
  } else if (kind == "activation") {
    l = LayerDesc::act(activation_from_string(j.at("activation").get<std::string>()), j.at("dim").get<int>());
  } else if (kind == "dropout") {
    l = LayerDesc::dropout(j.at("rate").get<double>(), j.at("dim").get<int>());
  } else {
    throw std::invalid_argument("unknown layer kind: " + kind);
  }
  l.weight_bits = j.value("weight_bits", 32);
  l.act_bits = j.value("act_bits", 32);
  l.sparsity = j.value("sparsity", 0.0);
  return l;
}

}  // namespace

std::string network_to_json(const NetworkDescription& net, int indent) {
  nlohmann::json j;
  j["layers"] = nlohmann::json::array();
  for (const auto& l : net.layers) j["layers"].push_back(layer_to_json(l));
  j["training"] = {{"learning_rate", net.training_meta.learning_rate}, {"l1", net.training_meta.l1}};
  return j.dump(indent);
}

NetworkDescription network_from_json(const std::string& json_text) {
  const nlohmann::json j = nlohmann::json::parse(json_text);
  NetworkDescription net;
  for (const auto& lj : j.at("layers")) net.layers.push_back(layer_from_json(lj));
  if (j.contains("training")) {
    net.training_meta.learning_rate = j["training"].value("learning_rate", 1e-3);
    net.training_meta.l1 = j["training"].value("l1", 0.0);
  }
  return net;
}

}  // namespace hwnas
