#include "hwnas/model_io.hpp"

#include <bit>
#include <cstring>
#include <filesystem>
#include <fstream>

#include "hwnas/errors.hpp"
#include "hwnas/version.hpp"

static_assert(std::endian::native == std::endian::little,
              "model sidecar files are little-endian; big-endian hosts are unsupported");

namespace hwnas {

namespace {

struct TensorBlob {
  std::string name;
  std::string kind;  // "f32" | "u8"
  std::vector<std::int64_t> shape;
  const void* data;
  std::size_t bytes;
};

void append_tensor(nlohmann::json& list, std::ofstream& bin, std::size_t& offset,
                   const TensorBlob& blob) {
  bin.write(static_cast<const char*>(blob.data), static_cast<std::streamsize>(blob.bytes));
  nlohmann::json rec;
  rec["name"] = blob.name;
  rec["kind"] = blob.kind;
  rec["shape"] = blob.shape;
  rec["offset"] = offset;
  rec["bytes"] = blob.bytes;
  list.push_back(std::move(rec));
  offset += blob.bytes;
}

}  // namespace

void save_model(Mlp<float>& model, const std::string& manifest_path,
                const std::string& weights_path, const nlohmann::json& provenance) {
  std::ofstream bin(weights_path, std::ios::binary | std::ios::trunc);
  if (!bin) throw IoError("cannot write weights file: " + weights_path);

  const bool qat = model.quantization_enabled();
  const int qmax = qat ? (1 << (model.weight_bits() - 1)) - 1 : 0;

  nlohmann::json tensors = nlohmann::json::array();
  nlohmann::json scales = nlohmann::json::object();
  std::size_t offset = 0;

  auto& dense = model.dense_layers();
  std::vector<std::vector<float>> quantized(dense.size());
  for (std::size_t i = 0; i < dense.size(); ++i) {
    auto& d = dense[i];
    const std::string tag = "dense" + std::to_string(i);
    const std::vector<std::int64_t> wshape = {static_cast<std::int64_t>(d.out),
                                              static_cast<std::int64_t>(d.in)};
    const float* wdata = d.w.data();
    if (qat) {
      quantized[i].resize(d.w.size());
      fake_quantize(d.w.data(), quantized[i].data(), d.w.size(), model.weight_bits());
      wdata = quantized[i].data();
      const float amax = kernels::Traits<float>::absmax(d.w.data(), d.w.size());
      scales[tag + ".w"] = amax > 0.0f ? amax / static_cast<float>(qmax) : 0.0f;
    }
    append_tensor(tensors, bin, offset,
                  {tag + ".w", "f32", wshape, wdata, d.w.size() * sizeof(float)});
    append_tensor(tensors, bin, offset,
                  {tag + ".b", "f32", {static_cast<std::int64_t>(d.out)}, d.b.data(),
                   d.b.size() * sizeof(float)});
    append_tensor(tensors, bin, offset,
                  {tag + ".mask", "u8", wshape, d.mask.data(), d.mask.size()});
  }
  auto& bns = model.bn_layers();
  for (std::size_t i = 0; i < bns.size(); ++i) {
    auto& bn = bns[i];
    const std::string tag = "bn" + std::to_string(i);
    const std::vector<std::int64_t> shape = {static_cast<std::int64_t>(bn.dim)};
    append_tensor(tensors, bin, offset,
                  {tag + ".gamma", "f32", shape, bn.gamma.data(), bn.dim * sizeof(float)});
    append_tensor(tensors, bin, offset,
                  {tag + ".beta", "f32", shape, bn.beta.data(), bn.dim * sizeof(float)});
    append_tensor(tensors, bin, offset,
                  {tag + ".running_mean", "f32", shape, bn.running_mean.data(),
                   bn.dim * sizeof(float)});
    append_tensor(tensors, bin, offset,
                  {tag + ".running_var", "f32", shape, bn.running_var.data(),
                   bn.dim * sizeof(float)});
  }
  bin.close();
  if (!bin) throw IoError("failed writing weights file: " + weights_path);

  nlohmann::json manifest;
  manifest["format_version"] = 1;
  manifest["tool_version"] = kToolVersion;
  manifest["network"] = network_to_json(model.net());
  manifest["quantization"] = {{"enabled", qat},
                              {"weight_bits", model.weight_bits()},
                              {"act_bits", model.act_bits()}};
  manifest["weights_file"] = std::filesystem::path(weights_path).filename().string();
  manifest["tensors"] = std::move(tensors);
  if (qat) manifest["quant_scales"] = std::move(scales);
  manifest["provenance"] = provenance;

  std::ofstream out(manifest_path, std::ios::trunc);
  if (!out) throw IoError("cannot write model manifest: " + manifest_path);
  out << manifest.dump(2) << "\n";
  if (!out) throw IoError("failed writing model manifest: " + manifest_path);
}

namespace {

nlohmann::json read_manifest(const std::string& manifest_path) {
  std::ifstream in(manifest_path);
  if (!in) throw IoError("cannot open model manifest: " + manifest_path);
  nlohmann::json doc;
  try {
    in >> doc;
  } catch (const nlohmann::json::exception& e) {
    throw IoError("model manifest " + manifest_path + ": " + e.what());
  }
  return doc;
}

}  // namespace

Mlp<float> load_model(const std::string& manifest_path) {
  const nlohmann::json doc = read_manifest(manifest_path);
  if (!doc.contains("format_version") || doc["format_version"].get<int>() != 1) {
    throw IoError("model manifest " + manifest_path + ": unsupported format_version");
  }
  NetworkDescription net = network_from_json(doc.at("network"));
  Mlp<float> model(net, 0);

  const std::filesystem::path bin_path =
      std::filesystem::path(manifest_path).parent_path() /
      doc.at("weights_file").get<std::string>();
  std::ifstream bin(bin_path, std::ios::binary);
  if (!bin) throw IoError("cannot open weights file: " + bin_path.string());
  std::vector<char> blob((std::istreambuf_iterator<char>(bin)), std::istreambuf_iterator<char>());

  auto read_into = [&](const nlohmann::json& rec, void* dst, std::size_t expected_bytes) {
    const std::size_t offset = rec.at("offset").get<std::size_t>();
    const std::size_t bytes = rec.at("bytes").get<std::size_t>();
    if (bytes != expected_bytes || offset + bytes > blob.size()) {
      throw IoError("weights file " + bin_path.string() + ": tensor '" +
                    rec.at("name").get<std::string>() + "' has unexpected extent");
    }
    std::memcpy(dst, blob.data() + offset, bytes);
  };

  std::size_t dense_idx = 0;
  std::size_t bn_idx = 0;
  for (const nlohmann::json& rec : doc.at("tensors")) {
    const std::string name = rec.at("name").get<std::string>();
    const auto dot = name.find('.');
    const std::string layer = name.substr(0, dot);
    const std::string field = name.substr(dot + 1);
    if (layer.rfind("dense", 0) == 0) {
      dense_idx = std::stoul(layer.substr(5));
      if (dense_idx >= model.dense_layers().size()) {
        throw IoError("model manifest names unknown layer: " + layer);
      }
      auto& d = model.dense_layers()[dense_idx];
      if (field == "w") {
        read_into(rec, d.w.data(), d.w.size() * sizeof(float));
      } else if (field == "b") {
        read_into(rec, d.b.data(), d.b.size() * sizeof(float));
      } else if (field == "mask") {
        read_into(rec, d.mask.data(), d.mask.size());
      } else {
        throw IoError("model manifest names unknown tensor: " + name);
      }
    } else if (layer.rfind("bn", 0) == 0) {
      bn_idx = std::stoul(layer.substr(2));
      if (bn_idx >= model.bn_layers().size()) {
        throw IoError("model manifest names unknown layer: " + layer);
      }
      auto& bn = model.bn_layers()[bn_idx];
      std::vector<float>* dst = nullptr;
      if (field == "gamma") dst = &bn.gamma;
      else if (field == "beta") dst = &bn.beta;
      else if (field == "running_mean") dst = &bn.running_mean;
      else if (field == "running_var") dst = &bn.running_var;
      else throw IoError("model manifest names unknown tensor: " + name);
      read_into(rec, dst->data(), dst->size() * sizeof(float));
    } else {
      throw IoError("model manifest names unknown tensor: " + name);
    }
  }

  const nlohmann::json& quant = doc.at("quantization");
  if (quant.at("enabled").get<bool>()) {
    model.set_quantization(true, quant.at("weight_bits").get<int>(),
                           quant.at("act_bits").get<int>());
  }
  model.apply_masks();
  return model;
}

nlohmann::json read_model_provenance(const std::string& manifest_path) {
  const nlohmann::json doc = read_manifest(manifest_path);
  return doc.contains("provenance") ? doc["provenance"] : nlohmann::json::object();
}

}  // namespace hwnas
