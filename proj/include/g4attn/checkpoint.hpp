#pragma once

#include <fstream>
#include <string>

#include <json.hpp>

#include "g4attn/common.hpp"
#include "g4attn/model.hpp"

namespace g4attn {

inline constexpr const char* kCheckpointFormat = "g4attn-checkpoint";
inline constexpr int kCheckpointVersion = 1;

// Self-describing JSON checkpoint: hyperparameters plus every parameter
// tensor under its traversal name. Double round-tripping is exact, so
// save/load is bit-faithful.
inline nlohmann::json checkpoint_to_json(const ModelParams& params) {
  nlohmann::json j;
  j["format"] = kCheckpointFormat;
  j["version"] = kCheckpointVersion;
  j["hyper"] = {{"variant", variant_name(params.hyper.variant)},
                {"input_length", params.hyper.input_length},
                {"kernel_size", params.hyper.kernel_size},
                {"num_kernels", params.hyper.num_kernels},
                {"lstm_units", params.hyper.lstm_units},
                {"hidden_units", params.hyper.hidden_units}};
  nlohmann::json tensors = nlohmann::json::object();
  for_each_tensor(const_cast<ModelParams&>(params), [&](std::string_view name, Tensor& t) {
    tensors[std::string(name)] = {{"shape", t.shape}, {"data", t.data}};
  });
  j["tensors"] = std::move(tensors);
  return j;
}

inline void save_checkpoint(const ModelParams& params, const std::string& path) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw DataError("cannot write checkpoint: " + path);
  out << checkpoint_to_json(params).dump() << '\n';
  if (!out) throw DataError("checkpoint write failed: " + path);
}

inline ModelParams load_checkpoint(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("cannot open checkpoint: " + path);
  nlohmann::json j;
  try {
    in >> j;
  } catch (const nlohmann::json::exception& e) {
    throw ParseError("checkpoint " + path + ": " + e.what());
  }
  if (!j.contains("format") || j["format"] != kCheckpointFormat)
    throw ParseError("checkpoint " + path + ": missing or wrong format tag");
  if (!j.contains("version") || j["version"].get<int>() != kCheckpointVersion)
    throw ParseError("checkpoint " + path + ": unsupported version");

  ModelHyper hyper;
  try {
    const auto& h = j.at("hyper");
    hyper.variant = variant_from_name(h.at("variant").get<std::string>());
    hyper.input_length = h.at("input_length").get<int>();
    hyper.kernel_size = h.at("kernel_size").get<int>();
    hyper.num_kernels = h.at("num_kernels").get<int>();
    hyper.lstm_units = h.at("lstm_units").get<int>();
    hyper.hidden_units = h.at("hidden_units").get<int>();
  } catch (const nlohmann::json::exception& e) {
    throw ParseError("checkpoint " + path + ": bad hyper block: " + e.what());
  }
  hyper.validate();

  ModelParams params = make_zero_params(hyper);
  const auto& tensors = j.at("tensors");
  for_each_tensor(params, [&](std::string_view name, Tensor& t) {
    const std::string key(name);
    if (!tensors.contains(key))
      throw ParseError("checkpoint " + path + ": missing tensor " + key);
    const auto& entry = tensors.at(key);
    const auto shape = entry.at("shape").get<std::vector<size_t>>();
    if (shape != t.shape)
      throw ParseError("checkpoint " + path + ": tensor " + key + " has unexpected shape");
    const auto data = entry.at("data").get<std::vector<double>>();
    if (data.size() != t.numel())
      throw ParseError("checkpoint " + path + ": tensor " + key + " has unexpected size");
    t.data = data;
  });
  return params;
}

}  // namespace g4attn
