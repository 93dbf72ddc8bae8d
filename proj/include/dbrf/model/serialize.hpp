#pragma once

#include "dbrf/core/checkpoint.hpp"
#include "dbrf/model/dbrf.hpp"

namespace dbrf {

inline nlohmann::json to_json(const ArchConfig& a) {
  return {{"input_dim", a.input_dim}, {"onehot", a.onehot},   {"sensitive_dim", a.sensitive_dim},
          {"z_dim", a.z_dim},         {"b_dim", a.b_dim},     {"hidden", a.hidden},
          {"dropout", a.dropout}};
}

inline ArchConfig arch_from_json(const nlohmann::json& j) {
  ArchConfig a;
  a.input_dim = j.at("input_dim").get<Index>();
  a.onehot = j.value("onehot", std::vector<bool>{});
  a.sensitive_dim = j.at("sensitive_dim").get<Index>();
  a.z_dim = j.at("z_dim").get<Index>();
  a.b_dim = j.at("b_dim").get<Index>();
  a.hidden = j.at("hidden").get<Index>();
  a.dropout = j.at("dropout").get<double>();
  a.validate();
  return a;
}

inline nlohmann::json to_json(const Hyperparams& h) {
  return {{"alpha", h.alpha}, {"gamma", h.gamma}, {"lambda", h.lambda}, {"beta", h.beta}, {"xi", h.xi}};
}

inline Hyperparams hyper_from_json(const nlohmann::json& j, Hyperparams h = {}) {
  h.alpha = j.value("alpha", h.alpha);
  h.gamma = j.value("gamma", h.gamma);
  h.lambda = j.value("lambda", h.lambda);
  h.beta = j.value("beta", h.beta);
  h.xi = j.value("xi", h.xi);
  h.validate();
  return h;
}

inline nlohmann::json model_tensors_to_json(ModelParams& p) {
  nlohmann::json tensors = nlohmann::json::array();
  visit_tensors(p, "", [&](const std::string& name, Index r, Index c, std::span<double> s) {
    tensors.push_back(tensor_to_json(name, r, c, s));
  });
  return tensors;
}

inline void model_tensors_from_json(ModelParams& p, const nlohmann::json& tensors) {
  std::size_t k = 0;
  visit_tensors(p, "", [&](const std::string& name, Index r, Index c, std::span<double> s) {
    if (k >= tensors.size()) throw ConfigError("checkpoint: missing tensor '" + name + "'");
    tensor_from_json(tensors[k++], name, r, c, s);
  });
  if (k != tensors.size()) throw ConfigError("checkpoint: unexpected extra tensors");
}

/// Model manifest: architecture, hyperparameters, parameter count.
inline nlohmann::json model_manifest(ModelParams& p, const Hyperparams& h) {
  return {{"architecture", to_json(p.arch)}, {"hyperparams", to_json(h)}, {"parameter_count", parameter_count(p)}};
}

inline nlohmann::json model_to_json(ModelParams& p, const Hyperparams& h, const nlohmann::json& config = {}) {
  return {{"format", kCheckpointFormat},
          {"version", kCheckpointVersion},
          {"manifest", model_manifest(p, h)},
          {"config", config},
          {"tensors", model_tensors_to_json(p)}};
}

inline ModelParams model_from_json(const nlohmann::json& j) {
  if (j.value("format", std::string()) != kCheckpointFormat) throw ConfigError("not a dbrf checkpoint");
  if (j.value("version", 0) != kCheckpointVersion) throw ConfigError("unsupported checkpoint version");
  ModelParams p = make_model(arch_from_json(j.at("manifest").at("architecture")), 0);
  model_tensors_from_json(p, j.at("tensors"));
  return p;
}

}  // namespace dbrf
