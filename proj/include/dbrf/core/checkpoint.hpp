#pragma once

#include "dbrf/core/adam.hpp"

#include <nlohmann/json.hpp>

#include <fstream>
#include <functional>
#include <sstream>

namespace dbrf {

inline constexpr const char* kCheckpointFormat = "dbrf-checkpoint";
inline constexpr int kCheckpointVersion = 1;

// Doubles are written by nlohmann::json in shortest round-trip form, so
// values reload bit-identically.
inline nlohmann::json tensor_to_json(const std::string& name, Index rows, Index cols, std::span<const double> data) {
  return {{"name", name}, {"rows", rows}, {"cols", cols}, {"data", std::vector<double>(data.begin(), data.end())}};
}

inline void tensor_from_json(const nlohmann::json& j, const std::string& expected_name, Index rows, Index cols,
                             std::span<double> out) {
  const auto name = j.at("name").get<std::string>();
  if (name != expected_name) throw ConfigError("checkpoint: expected tensor '" + expected_name + "', found '" + name + "'");
  if (j.at("rows").get<Index>() != rows || j.at("cols").get<Index>() != cols)
    throw ConfigError("checkpoint: tensor '" + name + "' has the wrong shape");
  const auto& data = j.at("data");
  if (data.size() != out.size()) throw ConfigError("checkpoint: tensor '" + name + "' has the wrong length");
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = data[i].get<double>();
}

inline nlohmann::json optimizer_to_json(const OptimizerState& s) {
  nlohmann::json m = nlohmann::json::array(), v = nlohmann::json::array();
  for (const auto& x : s.first_moment) m.push_back(std::vector<double>(x.data(), x.data() + x.size()));
  for (const auto& x : s.second_moment) v.push_back(std::vector<double>(x.data(), x.data() + x.size()));
  return {{"first_moment", m},       {"second_moment", v}, {"step_count", s.step_count},
          {"learning_rate", s.learning_rate}, {"decay1", s.decay1},       {"decay2", s.decay2},
          {"epsilon", s.epsilon}};
}

inline OptimizerState optimizer_from_json(const nlohmann::json& j) {
  OptimizerState s;
  s.step_count = j.at("step_count").get<std::int64_t>();
  s.learning_rate = j.at("learning_rate").get<double>();
  s.decay1 = j.at("decay1").get<double>();
  s.decay2 = j.at("decay2").get<double>();
  s.epsilon = j.at("epsilon").get<double>();
  for (const auto& m : j.at("first_moment")) {
    auto v = m.get<std::vector<double>>();
    s.first_moment.push_back(Eigen::Map<Vector>(v.data(), static_cast<Index>(v.size())));
  }
  for (const auto& m : j.at("second_moment")) {
    auto v = m.get<std::vector<double>>();
    s.second_moment.push_back(Eigen::Map<Vector>(v.data(), static_cast<Index>(v.size())));
  }
  return s;
}

inline void write_json_file(const nlohmann::json& j, const std::string& path) {
  std::ofstream os(path);
  if (!os) throw Error("cannot open '" + path + "' for writing");
  os << j.dump(1) << '\n';
}

inline nlohmann::json read_json_file(const std::string& path) {
  std::ifstream is(path);
  if (!is) throw Error("cannot open '" + path + "'");
  try {
    return nlohmann::json::parse(is);
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError("'" + path + "': " + e.what());
  }
}

}  // namespace dbrf
