#include "hamflow/checkpoint.hpp"

#include <fstream>
#include <sstream>

#include "hamflow/errors.hpp"

namespace hamflow {

using nlohmann::json;

json matrix_to_json(const ad::Matrix& m) {
  json data = json::array();
  for (ad::Index r = 0; r < m.rows(); ++r) {
    for (ad::Index c = 0; c < m.cols(); ++c) data.push_back(m(r, c));
  }
  return json{{"rows", m.rows()}, {"cols", m.cols()}, {"data", std::move(data)}};
}

ad::Matrix matrix_from_json(const json& j) {
  const auto rows = j.at("rows").get<ad::Index>();
  const auto cols = j.at("cols").get<ad::Index>();
  const auto& data = j.at("data");
  if (rows < 0 || cols < 0 || data.size() != static_cast<std::size_t>(rows * cols)) {
    throw ConfigError("checkpoint: matrix payload does not match its shape");
  }
  ad::Matrix m(rows, cols);
  std::size_t k = 0;
  for (ad::Index r = 0; r < rows; ++r) {
    for (ad::Index c = 0; c < cols; ++c) m(r, c) = data[k++].get<double>();
  }
  return m;
}

Checkpoint Checkpoint::capture(std::span<ad::Parameter* const> params, const AdamState& adam,
                               const std::mt19937_64& rng, int epoch, json config) {
  Checkpoint c;
  c.epoch = epoch;
  c.config = std::move(config);
  for (const ad::Parameter* p : params) {
    c.names.push_back(p->name);
    c.values.push_back(p->value);
  }
  std::ostringstream os;
  os << rng;
  c.rng_state = os.str();
  c.adam = adam;
  return c;
}

void Checkpoint::apply(std::span<ad::Parameter* const> params, AdamState* adam_out, std::mt19937_64* rng) const {
  if (params.size() != values.size()) {
    throw ConfigError("checkpoint holds " + std::to_string(values.size()) + " parameters, model has " +
                      std::to_string(params.size()));
  }
  for (std::size_t i = 0; i < params.size(); ++i) {
    if (params[i]->name != names[i] || params[i]->value.rows() != values[i].rows() ||
        params[i]->value.cols() != values[i].cols()) {
      throw ConfigError("checkpoint parameter '" + names[i] + "' does not match model parameter '" +
                        params[i]->name + "'");
    }
  }
  for (std::size_t i = 0; i < params.size(); ++i) params[i]->value = values[i];
  if (adam_out != nullptr) *adam_out = adam;
  if (rng != nullptr && !rng_state.empty()) {
    std::istringstream is(rng_state);
    is >> *rng;
    if (!is) throw ConfigError("checkpoint: malformed RNG state");
  }
}

void Checkpoint::write(const std::string& path) const {
  json params = json::array();
  for (std::size_t i = 0; i < values.size(); ++i) {
    params.push_back({{"name", names[i]}, {"value", matrix_to_json(values[i])}});
  }
  json m1 = json::array();
  json m2 = json::array();
  for (const auto& m : adam.first_moment) m1.push_back(matrix_to_json(m));
  for (const auto& m : adam.second_moment) m2.push_back(matrix_to_json(m));
  json j{{"version", kVersion},
         {"epoch", epoch},
         {"config", config},
         {"parameters", std::move(params)},
         {"rng_state", rng_state},
         {"adam",
          {{"learning_rate", adam.options.learning_rate},
           {"beta1", adam.options.beta1},
           {"beta2", adam.options.beta2},
           {"epsilon", adam.options.epsilon},
           {"step_count", adam.step_count},
           {"first_moment", std::move(m1)},
           {"second_moment", std::move(m2)}}}};
  std::ofstream os(path);
  if (!os) throw std::runtime_error("cannot open '" + path + "' for writing");
  os << j.dump(1) << '\n';
}

Checkpoint Checkpoint::read(const std::string& path) {
  std::ifstream is(path);
  if (!is) throw ConfigError("cannot open checkpoint '" + path + "'");
  json j;
  try {
    is >> j;
    if (j.at("version").get<int>() != kVersion) throw ConfigError(path + ": unsupported checkpoint version");
    Checkpoint c;
    c.epoch = j.at("epoch").get<int>();
    c.config = j.at("config");
    for (const auto& p : j.at("parameters")) {
      c.names.push_back(p.at("name").get<std::string>());
      c.values.push_back(matrix_from_json(p.at("value")));
    }
    c.rng_state = j.at("rng_state").get<std::string>();
    const auto& a = j.at("adam");
    c.adam.options.learning_rate = a.at("learning_rate").get<double>();
    c.adam.options.beta1 = a.at("beta1").get<double>();
    c.adam.options.beta2 = a.at("beta2").get<double>();
    c.adam.options.epsilon = a.at("epsilon").get<double>();
    c.adam.step_count = a.at("step_count").get<std::int64_t>();
    for (const auto& m : a.at("first_moment")) c.adam.first_moment.push_back(matrix_from_json(m));
    for (const auto& m : a.at("second_moment")) c.adam.second_moment.push_back(matrix_from_json(m));
    return c;
  } catch (const json::exception& e) {
    throw ConfigError(path + ": malformed checkpoint (" + e.what() + ")");
  }
}

}  // namespace hamflow
