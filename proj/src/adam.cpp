#include "hamflow/adam.hpp"

#include <cmath>

#include "hamflow/errors.hpp"

namespace hamflow {

AdamState::AdamState(std::span<ad::Parameter* const> params, AdamOptions opts) : options(opts) {
  for (const ad::Parameter* p : params) {
    first_moment.push_back(ad::Matrix::Zero(p->value.rows(), p->value.cols()));
    second_moment.push_back(ad::Matrix::Zero(p->value.rows(), p->value.cols()));
  }
}

void adam_step(AdamState& state, std::span<ad::Parameter* const> params) {
  if (params.size() != state.first_moment.size()) {
    throw ConfigError("adam_step: state tracks " + std::to_string(state.first_moment.size()) +
                      " parameters, got " + std::to_string(params.size()));
  }
  for (std::size_t i = 0; i < params.size(); ++i) {
    const ad::Parameter& p = *params[i];
    if (p.grad.rows() != p.value.rows() || p.grad.cols() != p.value.cols() ||
        state.first_moment[i].rows() != p.value.rows() || state.first_moment[i].cols() != p.value.cols()) {
      throw ConfigError("adam_step: shape mismatch for parameter '" + p.name + "'");
    }
  }

  const AdamOptions& o = state.options;
  ++state.step_count;
  const double t = static_cast<double>(state.step_count);
  const double correction1 = 1.0 - std::pow(o.beta1, t);
  const double correction2 = 1.0 - std::pow(o.beta2, t);

  for (std::size_t i = 0; i < params.size(); ++i) {
    ad::Parameter& p = *params[i];
    auto m = state.first_moment[i].array();
    auto v = state.second_moment[i].array();
    m = o.beta1 * m + (1.0 - o.beta1) * p.grad.array();
    v = o.beta2 * v + (1.0 - o.beta2) * p.grad.array().square();
    p.value.array() -= o.learning_rate * (m / correction1) / ((v / correction2).sqrt() + o.epsilon);
  }
}

}  // namespace hamflow
