#pragma once

#include "dbrf/core/common.hpp"

#include <utility>

namespace dbrf {

struct AdamSettings {
  double learning_rate = 1e-3;
  double decay1 = 0.9;
  double decay2 = 0.999;
  double epsilon = 1e-8;
};

/// Per-parameter moments plus hyperparameters. Moments are zero-initialized
/// the first time the state meets a parameter list.
struct OptimizerState {
  std::vector<Vector> first_moment;
  std::vector<Vector> second_moment;
  std::int64_t step_count = 0;
  double learning_rate = 1e-3;
  double decay1 = 0.9;
  double decay2 = 0.999;
  double epsilon = 1e-8;

  OptimizerState() = default;
  explicit OptimizerState(const AdamSettings& s)
      : learning_rate(s.learning_rate), decay1(s.decay1), decay2(s.decay2), epsilon(s.epsilon) {
    require(learning_rate > 0.0, "learning rate must be positive");
    require(decay1 > 0.0 && decay1 < 1.0 && decay2 > 0.0 && decay2 < 1.0, "adam decays must lie in (0, 1)");
    require(epsilon > 0.0, "adam epsilon must be positive");
  }
};

inline void adam_step(const std::vector<std::span<double>>& params, const std::vector<std::span<double>>& grads,
                      OptimizerState& state) {
  require(params.size() == grads.size(), "adam_step: parameter/gradient tensor counts differ");
  if (state.first_moment.empty()) {
    for (const auto& p : params) {
      state.first_moment.push_back(Vector::Zero(static_cast<Index>(p.size())));
      state.second_moment.push_back(Vector::Zero(static_cast<Index>(p.size())));
    }
  }
  require(state.first_moment.size() == params.size(), "adam_step: state was built for a different parameter set");
  ++state.step_count;
  const double t = static_cast<double>(state.step_count);
  const double c1 = 1.0 - std::pow(state.decay1, t);
  const double c2 = 1.0 - std::pow(state.decay2, t);
  for (std::size_t k = 0; k < params.size(); ++k) {
    auto p = params[k];
    auto g = grads[k];
    require(p.size() == g.size() && static_cast<Index>(p.size()) == state.first_moment[k].size(),
            "adam_step: tensor shape mismatch");
    Vector& m = state.first_moment[k];
    Vector& v = state.second_moment[k];
    for (std::size_t i = 0; i < p.size(); ++i) {
      const Index ii = static_cast<Index>(i);
      m[ii] = state.decay1 * m[ii] + (1.0 - state.decay1) * g[i];
      v[ii] = state.decay2 * v[ii] + (1.0 - state.decay2) * g[i] * g[i];
      p[i] -= state.learning_rate * (m[ii] / c1) / (std::sqrt(v[ii] / c2) + state.epsilon);
    }
  }
}

/// Convenience overload for any parameter struct with a `collect_tensors` overload.
template <class Params>
void adam_step(Params& params, Params& grads, OptimizerState& state) {
  std::vector<std::span<double>> p, g;
  collect_tensors(params, p);
  collect_tensors(grads, g);
  adam_step(std::as_const(p), std::as_const(g), state);
}

}  // namespace dbrf
