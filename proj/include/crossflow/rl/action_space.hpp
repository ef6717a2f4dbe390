#pragma once

#include <stdexcept>

#include "crossflow/rng.hpp"
#include "crossflow/sim/phases.hpp"

namespace crossflow::rl {

// Discrete action set. Fixed mode: one action per phase, 10 s greens.
// Variable mode: (phase, interval) pairs with intervals {10, 15, 20, 25} s,
// phase-major, 32 actions total. Decode is a bijection either way.
struct ActionSpace {
  enum class Mode { fixed_interval, variable_interval };

  static constexpr double kFixedInterval = 10.0;
  static constexpr double kVariableIntervals[4] = {10.0, 15.0, 20.0, 25.0};

  Mode mode = Mode::fixed_interval;

  int n_actions() const {
    return mode == Mode::fixed_interval ? sim::kPhaseCount
                                        : sim::kPhaseCount * 4;
  }

  struct Decoded {
    int phase = 0;
    double interval = kFixedInterval;
  };

  Decoded decode(int action) const {
    if (action < 0 || action >= n_actions()) {
      throw std::invalid_argument("action id out of range");
    }
    if (mode == Mode::fixed_interval) return {action, kFixedInterval};
    return {action / 4, kVariableIntervals[action % 4]};
  }

  int encode(int phase, double interval) const {
    if (mode == Mode::fixed_interval) return phase;
    for (int i = 0; i < 4; ++i) {
      if (kVariableIntervals[i] == interval) return phase * 4 + i;
    }
    throw std::invalid_argument("interval not in the variable set");
  }

  static ActionSpace for_n_actions(int n) {
    if (n == sim::kPhaseCount) return {Mode::fixed_interval};
    if (n == sim::kPhaseCount * 4) return {Mode::variable_interval};
    throw std::invalid_argument("no action space with that many actions");
  }
};

// Light-malfunction model: with probability p the executed phase is a
// uniformly random phase other than the chosen one; the interval part of the
// action is preserved.
inline int disturb_action(int chosen_action, const ActionSpace& actions,
                          double p, Rng& rng) {
  if (p < 0.0 || p > 1.0) {
    throw std::invalid_argument("disturbance probability must be in [0, 1]");
  }
  if (p == 0.0 || !rng.bernoulli(p)) return chosen_action;
  const ActionSpace::Decoded d = actions.decode(chosen_action);
  int other = static_cast<int>(rng.uniform_int(sim::kPhaseCount - 1));
  if (other >= d.phase) ++other;
  return actions.encode(other, d.interval);
}

}  // namespace crossflow::rl
