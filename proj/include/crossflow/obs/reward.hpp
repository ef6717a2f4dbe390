#pragma once

#include <array>
#include <span>

#include "crossflow/sim/world.hpp"

namespace crossflow::obs {

// One evaluated reward, kept decomposed for logging and tests:
//   total = action - stopped_count - 0.5 * mean_wait + 0.8 * balance
struct RewardBreakdown {
  double action = 0.0;         // 0, or -5 when the commanded phase changed
  double stopped_count = 0.0;  // vehicles below the stop threshold
  double mean_wait = 0.0;      // mean waiting time of those vehicles, s
  double balance = 0.0;        // <= 0; 0 iff queues are evenly spread
  double total = 0.0;
};

constexpr double kSwitchPenalty = -5.0;
constexpr double kWaitWeight = 0.5;
constexpr double kBalanceWeight = 0.8;
constexpr double kBalanceScale = 0.02;

// Queue-balance term: sum_i scale*(n_avg - n_i)*n_i with n_avg averaged over
// all entries. Nonpositive for every input; zero iff all entries are equal.
double balance_term(std::span<const int> stopped_per_lane);

// Stopped-vehicle counts over the 12 incoming lanes, in lane-row order.
// Vehicles inside the junction count toward their origin lane.
std::array<int, sim::kIncomingLaneCount> stopped_per_incoming_lane(
    const sim::SimWorld& world);

// Evaluates the reward at a decision point, given the world state reached
// after the commanded green (and any transition) elapsed.
RewardBreakdown compute_reward(int prev_phase, int action_phase,
                               const sim::SimWorld& next);

}  // namespace crossflow::obs
