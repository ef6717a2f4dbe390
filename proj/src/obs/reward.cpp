#include "crossflow/obs/reward.hpp"

#include <cmath>

namespace crossflow::obs {

double balance_term(std::span<const int> stopped_per_lane) {
  if (stopped_per_lane.empty()) return 0.0;
  double total = 0.0;
  for (int n : stopped_per_lane) total += n;
  const double avg = total / static_cast<double>(stopped_per_lane.size());
  double term = 0.0;
  for (int n : stopped_per_lane) term += kBalanceScale * (avg - n) * n;
  return term;
}

std::array<int, sim::kIncomingLaneCount> stopped_per_incoming_lane(
    const sim::SimWorld& world) {
  std::array<int, sim::kIncomingLaneCount> counts{};
  for (const sim::Vehicle& v : world.vehicles()) {
    const bool present =
        v.on_network() ||
        (v.status == sim::VehicleStatus::crashed && !v.removed);
    if (!present || v.speed >= sim::SimWorld::kStopThreshold) continue;
    int lane = -1;
    if (v.status == sim::VehicleStatus::crossing || v.lane < 0) {
      lane = v.route.incoming_lane();
    } else if (sim::lane_is_incoming(v.lane)) {
      lane = v.lane;
    }
    if (lane < 0) continue;  // stopped on an outgoing lane
    counts[(lane / 6) * 3 + lane % 3] += 1;
  }
  return counts;
}

RewardBreakdown compute_reward(int prev_phase, int action_phase,
                               const sim::SimWorld& next) {
  RewardBreakdown r;
  r.action = action_phase != prev_phase ? kSwitchPenalty : 0.0;
  long stopped = 0;
  double wait_sum = 0.0;
  for (const sim::Vehicle& v : next.vehicles()) {
    const bool present =
        v.on_network() ||
        (v.status == sim::VehicleStatus::crashed && !v.removed);
    if (!present || v.speed >= sim::SimWorld::kStopThreshold) continue;
    ++stopped;
    wait_sum += v.waiting;
  }
  r.stopped_count = static_cast<double>(stopped);
  r.mean_wait = stopped > 0 ? wait_sum / static_cast<double>(stopped) : 0.0;
  const auto lanes = stopped_per_incoming_lane(next);
  r.balance = balance_term(lanes);
  r.total =
      r.action - r.stopped_count - kWaitWeight * r.mean_wait + kBalanceWeight * r.balance;
  return r;
}

}  // namespace crossflow::obs
