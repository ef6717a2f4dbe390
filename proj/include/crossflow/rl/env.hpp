#pragma once

#include <memory>

#include "crossflow/obs/reward.hpp"
#include "crossflow/obs/state.hpp"
#include "crossflow/rl/action_space.hpp"

namespace crossflow::rl {

struct EnvConfig {
  sim::VehicleSpec vehicle{};
  sim::FlowTable flow{};
  sim::FlowSchedule flow_schedule{};  // empty = balanced
  int total_vehicles = 808;
  sim::CollisionSettings collisions{};
  double action_disturbance_prob = 0.0;
  double watchdog_s = 10000.0;
};

// Decision-level view of the simulator: one step = command a phase, run the
// transition and green to the next decision point, observe and score.
class TrafficEnv {
 public:
  TrafficEnv(EnvConfig cfg, ActionSpace actions);

  const obs::StateTensor& reset(uint64_t seed);

  struct StepResult {
    obs::RewardBreakdown reward;
    bool done = false;
    bool aborted = false;     // watchdog fired
    int executed_phase = 0;   // after any malfunction
    int chosen_phase = 0;
  };
  StepResult step(int action_id);

  const obs::StateTensor& state() const { return state_; }
  bool done() const { return done_; }
  bool aborted() const { return aborted_; }
  int decisions() const { return decisions_; }
  double reward_sum() const { return reward_sum_; }

  double passing_time() const;
  double total_waiting() const;
  long switches() const;

  const ActionSpace& actions() const { return actions_; }
  sim::SimWorld& world() { return *world_; }
  const sim::SimWorld& world() const { return *world_; }

 private:
  void refresh();

  EnvConfig cfg_;
  ActionSpace actions_;
  std::unique_ptr<sim::SimWorld> world_;
  std::unique_ptr<Rng> disturb_rng_;
  obs::StateTensor state_;
  bool done_ = true;
  bool aborted_ = false;
  int decisions_ = 0;
  double reward_sum_ = 0.0;
};

}  // namespace crossflow::rl
