#include "crossflow/rl/env.hpp"

namespace crossflow::rl {

TrafficEnv::TrafficEnv(EnvConfig cfg, ActionSpace actions)
    : cfg_(std::move(cfg)), actions_(actions) {}

const obs::StateTensor& TrafficEnv::reset(uint64_t seed) {
  world_ = std::make_unique<sim::SimWorld>(cfg_.vehicle, cfg_.flow,
                                           cfg_.flow_schedule,
                                           cfg_.total_vehicles, seed,
                                           cfg_.collisions);
  disturb_rng_ = std::make_unique<Rng>(Rng::derive(seed, 7));
  decisions_ = 0;
  reward_sum_ = 0.0;
  aborted_ = false;
  done_ = world_->episode_done();
  refresh();
  return state_;
}

TrafficEnv::StepResult TrafficEnv::step(int action_id) {
  if (done_) throw std::logic_error("step() on a finished episode");
  const ActionSpace::Decoded chosen = actions_.decode(action_id);
  const int executed_id =
      disturb_action(action_id, actions_, cfg_.action_disturbance_prob,
                     *disturb_rng_);
  const ActionSpace::Decoded executed = actions_.decode(executed_id);

  const int prev_phase = world_->controller().current_phase();
  world_->apply_phase_command(executed.phase, executed.interval);
  while (!world_->at_decision() && !world_->episode_done() &&
         world_->clock() < cfg_.watchdog_s) {
    world_->step();
  }

  StepResult out;
  out.chosen_phase = chosen.phase;
  out.executed_phase = executed.phase;
  // The action penalty prices the agent's own decision; the rest of the
  // reward reads the world the executed phase produced.
  out.reward = obs::compute_reward(prev_phase, chosen.phase, *world_);
  out.aborted = world_->clock() >= cfg_.watchdog_s && !world_->episode_done();
  out.done = world_->episode_done() || out.aborted;

  aborted_ = out.aborted;
  done_ = out.done;
  reward_sum_ += out.reward.total;
  ++decisions_;
  refresh();
  return out;
}

double TrafficEnv::passing_time() const { return world_->clock(); }
double TrafficEnv::total_waiting() const { return world_->total_waiting(); }
long TrafficEnv::switches() const { return world_->switch_count(); }

void TrafficEnv::refresh() { state_ = obs::encode_state(*world_); }

}  // namespace crossflow::rl
