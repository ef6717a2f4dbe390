#pragma once

#include <functional>
#include <string>
#include <vector>

#include "crossflow/rl/env.hpp"
#include "crossflow/rl/ppo.hpp"
#include "crossflow/rl/qlearn.hpp"

namespace crossflow::rl {

enum class Method { dqn, ddqn, ppo };

const char* method_name(Method m);
Method parse_method(const std::string& name);

struct TrainConfig {
  Method method = Method::ppo;
  ActionSpace actions{ActionSpace::Mode::fixed_interval};
  int episodes = 150;
  uint64_t seed = 1;
  EnvConfig env{};
  QLearningConfig q{};
  PpoConfig ppo{};
  int checkpoint_every = 25;
  std::string out_dir;  // empty: keep everything in memory, no checkpoints
  // Under action disturbance the stored experience keeps the agent's chosen
  // action by default; this flag stores the executed one instead.
  bool store_executed_action = false;
};

struct EpisodeRecord {
  int episode = 0;
  Method method = Method::ppo;
  double reward = 0.0;
  double passing_time_s = 0.0;
  double waiting_time_s = 0.0;
  long switches = 0;
  double epsilon_or_lr = 0.0;
  double wallclock_s = 0.0;
  bool aborted = false;
};

struct TrainRunResult {
  std::vector<EpisodeRecord> episodes;
  std::string final_policy_checkpoint;  // actor (ppo) or eval net (dqn/ddqn)
  std::vector<std::string> checkpoints;
  int aborted_episodes = 0;
};

// Full training loop: per-episode records, periodic checkpoints, and the
// final greedy-policy checkpoint. Deterministic given (config, seed).
TrainRunResult run_training(
    const TrainConfig& cfg,
    const std::function<void(const EpisodeRecord&)>& on_episode = {});

}  // namespace crossflow::rl
