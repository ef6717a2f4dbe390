#pragma once

#include <string>

#include "crossflow/net/adam.hpp"
#include "crossflow/net/checkpoint.hpp"
#include "crossflow/rl/replay.hpp"

namespace crossflow::rl {

// Argmax with ties broken toward the lowest index.
template <class Derived>
int greedy_action(const Eigen::MatrixBase<Derived>& q) {
  int best = 0;
  for (int i = 1; i < q.size(); ++i) {
    if (q(i) > q(best)) best = i;
  }
  return best;
}

template <class Derived>
int epsilon_greedy(const Eigen::MatrixBase<Derived>& q, double epsilon,
                   Rng& rng) {
  if (epsilon < 0.0 || epsilon > 1.0) {
    throw std::invalid_argument("epsilon must be in [0, 1]");
  }
  if (rng.bernoulli(epsilon)) {
    return static_cast<int>(rng.uniform_int(static_cast<uint64_t>(q.size())));
  }
  return greedy_action(q);
}

// One-step bootstrapped targets. The terminal flag zeroes the bootstrap.
template <class Derived>
double dqn_target(double reward, const Eigen::MatrixBase<Derived>& q_next_target,
                  bool done, double gamma) {
  if (done) return reward;
  return reward + gamma * static_cast<double>(q_next_target.maxCoeff());
}

// The double-Q variant: the evaluation net picks the action, the target net
// prices it.
template <class DerivedE, class DerivedT>
double ddqn_target(double reward, const Eigen::MatrixBase<DerivedE>& q_next_eval,
                   const Eigen::MatrixBase<DerivedT>& q_next_target, bool done,
                   double gamma) {
  if (done) return reward;
  const int pick = greedy_action(q_next_eval);
  return reward + gamma * static_cast<double>(q_next_target(pick));
}

// Linear exploration decay over the first `fraction` of training episodes.
struct EpsilonSchedule {
  double start = 1.0;
  double end = 0.05;
  double fraction = 0.6;

  double at(int episode, int total_episodes) const {
    const double horizon = fraction * total_episodes;
    if (horizon <= 0) return end;
    const double t = episode / horizon;
    return t >= 1.0 ? end : start + (end - start) * t;
  }
};

struct QLearningConfig {
  int n_actions = 8;
  bool double_q = false;
  double gamma = 0.95;
  int batch_size = 32;
  int sync_period = 50;   // updates between target refreshes
  int replay_capacity = 20000;
  net::LrSchedule lr{1e-4, 0.9, 100};
  EpsilonSchedule epsilon{};
  float max_speed = 13.89f;
};

// DQN / DDQN over the shared controller network. One optimizer step per
// observed decision once the replay holds a full batch.
class DqnAgent {
 public:
  DqnAgent(const QLearningConfig& cfg, uint64_t seed)
      : cfg_(cfg),
        spec_(net::NetworkSpec::controller(net::Head::q_values, cfg.n_actions)),
        replay_(cfg.replay_capacity),
        rng_(Rng::derive(seed, 31)) {
    Rng init(Rng::derive(seed, 32));
    eval_ = net::Parameters<float>::he_uniform(spec_, init);
    target_ = eval_;
    opt_ = net::AdamState<float>::like(eval_);
    lr_ = static_cast<float>(cfg_.lr.initial);
    grid_one_.resize(kGridInputDim, 1);
    side_one_.resize(sim::kSignalCount, 1);
  }

  int act(const obs::StateTensor& s, double epsilon) {
    pack_state(s, cfg_.max_speed, grid_one_, side_one_, 0);
    const auto q = net::forward(spec_, eval_, grid_one_, side_one_);
    return epsilon_greedy(q.col(0), epsilon, rng_);
  }

  void observe(const obs::StateTensor& s, int action, float reward,
               const obs::StateTensor& s_next, bool done) {
    replay_.push(Experience{CompactState::from(s), action, reward,
                            CompactState::from(s_next), done});
    if (replay_.size() < static_cast<std::size_t>(cfg_.batch_size)) return;
    update_batch();
    ++updates_;
    if (updates_ % cfg_.sync_period == 0) sync_target();
  }

  void sync_target() {
    target_ = eval_;
    ++syncs_;
  }
  void set_lr(double lr) { lr_ = static_cast<float>(lr); }
  long updates() const { return updates_; }
  long syncs() const { return syncs_; }

  const net::NetworkSpec& spec() const { return spec_; }
  const net::Parameters<float>& eval_params() const { return eval_; }
  const net::Parameters<float>& target_params() const { return target_; }

  void save(const std::string& path) const {
    net::save_params(eval_, net::Head::q_values, cfg_.n_actions, path);
  }

 private:
  void update_batch() {
    const int B = cfg_.batch_size;
    net::MatX<float> grid(kGridInputDim, B), side(sim::kSignalCount, B);
    net::MatX<float> grid_next(kGridInputDim, B),
        side_next(sim::kSignalCount, B);
    const auto picks = replay_.sample_indices(B, rng_);
    for (int i = 0; i < B; ++i) {
      const Experience& e = replay_.at(picks[i]);
      e.s.pack(cfg_.max_speed, grid, side, i);
      e.s_next.pack(cfg_.max_speed, grid_next, side_next, i);
    }
    const auto q_next_t = net::forward(spec_, target_, grid_next, side_next);
    net::MatX<float> q_next_e;
    if (cfg_.double_q) {
      q_next_e = net::forward(spec_, eval_, grid_next, side_next);
    }
    net::ForwardCache<float> cache;
    const auto q = net::forward(spec_, eval_, grid, side, &cache);
    net::MatX<float> dhead = net::MatX<float>::Zero(cfg_.n_actions, B);
    for (int i = 0; i < B; ++i) {
      const Experience& e = replay_.at(picks[i]);
      const double y =
          cfg_.double_q
              ? ddqn_target(e.reward, q_next_e.col(i), q_next_t.col(i), e.done,
                            cfg_.gamma)
              : dqn_target(e.reward, q_next_t.col(i), e.done, cfg_.gamma);
      dhead(e.action, i) =
          2.0f * (q(e.action, i) - static_cast<float>(y)) / B;
    }
    auto grads = net::backward(spec_, eval_, cache, dhead);
    net::adam_step(eval_, grads, opt_, lr_);
  }

  QLearningConfig cfg_;
  net::NetworkSpec spec_;
  net::Parameters<float> eval_, target_;
  net::AdamState<float> opt_;
  ReplayBuffer replay_;
  Rng rng_;
  float lr_ = 1e-4f;
  long updates_ = 0;
  long syncs_ = 0;
  net::MatX<float> grid_one_, side_one_;
};

}  // namespace crossflow::rl
