#pragma once

#include <cmath>
#include <span>
#include <string>
#include <vector>

#include "crossflow/net/adam.hpp"
#include "crossflow/net/checkpoint.hpp"
#include "crossflow/rl/input.hpp"

namespace crossflow::rl {

// Clipped surrogate, per sample: min(r*A, clip(r, 1-eps, 1+eps)*A).
inline double ppo_clip_objective(double ratio, double advantage,
                                 double eps = 0.15) {
  const double clipped = std::clamp(ratio, 1.0 - eps, 1.0 + eps);
  return std::min(ratio * advantage, clipped * advantage);
}

struct GaeResult {
  std::vector<double> advantages;
  std::vector<double> returns;
};

// Generalized advantage estimation over one rollout; `bootstrap_value` prices
// the state after the last entry (ignored when that entry is terminal).
inline GaeResult gae_advantages(std::span<const double> rewards,
                                std::span<const double> values,
                                std::span<const char> dones,
                                double bootstrap_value, double gamma,
                                double lambda) {
  const std::size_t n = rewards.size();
  if (values.size() != n || dones.size() != n) {
    throw std::invalid_argument("gae: sequence length mismatch");
  }
  GaeResult out;
  out.advantages.assign(n, 0.0);
  out.returns.assign(n, 0.0);
  double carry = 0.0;
  double next_value = bootstrap_value;
  for (std::size_t i = n; i-- > 0;) {
    const double mask = dones[i] ? 0.0 : 1.0;
    const double delta = rewards[i] + gamma * next_value * mask - values[i];
    carry = delta + gamma * lambda * mask * carry;
    out.advantages[i] = carry;
    out.returns[i] = carry + values[i];
    next_value = values[i];
  }
  return out;
}

struct PpoConfig {
  int n_actions = 8;
  double gamma = 0.95;
  double gae_lambda = 0.95;
  double clip = 0.15;
  int rollout = 100;   // on-policy batch size
  int passes = 4;      // gradient passes per rollout (1 = strict single-use)
  double entropy_coef = 0.0;
  bool normalize_advantages = true;
  net::LrSchedule lr_actor{1e-4, 0.9, 100};
  net::LrSchedule lr_critic{1e-3, 0.9, 100};
  float max_speed = 13.89f;
};

// Actor-new / actor-old / critic over the shared controller network. The
// rollout is consumed in one update round and then discarded; actor-old is
// refreshed as an exact copy of actor-new right before the round, so the
// first gradient pass starts from ratio 1.
class PpoAgent {
 public:
  PpoAgent(const PpoConfig& cfg, uint64_t seed)
      : cfg_(cfg),
        actor_spec_(net::NetworkSpec::controller(net::Head::policy,
                                                 cfg.n_actions)),
        critic_spec_(net::NetworkSpec::controller(net::Head::value,
                                                  cfg.n_actions)),
        rng_(Rng::derive(seed, 41)) {
    Rng init_a(Rng::derive(seed, 42));
    Rng init_c(Rng::derive(seed, 43));
    actor_ = net::Parameters<float>::he_uniform(actor_spec_, init_a);
    actor_old_ = actor_;
    critic_ = net::Parameters<float>::he_uniform(critic_spec_, init_c);
    opt_actor_ = net::AdamState<float>::like(actor_);
    opt_critic_ = net::AdamState<float>::like(critic_);
    grid_one_.resize(kGridInputDim, 1);
    side_one_.resize(sim::kSignalCount, 1);
  }

  // Samples from the current policy (training behavior).
  int act(const obs::StateTensor& s) {
    const auto p = policy_probs(s);
    double u = rng_.uniform();
    for (int a = 0; a < cfg_.n_actions; ++a) {
      u -= p(a);
      if (u < 0.0) return a;
    }
    return cfg_.n_actions - 1;
  }

  // Mode of the policy (greedy evaluation behavior).
  int mode_action(const obs::StateTensor& s) {
    const auto p = policy_probs(s);
    int best = 0;
    for (int a = 1; a < cfg_.n_actions; ++a) {
      if (p(a) > p(best)) best = a;
    }
    return best;
  }

  void observe(const obs::StateTensor& s, int action, float reward,
               const obs::StateTensor& s_next, bool done) {
    states_.push_back(CompactState::from(s));
    actions_.push_back(action);
    rewards_.push_back(reward);
    dones_.push_back(done ? 1 : 0);
    tail_ = CompactState::from(s_next);
    if (static_cast<int>(states_.size()) >= cfg_.rollout) update();
  }

  void set_lr(double actor_lr, double critic_lr) {
    lr_actor_ = static_cast<float>(actor_lr);
    lr_critic_ = static_cast<float>(critic_lr);
  }

  long update_rounds() const { return update_rounds_; }
  std::size_t pending() const { return states_.size(); }
  // Mean clipped objective on the last rollout, before the first gradient
  // pass (always 0: every ratio is 1) and after the last one.
  std::pair<double, double> last_update_objectives() const {
    return {last_obj_before_, last_obj_after_};
  }
  const net::NetworkSpec& actor_spec() const { return actor_spec_; }
  const net::Parameters<float>& actor() const { return actor_; }
  const net::Parameters<float>& actor_old() const { return actor_old_; }
  const net::Parameters<float>& critic() const { return critic_; }

  void save(const std::string& actor_path,
            const std::string& critic_path) const {
    net::save_params(actor_, net::Head::policy, cfg_.n_actions, actor_path);
    net::save_params(critic_, net::Head::value, cfg_.n_actions, critic_path);
  }

 private:
  Eigen::VectorXf policy_probs(const obs::StateTensor& s) {
    pack_state(s, cfg_.max_speed, grid_one_, side_one_, 0);
    return net::forward(actor_spec_, actor_, grid_one_, side_one_).col(0);
  }

  void update() {
    const int N = static_cast<int>(states_.size());
    net::MatX<float> grid(kGridInputDim, N), side(sim::kSignalCount, N);
    for (int i = 0; i < N; ++i) {
      states_[i].pack(cfg_.max_speed, grid, side, i);
    }

    // Critic values for GAE, plus the bootstrap for a truncated rollout.
    const auto v_now = net::forward(critic_spec_, critic_, grid, side);
    std::vector<double> values(N);
    for (int i = 0; i < N; ++i) values[i] = v_now(0, i);
    double bootstrap = 0.0;
    if (!dones_.back()) {
      net::MatX<float> tg(kGridInputDim, 1), ts(sim::kSignalCount, 1);
      tail_.pack(cfg_.max_speed, tg, ts, 0);
      bootstrap = net::forward(critic_spec_, critic_, tg, ts)(0, 0);
    }
    std::vector<double> rewards(rewards_.begin(), rewards_.end());
    const GaeResult gae =
        gae_advantages(rewards, values, dones_, bootstrap, cfg_.gamma,
                       cfg_.gae_lambda);

    std::vector<double> adv = gae.advantages;
    if (cfg_.normalize_advantages && N > 1) {
      double mean = 0.0;
      for (double a : adv) mean += a;
      mean /= N;
      double var = 0.0;
      for (double a : adv) var += (a - mean) * (a - mean);
      const double sd = std::sqrt(var / N) + 1e-8;
      for (double& a : adv) a = (a - mean) / sd;
    }

    actor_old_ = actor_;
    const auto p_old = net::forward(actor_spec_, actor_old_, grid, side);

    auto mean_objective = [&](const net::Parameters<float>& params) {
      const auto probs = net::forward(actor_spec_, params, grid, side);
      double sum = 0.0;
      for (int i = 0; i < N; ++i) {
        const int a = actions_[i];
        const double ratio = static_cast<double>(probs(a, i)) /
                             std::max(1e-12, static_cast<double>(p_old(a, i)));
        sum += ppo_clip_objective(ratio, adv[i], cfg_.clip);
      }
      return sum / N;
    };
    last_obj_before_ = mean_objective(actor_);

    for (int pass = 0; pass < cfg_.passes; ++pass) {
      net::ForwardCache<float> cache;
      const auto p_new = net::forward(actor_spec_, actor_, grid, side, &cache);
      net::MatX<float> dlogits = net::MatX<float>::Zero(cfg_.n_actions, N);
      for (int i = 0; i < N; ++i) {
        const int a = actions_[i];
        const double ratio =
            static_cast<double>(p_new(a, i)) / std::max(1e-12, static_cast<double>(p_old(a, i)));
        const double clipped = std::clamp(ratio, 1.0 - cfg_.clip, 1.0 + cfg_.clip);
        // min() picks the unclipped branch at ties, so the gradient w.r.t.
        // the ratio vanishes exactly where clipping is active.
        const bool unclipped = ratio * adv[i] <= clipped * adv[i];
        const double dobj_dratio = unclipped ? adv[i] : 0.0;
        const double scale = -dobj_dratio * ratio / N;  // ascent -> loss grad
        for (int k = 0; k < cfg_.n_actions; ++k) {
          const double ind = k == a ? 1.0 : 0.0;
          double g = scale * (ind - p_new(k, i));
          if (cfg_.entropy_coef > 0.0) {
            double ent = 0.0;
            for (int j = 0; j < cfg_.n_actions; ++j) {
              const double pj = p_new(j, i);
              if (pj > 0) ent -= pj * std::log(pj);
            }
            const double pk = p_new(k, i);
            g += cfg_.entropy_coef / N * pk * (std::log(std::max(pk, 1e-12)) + ent);
          }
          dlogits(k, i) += static_cast<float>(g);
        }
      }
      auto a_grads = net::backward(actor_spec_, actor_, cache, dlogits);
      net::adam_step(actor_, a_grads, opt_actor_, lr_actor_);

      net::ForwardCache<float> vcache;
      const auto v = net::forward(critic_spec_, critic_, grid, side, &vcache);
      net::MatX<float> dv(1, N);
      for (int i = 0; i < N; ++i) {
        dv(0, i) =
            2.0f * (v(0, i) - static_cast<float>(gae.returns[i])) / N;
      }
      auto c_grads = net::backward(critic_spec_, critic_, vcache, dv);
      net::adam_step(critic_, c_grads, opt_critic_, lr_critic_);
    }

    last_obj_after_ = mean_objective(actor_);
    states_.clear();
    actions_.clear();
    rewards_.clear();
    dones_.clear();
    ++update_rounds_;
  }

  PpoConfig cfg_;
  net::NetworkSpec actor_spec_, critic_spec_;
  net::Parameters<float> actor_, actor_old_, critic_;
  net::AdamState<float> opt_actor_, opt_critic_;
  Rng rng_;
  float lr_actor_ = 1e-4f;
  float lr_critic_ = 1e-3f;
  long update_rounds_ = 0;
  double last_obj_before_ = 0.0;
  double last_obj_after_ = 0.0;

  std::vector<CompactState> states_;
  std::vector<int> actions_;
  std::vector<float> rewards_;
  std::vector<char> dones_;
  CompactState tail_;

  net::MatX<float> grid_one_, side_one_;
};

}  // namespace crossflow::rl
