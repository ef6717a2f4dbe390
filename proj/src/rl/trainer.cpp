#include "crossflow/rl/trainer.hpp"

#include <chrono>
#include <filesystem>
#include <stdexcept>

namespace crossflow::rl {

namespace fs = std::filesystem;

const char* method_name(Method m) {
  switch (m) {
    case Method::dqn: return "dqn";
    case Method::ddqn: return "ddqn";
    default: return "ppo";
  }
}

Method parse_method(const std::string& name) {
  if (name == "dqn") return Method::dqn;
  if (name == "ddqn") return Method::ddqn;
  if (name == "ppo") return Method::ppo;
  throw std::invalid_argument("unknown method: " + name +
                              " (expected dqn, ddqn, or ppo)");
}

TrainRunResult run_training(
    const TrainConfig& cfg,
    const std::function<void(const EpisodeRecord&)>& on_episode) {
  if (cfg.episodes < 0) throw std::invalid_argument("episodes must be >= 0");
  TrainRunResult result;

  const int n_actions = cfg.actions.n_actions();
  QLearningConfig qcfg = cfg.q;
  qcfg.n_actions = n_actions;
  qcfg.double_q = cfg.method == Method::ddqn;
  qcfg.max_speed = static_cast<float>(cfg.env.vehicle.max_speed);
  PpoConfig pcfg = cfg.ppo;
  pcfg.n_actions = n_actions;
  pcfg.max_speed = static_cast<float>(cfg.env.vehicle.max_speed);

  std::unique_ptr<DqnAgent> dqn;
  std::unique_ptr<PpoAgent> ppo;
  if (cfg.method == Method::ppo) {
    ppo = std::make_unique<PpoAgent>(pcfg, cfg.seed);
  } else {
    dqn = std::make_unique<DqnAgent>(qcfg, cfg.seed);
  }

  const bool persist = !cfg.out_dir.empty();
  fs::path ckpt_dir;
  if (persist) {
    ckpt_dir = fs::path(cfg.out_dir) / "checkpoints";
    fs::create_directories(ckpt_dir);
  }
  auto save_checkpoint = [&](const std::string& tag) -> std::string {
    if (!persist) return {};
    if (ppo) {
      const auto actor = (ckpt_dir / (tag + ".actor.net")).string();
      const auto critic = (ckpt_dir / (tag + ".critic.net")).string();
      ppo->save(actor, critic);
      result.checkpoints.push_back(actor);
      return actor;
    }
    const auto path = (ckpt_dir / (tag + ".eval.net")).string();
    dqn->save(path);
    result.checkpoints.push_back(path);
    return path;
  };

  TrafficEnv env(cfg.env, cfg.actions);
  for (int ep = 0; ep < cfg.episodes; ++ep) {
    const auto t0 = std::chrono::steady_clock::now();
    double eps_or_lr;
    if (ppo) {
      const double lr = pcfg.lr_actor.at(ep);
      ppo->set_lr(lr, pcfg.lr_critic.at(ep));
      eps_or_lr = lr;
    } else {
      dqn->set_lr(qcfg.lr.at(ep));
      eps_or_lr = qcfg.epsilon.at(ep, cfg.episodes);
    }

    obs::StateTensor s = env.reset(Rng::derive(cfg.seed, 1000 + ep));
    while (!env.done()) {
      int action;
      if (ppo) {
        action = ppo->act(s);
      } else {
        action = dqn->act(s, eps_or_lr);
      }
      const TrafficEnv::StepResult sr = env.step(action);
      int stored = action;
      if (cfg.store_executed_action) {
        stored = cfg.actions.encode(sr.executed_phase,
                                    cfg.actions.decode(action).interval);
      }
      const float r = static_cast<float>(sr.reward.total);
      if (ppo) {
        ppo->observe(s, stored, r, env.state(), sr.done);
      } else {
        dqn->observe(s, stored, r, env.state(), sr.done);
      }
      s = env.state();
    }

    EpisodeRecord rec;
    rec.episode = ep;
    rec.method = cfg.method;
    rec.reward = env.reward_sum();
    rec.passing_time_s = env.passing_time();
    rec.waiting_time_s = env.total_waiting();
    rec.switches = env.switches();
    rec.epsilon_or_lr = eps_or_lr;
    rec.aborted = env.aborted();
    rec.wallclock_s =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - t0)
            .count();
    if (rec.aborted) ++result.aborted_episodes;
    result.episodes.push_back(rec);
    if (on_episode) on_episode(rec);

    if (cfg.checkpoint_every > 0 && (ep + 1) % cfg.checkpoint_every == 0 &&
        ep + 1 < cfg.episodes) {
      char tag[32];
      std::snprintf(tag, sizeof(tag), "ep%04d", ep + 1);
      save_checkpoint(tag);
    }
  }
  result.final_policy_checkpoint = save_checkpoint("final");
  return result;
}

}  // namespace crossflow::rl
