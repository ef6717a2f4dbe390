#include <doctest.h>

#include <cmath>
#include <set>

#include "crossflow/rl/ppo.hpp"
#include "crossflow/rl/qlearn.hpp"
#include "crossflow/rl/replay.hpp"
#include "crossflow/rl/trainer.hpp"
#include "support/helpers.hpp"

using namespace crossflow;
using namespace cftest;

namespace {

Eigen::VectorXf qvec(std::initializer_list<float> xs) {
  Eigen::VectorXf v(static_cast<int>(xs.size()));
  int i = 0;
  for (float x : xs) v(i++) = x;
  return v;
}

obs::StateTensor random_state(Rng& rng) {
  obs::StateTensor s;
  for (int k = 0; k < 40; ++k) {
    const int r = static_cast<int>(rng.uniform_int(obs::kGridRows));
    const int c = static_cast<int>(rng.uniform_int(obs::kGridCols));
    s.position(r, c) = 1.0f;
    s.velocity(r, c) = static_cast<float>(rng.uniform(0, 13.89));
    s.waiting(r, c) = static_cast<float>(rng.uniform(0, 120));
  }
  for (int i = 0; i < sim::kSignalCount; ++i) {
    s.phase(i) = rng.bernoulli(0.3) ? 1.0f : 0.0f;
  }
  return s;
}

}  // namespace

TEST_CASE("greedy action with lowest-index tie break") {
  CHECK(rl::greedy_action(qvec({1, 2, 3})) == 2);
  CHECK(rl::greedy_action(qvec({5, 5, 1})) == 0);
  Rng rng(3);
  for (int k = 0; k < 200; ++k) {
    Eigen::VectorXf q(8);
    for (int i = 0; i < 8; ++i) q(i) = static_cast<float>(rng.uniform(-5, 5));
    const float shift = static_cast<float>(rng.uniform(-10, 10));
    CHECK(rl::greedy_action(q) ==
          rl::greedy_action((q.array() + shift).matrix()));
  }
}

TEST_CASE("epsilon-greedy exploration statistics") {
  Rng rng(17);
  const auto q = qvec({0, 0, 3, 0, 0, 0, 0, 0});
  SUBCASE("epsilon 0 is always greedy") {
    for (int k = 0; k < 1000; ++k) CHECK(rl::epsilon_greedy(q, 0.0, rng) == 2);
  }
  SUBCASE("epsilon 1 is uniform within 3 sigma") {
    const int draws = 100000;
    std::array<int, 8> hits{};
    for (int k = 0; k < draws; ++k) hits[rl::epsilon_greedy(q, 1.0, rng)]++;
    const double expect = draws / 8.0;
    const double sigma = std::sqrt(draws * (1.0 / 8) * (7.0 / 8));
    for (int a = 0; a < 8; ++a) {
      CHECK(std::abs(hits[a] - expect) <= 3 * sigma);
    }
  }
  SUBCASE("epsilon 0.1 picks greedy at the mixture rate") {
    const int draws = 100000;
    int greedy = 0;
    for (int k = 0; k < draws; ++k) {
      if (rl::epsilon_greedy(q, 0.1, rng) == 2) ++greedy;
    }
    const double p = 0.9 + 0.1 / 8;
    const double sigma = std::sqrt(draws * p * (1 - p));
    CHECK(std::abs(greedy - draws * p) <= 3 * sigma);
  }
  SUBCASE("epsilon outside [0,1] rejected") {
    CHECK_THROWS_AS(rl::epsilon_greedy(q, 1.5, rng), std::invalid_argument);
  }
}

TEST_CASE("q-learning targets match the hand traces") {
  SUBCASE("bootstrapped target") {
    CHECK(rl::dqn_target(-5.0, qvec({10, 2, 7}), false, 0.9) ==
          doctest::Approx(4.0).epsilon(1e-12));
  }
  SUBCASE("terminal and discount edge cases") {
    CHECK(rl::dqn_target(-3.0, qvec({10, 2}), true, 0.9) == -3.0);
    CHECK(rl::dqn_target(-3.0, qvec({10, 2}), false, 0.0) == -3.0);
  }
  SUBCASE("double-Q decouples selection from pricing") {
    const auto qe = qvec({1, 9});
    const auto qt = qvec({7, 3});
    CHECK(rl::ddqn_target(0.0, qe, qt, false, 1.0) == doctest::Approx(3.0));
    CHECK(rl::dqn_target(0.0, qt, false, 1.0) == doctest::Approx(7.0));
    CHECK(rl::ddqn_target(1.0, qe, qe, false, 0.5) ==
          doctest::Approx(rl::dqn_target(1.0, qe, false, 0.5)));
    CHECK(rl::ddqn_target(2.5, qe, qt, true, 0.9) == 2.5);
  }
  SUBCASE("identical networks make both targets equal on random vectors") {
    Rng rng(5);
    for (int k = 0; k < 300; ++k) {
      Eigen::VectorXf q(8);
      for (int i = 0; i < 8; ++i) q(i) = static_cast<float>(rng.uniform(-9, 9));
      const double r = rng.uniform(-10, 10);
      CHECK(rl::ddqn_target(r, q, q, false, 0.95) ==
            doctest::Approx(rl::dqn_target(r, q, false, 0.95)).epsilon(1e-9));
    }
  }
}

TEST_CASE("gae recursion matches hand computation") {
  SUBCASE("lambda 0 is the one-step TD residual") {
    const std::vector<double> r{1, 2, 3}, v{5, 4, 2};
    const std::vector<char> d{0, 0, 0};
    const auto out = rl::gae_advantages(r, v, d, 1.5, 0.9, 0.0);
    CHECK(out.advantages[0] == doctest::Approx(1 + 0.9 * 4 - 5));
    CHECK(out.advantages[1] == doctest::Approx(2 + 0.9 * 2 - 4));
    CHECK(out.advantages[2] == doctest::Approx(3 + 0.9 * 1.5 - 2));
  }
  SUBCASE("lambda 1 at gamma 1 with zero values is reward-to-go") {
    const std::vector<double> r{1, 1, 1}, v{0, 0, 0};
    const std::vector<char> d{0, 0, 1};
    const auto out = rl::gae_advantages(r, v, d, 99.0, 1.0, 1.0);
    CHECK(out.advantages[0] == doctest::Approx(3.0));
    CHECK(out.advantages[1] == doctest::Approx(2.0));
    CHECK(out.advantages[2] == doctest::Approx(1.0));
  }
  SUBCASE("two-step hand recursion") {
    const std::vector<double> r{1, 1}, v{0.5, 0.5};
    const std::vector<char> d{0, 0};
    const auto out = rl::gae_advantages(r, v, d, 0.0, 0.9, 0.95);
    CHECK(out.advantages[1] == doctest::Approx(0.5).epsilon(1e-12));
    CHECK(out.advantages[0] == doctest::Approx(1.3775).epsilon(1e-12));
    CHECK(out.returns[0] == doctest::Approx(1.8775).epsilon(1e-12));
    CHECK(out.returns[1] == doctest::Approx(1.0).epsilon(1e-12));
  }
  SUBCASE("terminal flags break the chain") {
    const std::vector<double> r{1, 1}, v{0.3, 0.4};
    const std::vector<char> d{1, 0};
    const auto out = rl::gae_advantages(r, v, d, 0.7, 0.9, 0.95);
    CHECK(out.advantages[0] == doctest::Approx(1 - 0.3));
  }
  SUBCASE("length mismatch throws") {
    const std::vector<double> r{1}, v{0, 0};
    const std::vector<char> d{0};
    CHECK_THROWS_AS(rl::gae_advantages(r, v, d, 0, 0.9, 0.9),
                    std::invalid_argument);
  }
}

TEST_CASE("clipped surrogate objective") {
  SUBCASE("table of hand-evaluated points") {
    CHECK(rl::ppo_clip_objective(1.0, 2.5) == doctest::Approx(2.5));
    CHECK(rl::ppo_clip_objective(1.0, -0.7) == doctest::Approx(-0.7));
    CHECK(rl::ppo_clip_objective(1.3, 2.0) == doctest::Approx(2.3));
    CHECK(rl::ppo_clip_objective(0.5, -1.0) == doctest::Approx(-0.85));
    CHECK(rl::ppo_clip_objective(1.15, 1.0) == doctest::Approx(1.15));
    CHECK(rl::ppo_clip_objective(2.0, -1.0) == doctest::Approx(-2.0));
  }
  SUBCASE("pointwise lower bound on the unclipped surrogate") {
    Rng rng(23);
    for (int k = 0; k < 2000; ++k) {
      const double ratio = rng.uniform(0.01, 3.0);
      const double adv = rng.uniform(-4, 4);
      CHECK(rl::ppo_clip_objective(ratio, adv) <= ratio * adv + 1e-12);
    }
  }
  SUBCASE("flat beyond the clip range") {
    CHECK(rl::ppo_clip_objective(1.2, 3.0) ==
          doctest::Approx(rl::ppo_clip_objective(2.9, 3.0)));
    CHECK(rl::ppo_clip_objective(0.8, -3.0) ==
          doctest::Approx(rl::ppo_clip_objective(0.1, -3.0)));
  }
}

TEST_CASE("replay buffer samples uniformly with replacement") {
  rl::ReplayBuffer buf(100);
  Rng rng(3);
  for (int i = 0; i < 100; ++i) {
    rl::Experience e;
    e.action = i;
    buf.push(std::move(e));
  }
  const int draws = 100000;
  std::array<int, 100> hits{};
  for (int k = 0; k < draws / 10; ++k) {
    for (std::size_t idx : buf.sample_indices(10, rng)) {
      hits[buf.at(idx).action]++;
    }
  }
  const double expect = draws / 100.0;
  const double sigma = std::sqrt(draws * 0.01 * 0.99);
  for (int i = 0; i < 100; ++i) {
    CHECK(std::abs(hits[i] - expect) <= 3 * sigma);
  }
  SUBCASE("ring overwrites the oldest entries") {
    rl::ReplayBuffer small(3);
    for (int i = 0; i < 5; ++i) {
      rl::Experience e;
      e.action = i;
      small.push(std::move(e));
    }
    CHECK(small.size() == 3);
    std::set<int> kept;
    for (std::size_t i = 0; i < small.size(); ++i) kept.insert(small.at(i).action);
    CHECK(kept == std::set<int>{2, 3, 4});
  }
}

TEST_CASE("action decode is a bijection") {
  SUBCASE("variable mode covers 8 phases x 4 intervals") {
    rl::ActionSpace as{rl::ActionSpace::Mode::variable_interval};
    CHECK(as.n_actions() == 32);
    std::set<std::pair<int, int>> seen;
    for (int a = 0; a < 32; ++a) {
      const auto d = as.decode(a);
      CHECK(as.encode(d.phase, d.interval) == a);
      seen.insert({d.phase, static_cast<int>(d.interval)});
      CHECK((d.interval == 10 || d.interval == 15 || d.interval == 20 ||
             d.interval == 25));
    }
    CHECK(seen.size() == 32);
  }
  SUBCASE("fixed mode always commands 10 s") {
    rl::ActionSpace as{rl::ActionSpace::Mode::fixed_interval};
    CHECK(as.n_actions() == 8);
    for (int a = 0; a < 8; ++a) {
      CHECK(as.decode(a).phase == a);
      CHECK(as.decode(a).interval == 10.0);
    }
    CHECK_THROWS_AS(as.decode(8), std::invalid_argument);
  }
}

TEST_CASE("action disturbance statistics") {
  rl::ActionSpace fixed{rl::ActionSpace::Mode::fixed_interval};
  rl::ActionSpace variable{rl::ActionSpace::Mode::variable_interval};
  Rng rng(37);
  SUBCASE("p=0 is the identity") {
    for (int a = 0; a < 8; ++a) CHECK(rl::disturb_action(a, fixed, 0.0, rng) == a);
  }
  SUBCASE("p=1 always lands on a different phase, same interval") {
    for (int k = 0; k < 2000; ++k) {
      const int chosen = static_cast<int>(rng.uniform_int(32));
      const int executed = rl::disturb_action(chosen, variable, 1.0, rng);
      CHECK(variable.decode(executed).phase != variable.decode(chosen).phase);
      CHECK(variable.decode(executed).interval ==
            variable.decode(chosen).interval);
    }
  }
  SUBCASE("p=0.1 mismatches at the expected rate") {
    const int draws = 100000;
    int mismatches = 0;
    for (int k = 0; k < draws; ++k) {
      if (rl::disturb_action(3, fixed, 0.1, rng) != 3) ++mismatches;
    }
    const double sigma = std::sqrt(draws * 0.1 * 0.9);
    CHECK(std::abs(mismatches - draws * 0.1) <= 3 * sigma);
  }
  SUBCASE("disturbed phases are uniform over the other seven") {
    std::array<int, 8> hits{};
    const int draws = 70000;
    for (int k = 0; k < draws; ++k) {
      hits[rl::disturb_action(3, fixed, 1.0, rng)]++;
    }
    CHECK(hits[3] == 0);
    const double expect = draws / 7.0;
    const double sigma = std::sqrt(draws * (1.0 / 7) * (6.0 / 7));
    for (int a = 0; a < 8; ++a) {
      if (a == 3) continue;
      CHECK(std::abs(hits[a] - expect) <= 3 * sigma);
    }
  }
}

TEST_CASE("dqn agent syncs its target on schedule") {
  rl::QLearningConfig cfg;
  cfg.n_actions = 8;
  cfg.batch_size = 4;
  cfg.sync_period = 5;
  cfg.replay_capacity = 64;
  rl::DqnAgent agent(cfg, 99);
  Rng rng(7);

  CHECK(agent.eval_params().w[2] == agent.target_params().w[2]);
  // Updates start once the replay holds a full batch: 15 observations with
  // batch 4 give 12 update steps, and period 5 fires exactly 2 syncs.
  for (int k = 0; k < 15; ++k) {
    agent.observe(random_state(rng), k % 8, -1.0f, random_state(rng),
                  false);
  }
  CHECK(agent.updates() == 12);
  CHECK(agent.syncs() == 2);
  // Updates since the last sync leave the target behind the eval net.
  CHECK(agent.eval_params().w[2] != agent.target_params().w[2]);
  const auto frozen = agent.target_params().w[2];
  agent.observe(random_state(rng), 0, -1.0f, random_state(rng), false);
  CHECK(agent.target_params().w[2] == frozen);  // bit-stable between syncs
  agent.sync_target();
  CHECK(agent.eval_params().w[2] == agent.target_params().w[2]);
}

TEST_CASE("ppo agent copies actor-old and discards the rollout") {
  rl::PpoConfig cfg;
  cfg.n_actions = 8;
  cfg.rollout = 6;
  cfg.passes = 2;
  rl::PpoAgent agent(cfg, 123);
  Rng rng(9);

  const auto before = agent.actor().w[3];
  for (int k = 0; k < 6; ++k) {
    agent.observe(random_state(rng), k % 8, -2.0f + k, random_state(rng),
                  k == 5);
  }
  CHECK(agent.update_rounds() == 1);
  CHECK(agent.pending() == 0);  // rollout discarded after the round
  // actor-old is the exact pre-update copy; the new actor moved on.
  CHECK(agent.actor_old().w[3] == before);
  CHECK(agent.actor().w[3] != before);
  // Ratios start at exactly 1, so the pre-pass mean clipped objective is the
  // mean advantage of a normalized batch: 0.
  const auto [obj_before, obj_after] = agent.last_update_objectives();
  CHECK(obj_before == doctest::Approx(0.0).epsilon(1e-6));
  CHECK(obj_after >= obj_before - 1e-6);
}

TEST_CASE("training runs are deterministic and logged per episode") {
  rl::TrainConfig cfg;
  cfg.method = rl::Method::ppo;
  cfg.actions = rl::ActionSpace{rl::ActionSpace::Mode::fixed_interval};
  cfg.episodes = 2;
  cfg.seed = 5;
  cfg.env.total_vehicles = 8;
  cfg.env.watchdog_s = 600;
  cfg.ppo.rollout = 16;
  cfg.ppo.passes = 1;
  cfg.checkpoint_every = 0;

  const auto a = rl::run_training(cfg);
  const auto b = rl::run_training(cfg);
  REQUIRE(a.episodes.size() == 2);
  REQUIRE(b.episodes.size() == 2);
  for (std::size_t i = 0; i < a.episodes.size(); ++i) {
    CHECK(a.episodes[i].reward == b.episodes[i].reward);
    CHECK(a.episodes[i].passing_time_s == b.episodes[i].passing_time_s);
    CHECK(a.episodes[i].waiting_time_s == b.episodes[i].waiting_time_s);
    CHECK(a.episodes[i].switches == b.episodes[i].switches);
  }
  CHECK(a.episodes[0].passing_time_s > 0);

  SUBCASE("episode count honors the request") {
    rl::TrainConfig none = cfg;
    none.episodes = 0;
    CHECK(rl::run_training(none).episodes.empty());
    rl::TrainConfig one = cfg;
    one.episodes = 1;
    CHECK(rl::run_training(one).episodes.size() == 1);
  }
}
