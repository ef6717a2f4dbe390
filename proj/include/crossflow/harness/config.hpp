#pragma once

#include <nlohmann/json_fwd.hpp>
#include <string>

#include "crossflow/rl/trainer.hpp"
#include "crossflow/scen/scenario.hpp"

namespace crossflow::harness {

class ConfigError : public std::runtime_error {
 public:
  ConfigError(const std::string& field, const std::string& what)
      : std::runtime_error(field + ": " + what), field_(field) {}
  const std::string& field() const { return field_; }

 private:
  std::string field_;
};

struct HyperParams {
  double gamma = 0.95;
  double gae_lambda = 0.95;
  double clip = 0.15;
  int rollout = 100;
  int ppo_passes = 4;
  double entropy_coef = 0.0;
  bool normalize_advantages = true;
  int replay_capacity = 20000;
  int batch_size = 32;
  int sync_period = 50;
  double lr = 1e-4;
  double lr_critic = 1e-3;
  double lr_decay = 0.9;
  int lr_decay_every = 100;
  double eps_start = 1.0;
  double eps_end = 0.05;
  double eps_fraction = 0.6;
};

// The complete, serializable description of one run. Field precedence when
// assembling: command-line flags > config file > preset defaults.
struct RunConfig {
  std::string preset = "desk";  // desk | paper
  std::string method = "ppo";
  std::string intervals = "fixed";  // fixed | variable
  int episodes = 150;
  uint64_t seed = 1;

  std::string scenario = "balanced";
  int total_vehicles = 200;
  double collision_probability = 0.02;
  double action_disturbance_prob = -1.0;  // <0: scenario preset default
  double watchdog_s = 5000.0;

  sim::VehicleSpec vehicle{};
  sim::FlowTable flow{};
  HyperParams hyper{};
  int checkpoint_every = 25;
  bool store_executed_action = false;
  std::string out_dir;

  static RunConfig preset_defaults(const std::string& preset);
  static RunConfig from_json_text(const std::string& text,
                                  const std::string& preset_hint = "");
  nlohmann::json to_json() const;
  void apply_json(const nlohmann::json& j);
  void validate() const;

  rl::ActionSpace action_space() const;
  scen::ScenarioConfig scenario_config() const;
  rl::TrainConfig train_config() const;
};

std::string read_text_file(const std::string& path);
void write_text_file_atomic(const std::string& path, const std::string& text);

}  // namespace crossflow::harness
