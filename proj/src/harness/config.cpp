#include "crossflow/harness/config.hpp"

#include <nlohmann/json.hpp>

#include <filesystem>
#include <fstream>
#include <sstream>

namespace crossflow::harness {

using nlohmann::json;

RunConfig RunConfig::preset_defaults(const std::string& preset) {
  RunConfig cfg;
  cfg.preset = preset;
  if (preset == "desk") {
    cfg.total_vehicles = 200;
    cfg.episodes = 150;
    cfg.watchdog_s = 5000.0;
    return cfg;
  }
  if (preset == "paper") {
    cfg.total_vehicles = 808;
    cfg.episodes = 600;
    cfg.watchdog_s = 10000.0;
    return cfg;
  }
  throw ConfigError("preset", "unknown preset '" + preset +
                                  "' (expected desk or paper)");
}

void RunConfig::apply_json(const json& j) {
  auto get = [&](const char* key, auto& into) {
    if (j.contains(key)) into = j.at(key).get<std::decay_t<decltype(into)>>();
  };
  get("method", method);
  get("intervals", intervals);
  get("episodes", episodes);
  get("seed", seed);
  get("scenario", scenario);
  get("total_vehicles", total_vehicles);
  get("collision_probability", collision_probability);
  get("action_disturbance_prob", action_disturbance_prob);
  get("watchdog_s", watchdog_s);
  get("checkpoint_every", checkpoint_every);
  get("store_executed_action", store_executed_action);
  get("out_dir", out_dir);
  if (j.contains("vehicle")) {
    const json& v = j.at("vehicle");
    auto gv = [&](const char* key, double& into) {
      if (v.contains(key)) into = v.at(key).get<double>();
    };
    gv("length", vehicle.length);
    gv("min_gap", vehicle.min_gap);
    gv("max_accel", vehicle.max_accel);
    gv("max_decel", vehicle.max_decel);
    gv("max_speed", vehicle.max_speed);
  }
  if (j.contains("flow")) {
    const json& f = j.at("flow");
    auto gf = [&](const char* key, double& into) {
      if (f.contains(key)) into = f.at(key).get<double>();
    };
    gf("right", flow.right);
    gf("through", flow.through);
    gf("left", flow.left);
    gf("u_turn", flow.u_turn);
  }
  if (j.contains("hyper")) {
    const json& h = j.at("hyper");
    auto gh = [&](const char* key, auto& into) {
      if (h.contains(key)) into = h.at(key).get<std::decay_t<decltype(into)>>();
    };
    gh("gamma", hyper.gamma);
    gh("gae_lambda", hyper.gae_lambda);
    gh("clip", hyper.clip);
    gh("rollout", hyper.rollout);
    gh("ppo_passes", hyper.ppo_passes);
    gh("entropy_coef", hyper.entropy_coef);
    gh("normalize_advantages", hyper.normalize_advantages);
    gh("replay_capacity", hyper.replay_capacity);
    gh("batch_size", hyper.batch_size);
    gh("sync_period", hyper.sync_period);
    gh("lr", hyper.lr);
    gh("lr_critic", hyper.lr_critic);
    gh("lr_decay", hyper.lr_decay);
    gh("lr_decay_every", hyper.lr_decay_every);
    gh("eps_start", hyper.eps_start);
    gh("eps_end", hyper.eps_end);
    gh("eps_fraction", hyper.eps_fraction);
  }
}

RunConfig RunConfig::from_json_text(const std::string& text,
                                    const std::string& preset_hint) {
  json j;
  try {
    j = json::parse(text);
  } catch (const json::parse_error& e) {
    throw ConfigError("config", std::string("invalid JSON: ") + e.what());
  }
  std::string preset = preset_hint;
  if (preset.empty()) {
    preset = j.value("preset", std::string("desk"));
  }
  RunConfig cfg = preset_defaults(preset);
  cfg.apply_json(j);
  return cfg;
}

json RunConfig::to_json() const {
  json j;
  j["preset"] = preset;
  j["method"] = method;
  j["intervals"] = intervals;
  j["episodes"] = episodes;
  j["seed"] = seed;
  j["scenario"] = scenario;
  j["total_vehicles"] = total_vehicles;
  j["collision_probability"] = collision_probability;
  j["action_disturbance_prob"] = action_disturbance_prob;
  j["watchdog_s"] = watchdog_s;
  j["checkpoint_every"] = checkpoint_every;
  j["store_executed_action"] = store_executed_action;
  j["out_dir"] = out_dir;
  j["vehicle"] = {{"length", vehicle.length},
                  {"min_gap", vehicle.min_gap},
                  {"max_accel", vehicle.max_accel},
                  {"max_decel", vehicle.max_decel},
                  {"max_speed", vehicle.max_speed}};
  j["flow"] = {{"right", flow.right},
               {"through", flow.through},
               {"left", flow.left},
               {"u_turn", flow.u_turn}};
  j["hyper"] = {{"gamma", hyper.gamma},
                {"gae_lambda", hyper.gae_lambda},
                {"clip", hyper.clip},
                {"rollout", hyper.rollout},
                {"ppo_passes", hyper.ppo_passes},
                {"entropy_coef", hyper.entropy_coef},
                {"normalize_advantages", hyper.normalize_advantages},
                {"replay_capacity", hyper.replay_capacity},
                {"batch_size", hyper.batch_size},
                {"sync_period", hyper.sync_period},
                {"lr", hyper.lr},
                {"lr_critic", hyper.lr_critic},
                {"lr_decay", hyper.lr_decay},
                {"lr_decay_every", hyper.lr_decay_every},
                {"eps_start", hyper.eps_start},
                {"eps_end", hyper.eps_end},
                {"eps_fraction", hyper.eps_fraction}};
  return j;
}

void RunConfig::validate() const {
  if (method != "dqn" && method != "ddqn" && method != "ppo") {
    throw ConfigError("method", "expected dqn, ddqn, or ppo");
  }
  if (intervals != "fixed" && intervals != "variable") {
    throw ConfigError("intervals", "expected fixed or variable");
  }
  if (episodes < 0) throw ConfigError("episodes", "must be >= 0");
  if (total_vehicles < 0) throw ConfigError("total_vehicles", "must be >= 0");
  if (watchdog_s <= 0) throw ConfigError("watchdog_s", "must be > 0");
  if (collision_probability < 0 || collision_probability > 1) {
    throw ConfigError("collision_probability", "must be in [0, 1]");
  }
  if (action_disturbance_prob > 1) {
    throw ConfigError("action_disturbance_prob", "must be in [0, 1]");
  }
  if (checkpoint_every < 0) throw ConfigError("checkpoint_every", "must be >= 0");
  if (hyper.gamma < 0 || hyper.gamma > 1) {
    throw ConfigError("hyper.gamma", "must be in [0, 1]");
  }
  if (hyper.gae_lambda < 0 || hyper.gae_lambda > 1) {
    throw ConfigError("hyper.gae_lambda", "must be in [0, 1]");
  }
  if (hyper.clip <= 0 || hyper.clip >= 1) {
    throw ConfigError("hyper.clip", "must be in (0, 1)");
  }
  if (hyper.rollout <= 0) throw ConfigError("hyper.rollout", "must be > 0");
  if (hyper.ppo_passes <= 0) throw ConfigError("hyper.ppo_passes", "must be > 0");
  if (hyper.replay_capacity <= 0) {
    throw ConfigError("hyper.replay_capacity", "must be > 0");
  }
  if (hyper.batch_size <= 0) throw ConfigError("hyper.batch_size", "must be > 0");
  if (hyper.sync_period <= 0) throw ConfigError("hyper.sync_period", "must be > 0");
  if (hyper.lr <= 0 || hyper.lr_critic <= 0) {
    throw ConfigError("hyper.lr", "learning rates must be > 0");
  }
  if (hyper.eps_start < 0 || hyper.eps_start > 1 || hyper.eps_end < 0 ||
      hyper.eps_end > 1) {
    throw ConfigError("hyper.eps", "epsilon bounds must be in [0, 1]");
  }
  try {
    vehicle.validate();
  } catch (const std::invalid_argument& e) {
    throw ConfigError("vehicle", e.what());
  }
  try {
    scenario_config();
  } catch (const std::invalid_argument& e) {
    throw ConfigError("scenario", e.what());
  }
}

rl::ActionSpace RunConfig::action_space() const {
  return rl::ActionSpace{intervals == "variable"
                             ? rl::ActionSpace::Mode::variable_interval
                             : rl::ActionSpace::Mode::fixed_interval};
}

scen::ScenarioConfig RunConfig::scenario_config() const {
  scen::ScenarioConfig cfg = scen::ScenarioConfig::preset(scenario);
  cfg.total_vehicles = total_vehicles;
  if (cfg.collisions.road_class != sim::CollisionSettings::RoadClass::off) {
    cfg.collisions.probability = collision_probability;
  }
  if (action_disturbance_prob >= 0) {
    cfg.action_disturbance_prob = action_disturbance_prob;
  }
  return cfg;
}

rl::TrainConfig RunConfig::train_config() const {
  rl::TrainConfig t;
  t.method = rl::parse_method(method);
  t.actions = action_space();
  t.episodes = episodes;
  t.seed = seed;
  t.env = scenario_config().env_config(vehicle, flow, watchdog_s);
  t.q.gamma = hyper.gamma;
  t.q.batch_size = hyper.batch_size;
  t.q.sync_period = hyper.sync_period;
  t.q.replay_capacity = hyper.replay_capacity;
  t.q.lr = net::LrSchedule{hyper.lr, hyper.lr_decay, hyper.lr_decay_every};
  t.q.epsilon =
      rl::EpsilonSchedule{hyper.eps_start, hyper.eps_end, hyper.eps_fraction};
  t.ppo.gamma = hyper.gamma;
  t.ppo.gae_lambda = hyper.gae_lambda;
  t.ppo.clip = hyper.clip;
  t.ppo.rollout = hyper.rollout;
  t.ppo.passes = hyper.ppo_passes;
  t.ppo.entropy_coef = hyper.entropy_coef;
  t.ppo.normalize_advantages = hyper.normalize_advantages;
  t.ppo.lr_actor = net::LrSchedule{hyper.lr, hyper.lr_decay, hyper.lr_decay_every};
  t.ppo.lr_critic =
      net::LrSchedule{hyper.lr_critic, hyper.lr_decay, hyper.lr_decay_every};
  t.checkpoint_every = checkpoint_every;
  t.out_dir = out_dir;
  t.store_executed_action = store_executed_action;
  return t;
}

std::string read_text_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open file: " + path);
  std::ostringstream buf;
  buf << in.rdbuf();
  return buf.str();
}

void write_text_file_atomic(const std::string& path, const std::string& text) {
  const std::string tmp = path + ".tmp";
  {
    std::ofstream out(tmp, std::ios::trunc);
    if (!out || !out.write(text.data(), static_cast<std::streamsize>(text.size()))) {
      throw std::runtime_error("cannot write file: " + tmp);
    }
  }
  std::filesystem::rename(tmp, path);
}

}  // namespace crossflow::harness
