#include <CLI11.hpp>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>

#include "crossflow/harness/config.hpp"
#include "crossflow/harness/manifest.hpp"
#include "crossflow/harness/replay.hpp"
#include "crossflow/scen/evaluate.hpp"

namespace fs = std::filesystem;
using namespace crossflow;

namespace {

std::string output_root() {
  const char* env = std::getenv("CROSSFLOW_OUT");
  return env && *env ? env : "runs";
}

std::vector<uint64_t> parse_seed_list(const std::string& csv) {
  std::vector<uint64_t> seeds;
  std::istringstream ss(csv);
  std::string tok;
  while (std::getline(ss, tok, ',')) {
    if (!tok.empty()) seeds.push_back(std::stoull(tok));
  }
  return seeds;
}

std::vector<double> parse_probs(const std::string& text) {
  // "lo:hi:step" or a comma list.
  if (text.find(':') != std::string::npos) {
    double lo, hi, step;
    if (std::sscanf(text.c_str(), "%lf:%lf:%lf", &lo, &hi, &step) != 3 ||
        step <= 0) {
      throw std::invalid_argument("bad probability range: " + text);
    }
    std::vector<double> probs;
    for (int i = 0; lo + i * step <= hi + 1e-12; ++i) probs.push_back(lo + i * step);
    return probs;
  }
  std::vector<double> probs;
  std::istringstream ss(text);
  std::string tok;
  while (std::getline(ss, tok, ',')) {
    if (!tok.empty()) probs.push_back(std::stod(tok));
  }
  return probs;
}

struct CommonFlags {
  std::string preset;
  std::string config_file;
  std::string out;
  std::string name;

  harness::RunConfig assemble() const {
    harness::RunConfig cfg;
    if (!config_file.empty()) {
      cfg = harness::RunConfig::from_json_text(
          harness::read_text_file(config_file), preset);
    } else {
      cfg = harness::RunConfig::preset_defaults(preset.empty() ? "desk" : preset);
    }
    return cfg;
  }

  std::string run_dir(const std::string& fallback) const {
    if (!out.empty()) return out;
    return (fs::path(output_root()) / (name.empty() ? fallback : name)).string();
  }
};

int cmd_train(const CommonFlags& common, harness::RunConfig cfg) {
  cfg.validate();
  const std::string dir = common.run_dir(
      "train-" + cfg.method + "-" + cfg.intervals + "-s" + std::to_string(cfg.seed));
  cfg.out_dir = dir;
  fs::create_directories(dir);

  harness::RunManifest manifest;
  manifest.command = "train";
  manifest.config = cfg;
  manifest.started_at = harness::timestamp_now();
  manifest.write(dir);

  const std::string log_path = (fs::path(dir) / "episodes.csv").string();
  std::ofstream log(log_path, std::ios::trunc);
  if (!log) throw std::runtime_error("cannot write " + log_path);
  harness::write_episode_log_header(log);

  const rl::TrainConfig tcfg = cfg.train_config();
  const rl::TrainRunResult result =
      rl::run_training(tcfg, [&](const rl::EpisodeRecord& rec) {
        harness::write_episode_record(log, rec);
        log.flush();
        std::cout << "episode " << rec.episode << " reward " << rec.reward
                  << " passing " << rec.passing_time_s << "s switches "
                  << rec.switches << (rec.aborted ? " [watchdog]" : "") << "\n";
      });

  manifest.finished_at = harness::timestamp_now();
  manifest.status = "complete";
  manifest.checkpoints = result.checkpoints;
  manifest.outputs = {log_path};
  manifest.aborted_episodes = result.aborted_episodes;
  manifest.write(dir);
  std::cout << "run complete: " << dir << "\n";
  if (!result.final_policy_checkpoint.empty()) {
    std::cout << "final policy: " << result.final_policy_checkpoint << "\n";
  }
  return 0;
}

scen::EvalSettings eval_settings(const harness::RunConfig& cfg, int runs,
                                 uint64_t base_seed, const std::string& seeds_csv,
                                 int jobs, const std::string& trace_dir) {
  scen::EvalSettings st;
  st.vehicle = cfg.vehicle;
  st.flow = cfg.flow;
  st.watchdog_s = cfg.watchdog_s;
  st.runs = runs;
  st.base_seed = base_seed;
  if (!seeds_csv.empty()) {
    st.seeds = parse_seed_list(seeds_csv);
    st.runs = static_cast<int>(st.seeds.size());
  }
  st.jobs = jobs;
  st.trace_dir = trace_dir;
  return st;
}

scen::PolicyRef load_policy(const std::string& checkpoint, bool baseline,
                            const std::string& intervals) {
  if (baseline) return scen::PolicyRef::predefined();
  scen::PolicyRef policy = scen::PolicyRef::from_checkpoint(checkpoint);
  if (!intervals.empty()) {
    const int expected = intervals == "variable" ? 32 : 8;
    if (policy.actions.n_actions() != expected) {
      throw net::CheckpointError(
          net::CheckpointError::Kind::mismatch,
          "checkpoint has " + std::to_string(policy.actions.n_actions()) +
              " actions but --intervals " + intervals + " expects " +
              std::to_string(expected));
    }
  }
  return policy;
}

int cmd_eval(const CommonFlags& common, harness::RunConfig cfg,
             const std::string& checkpoint, bool baseline, int runs,
             uint64_t base_seed, const std::string& seeds_csv, int jobs,
             bool dump, const std::string& intervals) {
  cfg.validate();
  const std::string dir = common.run_dir(
      std::string("eval-") + (baseline ? "predefined" : fs::path(checkpoint).stem().string()) +
      "-" + cfg.scenario);
  fs::create_directories(dir);

  harness::RunManifest manifest;
  manifest.command = "eval";
  manifest.config = cfg;
  manifest.started_at = harness::timestamp_now();
  manifest.write(dir);

  const scen::PolicyRef policy = load_policy(checkpoint, baseline, intervals);
  const scen::EvalSettings st =
      eval_settings(cfg, runs, base_seed, seeds_csv, jobs,
                    dump ? (fs::path(dir) / "traces").string() : "");
  const scen::MetricsReport report =
      scen::evaluate_policy(policy, cfg.scenario_config(), st);

  const std::string report_path = (fs::path(dir) / "report.csv").string();
  std::ofstream out(report_path, std::ios::trunc);
  scen::write_report_csv(report, out);

  manifest.finished_at = harness::timestamp_now();
  manifest.status = "complete";
  manifest.outputs = {report_path};
  manifest.write(dir);

  std::cout << "scenario " << cfg.scenario << ", " << report.runs
            << " runs\n  mean passing time " << report.mean_passing
            << " s\n  mean total waiting " << report.mean_waiting
            << " s\n  mean switches " << report.mean_switches
            << "\n  mean reward " << report.mean_reward << "\n  report "
            << report_path << "\n";
  return 0;
}

int cmd_sweep(const CommonFlags& common, harness::RunConfig cfg,
              std::vector<std::string> checkpoints, bool baseline,
              const std::string& probs_text, int runs, uint64_t base_seed,
              int jobs) {
  cfg.validate();
  const std::vector<double> probs = probs_text.empty()
                                        ? scen::default_malfunction_probs()
                                        : parse_probs(probs_text);
  const std::string dir = common.run_dir("sweep-" + cfg.scenario);
  fs::create_directories(dir);

  harness::RunManifest manifest;
  manifest.command = "sweep";
  manifest.config = cfg;
  manifest.started_at = harness::timestamp_now();
  manifest.write(dir);

  struct Entry {
    std::string label;
    scen::PolicyRef policy;
  };
  std::vector<Entry> entries;
  if (baseline) entries.push_back({"predefined", scen::PolicyRef::predefined()});
  for (const std::string& ck : checkpoints) {
    entries.push_back(
        {fs::path(ck).stem().string(), scen::PolicyRef::from_checkpoint(ck)});
  }
  if (entries.empty()) {
    throw std::invalid_argument("sweep needs --baseline and/or --checkpoint");
  }

  const scen::EvalSettings st =
      eval_settings(cfg, runs, base_seed, "", jobs, "");
  for (const Entry& e : entries) {
    const auto sweep =
        scen::malfunction_sweep(e.policy, cfg.scenario_config(), probs, st);
    const std::string path =
        (fs::path(dir) / ("sweep_" + e.label + ".csv")).string();
    std::ofstream out(path, std::ios::trunc);
    scen::write_sweep_csv(sweep, out);
    manifest.outputs.push_back(path);
    std::cout << e.label << ":\n";
    for (const auto& pt : sweep) {
      std::cout << "  p=" << pt.probability << " mean passing "
                << pt.report.mean_passing << " s\n";
    }
  }

  manifest.finished_at = harness::timestamp_now();
  manifest.status = "complete";
  manifest.write(dir);
  std::cout << "tables in " << dir << "\n";
  return 0;
}

int cmd_replay(const std::string& dump_path) {
  std::ifstream in(dump_path);
  if (!in) throw std::runtime_error("cannot open dump: " + dump_path);
  const harness::ReplaySummary summary = harness::summarize_trace(in);
  harness::print_summary(summary, std::cout);
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"crossflow: deep-RL traffic-light lab for a four-way intersection"};
  app.require_subcommand(1);

  CommonFlags common;
  harness::RunConfig flag_overrides;  // only fields the user touched apply

  auto add_common = [&](CLI::App* cmd) {
    cmd->add_option("--preset", common.preset, "desk or paper defaults");
    cmd->add_option("--config", common.config_file, "JSON config file");
    cmd->add_option("--out", common.out, "output directory (overrides root)");
    cmd->add_option("--name", common.name, "run name under the output root");
  };

  // train
  auto* train = app.add_subcommand("train", "train a control agent");
  add_common(train);
  std::string method, intervals, scenario;
  int episodes = -1, vehicles = -1, ckpt_every = -1;
  uint64_t seed = 0;
  bool seed_set = false, store_exec = false;
  double lr = -1, gamma = -1, disturbance = -1, collision_prob = -1,
         watchdog = -1, entropy = -1;
  int rollout = -1, passes = -1;
  train->add_option("--method", method, "dqn | ddqn | ppo");
  train->add_option("--intervals", intervals, "fixed | variable");
  train->add_option("--episodes", episodes, "training episodes");
  train->add_option("--seed", seed, "run seed")->each([&](const std::string&) {
    seed_set = true;
  });
  train->add_option("--scenario", scenario,
                    "balanced | collision-in | collision-out | malfunction | "
                    "unbalanced");
  train->add_option("--vehicles", vehicles, "spawn target");
  train->add_option("--watchdog", watchdog, "episode watchdog, seconds");
  train->add_option("--lr", lr, "initial learning rate");
  train->add_option("--gamma", gamma, "discount factor");
  train->add_option("--rollout", rollout, "PPO rollout size");
  train->add_option("--passes", passes, "PPO gradient passes per rollout");
  train->add_option("--entropy", entropy, "PPO entropy bonus coefficient");
  train->add_option("--disturbance", disturbance,
                    "action disturbance probability");
  train->add_option("--collision-prob", collision_prob,
                    "collision probability per crossing");
  train->add_option("--checkpoint-every", ckpt_every, "episodes per checkpoint");
  train->add_flag("--store-executed", store_exec,
                  "store the executed action in experiences");

  // eval
  auto* eval = app.add_subcommand("eval", "evaluate a policy or the baseline");
  add_common(eval);
  std::string checkpoint, seeds_csv, eval_intervals, eval_scenario;
  bool baseline = false, dump = false;
  int runs = 10, jobs = 1, eval_vehicles = -1;
  uint64_t eval_seed = 100;
  eval->add_option("--checkpoint", checkpoint, "policy checkpoint to load");
  eval->add_flag("--baseline", baseline, "evaluate the predefined cycler");
  eval->add_option("--scenario", eval_scenario, "scenario preset");
  eval->add_option("--runs", runs, "number of evaluation runs");
  eval->add_option("--seed", eval_seed, "base seed (run i derives from it)");
  eval->add_option("--seeds", seeds_csv, "explicit comma-separated seeds");
  eval->add_option("--jobs", jobs, "parallel evaluation workers");
  eval->add_option("--vehicles", eval_vehicles, "spawn target");
  eval->add_option("--intervals", eval_intervals,
                   "expected action space of the checkpoint");
  eval->add_flag("--dump", dump, "write per-run trajectory dumps");

  // sweep
  auto* sweep = app.add_subcommand("sweep", "malfunction-probability sweep");
  add_common(sweep);
  std::vector<std::string> sweep_ckpts;
  std::string probs_text, sweep_scenario;
  bool sweep_baseline = false;
  int sweep_runs = 20, sweep_jobs = 1, sweep_vehicles = -1;
  uint64_t sweep_seed = 100;
  sweep->add_option("--checkpoint", sweep_ckpts, "checkpoint(s) to sweep");
  sweep->add_flag("--baseline", sweep_baseline, "include the predefined cycler");
  sweep->add_option("--probs", probs_text, "lo:hi:step or comma list");
  sweep->add_option("--runs", sweep_runs, "runs per sweep point");
  sweep->add_option("--seed", sweep_seed, "base seed");
  sweep->add_option("--jobs", sweep_jobs, "parallel workers");
  sweep->add_option("--scenario", sweep_scenario, "base scenario preset");
  sweep->add_option("--vehicles", sweep_vehicles, "spawn target");

  // replay
  auto* replay = app.add_subcommand("replay", "summarize a trajectory dump");
  std::string dump_path;
  replay->add_option("--dump", dump_path, "trajectory dump file")->required();

  CLI11_PARSE(app, argc, argv);

  try {
    if (app.got_subcommand(train)) {
      harness::RunConfig cfg = common.assemble();
      if (!method.empty()) cfg.method = method;
      if (!intervals.empty()) cfg.intervals = intervals;
      if (episodes >= 0) cfg.episodes = episodes;
      if (seed_set) cfg.seed = seed;
      if (!scenario.empty()) cfg.scenario = scenario;
      if (vehicles >= 0) cfg.total_vehicles = vehicles;
      if (watchdog > 0) cfg.watchdog_s = watchdog;
      if (lr > 0) cfg.hyper.lr = lr;
      if (gamma >= 0) cfg.hyper.gamma = gamma;
      if (rollout > 0) cfg.hyper.rollout = rollout;
      if (passes > 0) cfg.hyper.ppo_passes = passes;
      if (entropy >= 0) cfg.hyper.entropy_coef = entropy;
      if (disturbance >= 0) cfg.action_disturbance_prob = disturbance;
      if (collision_prob >= 0) cfg.collision_probability = collision_prob;
      if (ckpt_every >= 0) cfg.checkpoint_every = ckpt_every;
      if (store_exec) cfg.store_executed_action = true;
      return cmd_train(common, cfg);
    }
    if (app.got_subcommand(eval)) {
      harness::RunConfig cfg = common.assemble();
      if (!eval_scenario.empty()) cfg.scenario = eval_scenario;
      if (eval_vehicles >= 0) cfg.total_vehicles = eval_vehicles;
      if (!baseline && checkpoint.empty()) {
        throw std::invalid_argument("eval needs --checkpoint or --baseline");
      }
      return cmd_eval(common, cfg, checkpoint, baseline, runs, eval_seed,
                      seeds_csv, jobs, dump, eval_intervals);
    }
    if (app.got_subcommand(sweep)) {
      harness::RunConfig cfg = common.assemble();
      if (!sweep_scenario.empty()) cfg.scenario = sweep_scenario;
      if (sweep_vehicles >= 0) cfg.total_vehicles = sweep_vehicles;
      return cmd_sweep(common, cfg, sweep_ckpts, sweep_baseline, probs_text,
                       sweep_runs, sweep_seed, sweep_jobs);
    }
    if (app.got_subcommand(replay)) {
      return cmd_replay(dump_path);
    }
  } catch (const harness::ConfigError& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return 2;
  } catch (const net::CheckpointError& e) {
    std::cerr << "checkpoint error: " << e.what() << "\n";
    return 4;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 3;
  }
  return 1;
}
