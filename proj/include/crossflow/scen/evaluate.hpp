#pragma once

#include <iosfwd>
#include <optional>

#include "crossflow/net/checkpoint.hpp"
#include "crossflow/rl/trainer.hpp"
#include "crossflow/scen/scenario.hpp"

namespace crossflow::scen {

// A policy under assessment: either the cycling baseline or a trained network
// acting greedily. The policy carries its own action space.
struct PolicyRef {
  enum class Kind { predefined, network };
  Kind kind = Kind::predefined;
  rl::ActionSpace actions{rl::ActionSpace::Mode::fixed_interval};
  net::NetworkSpec spec;               // network policies only
  net::Parameters<float> params;

  static PolicyRef predefined() { return PolicyRef{}; }
  static PolicyRef from_checkpoint(const std::string& path);
  static PolicyRef from_params(const net::NetworkSpec& spec,
                               net::Parameters<float> params);
};

struct RunMetrics {
  uint64_t seed = 0;
  double passing_time_s = 0.0;
  double waiting_time_s = 0.0;
  long switches = 0;
  double reward = 0.0;
  bool aborted = false;
};

struct MetricsReport {
  int runs = 0;
  double mean_passing = 0.0;
  double mean_waiting = 0.0;
  double mean_switches = 0.0;
  double mean_reward = 0.0;
  double se_passing = 0.0;  // standard error of the passing-time mean
  std::vector<RunMetrics> rows;
};

struct EvalSettings {
  sim::VehicleSpec vehicle{};
  sim::FlowTable flow{};
  double watchdog_s = 10000.0;
  int runs = 10;
  uint64_t base_seed = 100;            // run i uses derive(base_seed, i)
  std::vector<uint64_t> seeds;         // explicit seeds override base_seed
  int jobs = 1;
  std::string trace_dir;               // per-run trajectory dumps if set
};

// Runs one episode per seed and averages the episode metrics.
MetricsReport evaluate_policy(const PolicyRef& policy,
                              const ScenarioConfig& scenario,
                              const EvalSettings& settings);

// Mean passing time (and company) across malfunction probabilities.
struct SweepPoint {
  double probability = 0.0;
  MetricsReport report;
};
std::vector<SweepPoint> malfunction_sweep(const PolicyRef& policy,
                                          const ScenarioConfig& base_scenario,
                                          const std::vector<double>& probs,
                                          const EvalSettings& settings);

std::vector<double> default_malfunction_probs();  // 0.05 .. 0.35 step 0.05

void write_report_csv(const MetricsReport& report, std::ostream& out);
void write_sweep_csv(const std::vector<SweepPoint>& sweep, std::ostream& out);

}  // namespace crossflow::scen
