#include "crossflow/scen/evaluate.hpp"

#include <cmath>
#include <filesystem>
#include <fstream>
#include <mutex>
#include <ostream>
#include <thread>

namespace crossflow::scen {

namespace fs = std::filesystem;

PolicyRef PolicyRef::from_checkpoint(const std::string& path) {
  const net::CheckpointInfo info = net::read_checkpoint_info(path);
  PolicyRef p;
  p.kind = Kind::network;
  p.actions = rl::ActionSpace::for_n_actions(info.n_actions);
  p.spec = net::NetworkSpec::controller(info.head, info.n_actions);
  p.params = net::load_params(path, p.spec);
  return p;
}

PolicyRef PolicyRef::from_params(const net::NetworkSpec& spec,
                                 net::Parameters<float> params) {
  PolicyRef p;
  p.kind = Kind::network;
  p.actions = rl::ActionSpace::for_n_actions(spec.n_actions);
  p.spec = spec;
  p.params = std::move(params);
  return p;
}

namespace {

RunMetrics run_one(const PolicyRef& policy, const ScenarioConfig& scenario,
                   const EvalSettings& settings, uint64_t seed,
                   const std::string& trace_path) {
  rl::TrafficEnv env(
      scenario.env_config(settings.vehicle, settings.flow, settings.watchdog_s),
      policy.actions);
  std::ofstream trace;
  env.reset(seed);
  if (policy.kind == PolicyRef::Kind::predefined) {
    // Start one phase "before" the loop so the first command is a switch and
    // the cycle runs a clean 8 x (5 + 10) s from t = 0.
    env.world().controller_mut().force_phase(sim::kPhaseCount - 1);
  }
  if (!trace_path.empty()) {
    trace.open(trace_path, std::ios::trunc);
    env.world().set_trace(&trace);
  }

  PredefinedController cycle;
  net::MatX<float> grid(rl::kGridInputDim, 1), side(sim::kSignalCount, 1);
  const float max_speed = static_cast<float>(settings.vehicle.max_speed);
  while (!env.done()) {
    int action;
    if (policy.kind == PolicyRef::Kind::predefined) {
      action = cycle.next_phase();
    } else {
      rl::pack_state(env.state(), max_speed, grid, side, 0);
      const auto out = net::forward(policy.spec, policy.params, grid, side);
      action = rl::greedy_action(out.col(0));
    }
    env.step(action);
  }

  RunMetrics m;
  m.seed = seed;
  m.passing_time_s = env.passing_time();
  m.waiting_time_s = env.total_waiting();
  m.switches = env.switches();
  m.reward = env.reward_sum();
  m.aborted = env.aborted();
  return m;
}

}  // namespace

MetricsReport evaluate_policy(const PolicyRef& policy,
                              const ScenarioConfig& scenario,
                              const EvalSettings& settings) {
  if (settings.runs <= 0) {
    throw std::invalid_argument("evaluation needs at least one run");
  }
  std::vector<uint64_t> seeds = settings.seeds;
  if (seeds.empty()) {
    for (int i = 0; i < settings.runs; ++i) {
      seeds.push_back(Rng::derive(settings.base_seed, i));
    }
  }
  if (static_cast<int>(seeds.size()) != settings.runs) {
    throw std::invalid_argument("seed list length must match runs");
  }
  if (!settings.trace_dir.empty()) fs::create_directories(settings.trace_dir);

  MetricsReport report;
  report.runs = settings.runs;
  report.rows.resize(settings.runs);
  const int jobs = std::max(1, settings.jobs);
  std::vector<std::thread> pool;
  std::size_t next = 0;
  auto worker = [&](int run) {
    std::string trace_path;
    if (!settings.trace_dir.empty()) {
      trace_path =
          (fs::path(settings.trace_dir) / ("trace_run" + std::to_string(run) + ".csv"))
              .string();
    }
    report.rows[run] = run_one(policy, scenario, settings, seeds[run], trace_path);
  };
  if (jobs == 1) {
    for (int r = 0; r < settings.runs; ++r) worker(r);
  } else {
    std::mutex mu;
    for (int t = 0; t < jobs; ++t) {
      pool.emplace_back([&] {
        for (;;) {
          std::size_t r;
          {
            std::lock_guard<std::mutex> lock(mu);
            if (next >= report.rows.size()) return;
            r = next++;
          }
          worker(static_cast<int>(r));
        }
      });
    }
    for (auto& th : pool) th.join();
  }

  double sp = 0, sw = 0, ss = 0, sr = 0;
  for (const RunMetrics& m : report.rows) {
    sp += m.passing_time_s;
    sw += m.waiting_time_s;
    ss += static_cast<double>(m.switches);
    sr += m.reward;
  }
  const double n = report.runs;
  report.mean_passing = sp / n;
  report.mean_waiting = sw / n;
  report.mean_switches = ss / n;
  report.mean_reward = sr / n;
  double var = 0;
  for (const RunMetrics& m : report.rows) {
    var += (m.passing_time_s - report.mean_passing) *
           (m.passing_time_s - report.mean_passing);
  }
  report.se_passing = report.runs > 1
                          ? std::sqrt(var / (n - 1)) / std::sqrt(n)
                          : 0.0;
  return report;
}

std::vector<double> default_malfunction_probs() {
  std::vector<double> probs;
  for (int i = 1; i <= 7; ++i) probs.push_back(i * 5 / 100.0);
  return probs;
}

std::vector<SweepPoint> malfunction_sweep(const PolicyRef& policy,
                                          const ScenarioConfig& base_scenario,
                                          const std::vector<double>& probs,
                                          const EvalSettings& settings) {
  std::vector<SweepPoint> out;
  int point = 0;
  for (double p : probs) {
    ScenarioConfig scenario = base_scenario;
    scenario.action_disturbance_prob = p;
    EvalSettings st = settings;
    if (st.seeds.empty()) {
      st.base_seed = Rng::derive(settings.base_seed, 9000 + point);
    }
    out.push_back(SweepPoint{p, evaluate_policy(policy, scenario, st)});
    ++point;
  }
  return out;
}

void write_report_csv(const MetricsReport& report, std::ostream& out) {
  out << "runs,mean_passing_s,mean_waiting_s,mean_switches,mean_reward,se_passing\n";
  out << report.runs << ',' << report.mean_passing << ',' << report.mean_waiting
      << ',' << report.mean_switches << ',' << report.mean_reward << ','
      << report.se_passing << "\n";
  out << "run,seed,passing_s,waiting_s,switches,reward,aborted\n";
  for (std::size_t i = 0; i < report.rows.size(); ++i) {
    const RunMetrics& m = report.rows[i];
    out << i << ',' << m.seed << ',' << m.passing_time_s << ','
        << m.waiting_time_s << ',' << m.switches << ',' << m.reward << ','
        << (m.aborted ? 1 : 0) << "\n";
  }
}

void write_sweep_csv(const std::vector<SweepPoint>& sweep, std::ostream& out) {
  out << "probability,runs,mean_passing_s,se_passing,mean_waiting_s,"
         "mean_switches,mean_reward\n";
  for (const SweepPoint& p : sweep) {
    out << p.probability << ',' << p.report.runs << ',' << p.report.mean_passing
        << ',' << p.report.se_passing << ',' << p.report.mean_waiting << ','
        << p.report.mean_switches << ',' << p.report.mean_reward << "\n";
  }
}

}  // namespace crossflow::scen
