#pragma once

#include <string>

#include "crossflow/rl/env.hpp"

namespace crossflow::scen {

// A named evaluation/training setting: demand shape, disturbances, and the
// spawn target. Presets: balanced, collision-in, collision-out, malfunction,
// unbalanced.
struct ScenarioConfig {
  std::string name = "balanced";
  sim::FlowSchedule flow_schedule{};  // empty = balanced demand
  sim::CollisionSettings collisions{};
  double action_disturbance_prob = 0.0;
  int total_vehicles = 808;

  static ScenarioConfig preset(const std::string& name);

  rl::EnvConfig env_config(const sim::VehicleSpec& vehicle,
                           const sim::FlowTable& flow,
                           double watchdog_s) const {
    rl::EnvConfig cfg;
    cfg.vehicle = vehicle;
    cfg.flow = flow;
    cfg.flow_schedule = flow_schedule;
    cfg.total_vehicles = total_vehicles;
    cfg.collisions = collisions;
    cfg.action_disturbance_prob = action_disturbance_prob;
    cfg.watchdog_s = watchdog_s;
    return cfg;
  }
};

// Three-segment demand: balanced for 500 s, then the east road cut to a
// quarter for 500 s, then east restored while the others run at a quarter;
// the final segment persists until the spawn target is met.
sim::FlowSchedule unbalanced_schedule();

// The fixed-time baseline: loops the eight phases in order with 10 s greens
// (every decision is a switch, so one cycle is 8 x 15 s = 120 s).
class PredefinedController {
 public:
  int next_phase() {
    const int p = next_;
    next_ = (next_ + 1) % sim::kPhaseCount;
    return p;
  }
  void reset() { next_ = 0; }

 private:
  int next_ = 0;
};

}  // namespace crossflow::scen
