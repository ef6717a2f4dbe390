#include "crossflow/scen/scenario.hpp"

#include <stdexcept>

namespace crossflow::scen {

sim::FlowSchedule unbalanced_schedule() {
  using sim::FlowSegment;
  const int east = static_cast<int>(sim::Approach::E);
  FlowSegment balanced{0.0, 500.0, {1.0, 1.0, 1.0, 1.0}};
  FlowSegment east_low{500.0, 500.0, {1.0, 1.0, 1.0, 1.0}};
  east_low.approach_mult[east] = 0.25;
  FlowSegment others_low{1000.0, 500.0, {0.25, 0.25, 0.25, 0.25}};
  others_low.approach_mult[east] = 1.0;
  return {balanced, east_low, others_low};
}

ScenarioConfig ScenarioConfig::preset(const std::string& name) {
  ScenarioConfig cfg;
  cfg.name = name;
  if (name == "balanced") {
    return cfg;
  }
  if (name == "collision-in") {
    cfg.collisions.road_class = sim::CollisionSettings::RoadClass::incoming;
    cfg.collisions.probability = 0.02;
    return cfg;
  }
  if (name == "collision-out") {
    cfg.collisions.road_class = sim::CollisionSettings::RoadClass::outgoing;
    cfg.collisions.probability = 0.02;
    return cfg;
  }
  if (name == "malfunction") {
    cfg.action_disturbance_prob = 0.1;
    return cfg;
  }
  if (name == "unbalanced") {
    cfg.flow_schedule = unbalanced_schedule();
    return cfg;
  }
  throw std::invalid_argument(
      "unknown scenario preset: " + name +
      " (expected balanced, collision-in, collision-out, malfunction, "
      "unbalanced)");
}

}  // namespace crossflow::scen
