#pragma once

#include <functional>
#include <vector>

#include "crossflow/rl/action_space.hpp"
#include "crossflow/sim/world.hpp"

namespace cftest {

using namespace crossflow;

inline sim::SimWorld empty_world(
    sim::CollisionSettings collisions = {},
    sim::VehicleSpec spec = {}) {
  return sim::SimWorld(spec, sim::FlowTable{0, 0, 0, 0}, {}, 0, 1, collisions);
}

inline sim::SimWorld paper_world(uint64_t seed, int total = 808,
                                 sim::CollisionSettings collisions = {},
                                 sim::FlowSchedule schedule = {}) {
  return sim::SimWorld(sim::VehicleSpec{}, sim::FlowTable{}, std::move(schedule),
                       total, seed, collisions);
}

// Step-level invariant checks shared by unit fuzz and the acceptance suite.
struct InvariantStats {
  long steps = 0;
  long vehicles_seen = 0;
};

struct Snapshot {
  std::vector<double> speed;
  std::vector<sim::VehicleStatus> status;
};

inline Snapshot snapshot(const sim::SimWorld& w) {
  Snapshot s;
  for (const auto& v : w.vehicles()) {
    s.speed.push_back(v.speed);
    s.status.push_back(v.status);
  }
  return s;
}

// Runs `fail(message)` on the first violated invariant.
inline void check_step_invariants(
    const sim::SimWorld& w, const Snapshot& before,
    const std::function<void(const char*)>& fail) {
  const auto& spec = w.vehicle_spec();
  // Conservation ledger.
  const sim::WorldCounts c = w.counts();
  if (c.scheduled != c.pending + c.on_network + c.exited + c.crashed_present +
                         c.crashed_removed) {
    fail("conservation ledger out of balance");
  }
  // Per-lane ordering and spacing.
  for (int lane = 0; lane < sim::kLaneCount; ++lane) {
    const auto& ids = w.lane_vehicles(lane);
    for (std::size_t i = 1; i < ids.size(); ++i) {
      const auto& lead = w.vehicles()[ids[i - 1]];
      const auto& follow = w.vehicles()[ids[i]];
      if (follow.pos > lead.pos - spec.length - spec.min_gap + 1e-9) {
        fail("front gap below min_gap");
      }
    }
  }
  // Speed-change bounds for vehicles that stayed in a driving status.
  for (const auto& v : w.vehicles()) {
    if (v.id >= static_cast<int>(before.speed.size())) continue;
    const auto prev_status = before.status[v.id];
    const bool was_driving = prev_status == sim::VehicleStatus::on_incoming ||
                             prev_status == sim::VehicleStatus::crossing ||
                             prev_status == sim::VehicleStatus::on_outgoing;
    if (!was_driving || !v.on_network()) continue;
    const double dv = v.speed - before.speed[v.id];
    if (dv > spec.max_accel + 1e-9) fail("acceleration above max_accel");
    if (dv < -spec.max_decel - 1e-9) fail("deceleration above max_decel");
    if (v.speed < -1e-12 || v.speed > spec.max_speed + 1e-9) {
      fail("speed outside [0, max_speed]");
    }
  }
}

// Drives a world with uniformly random phase commands for `steps` sim
// seconds, checking step invariants throughout.
inline void fuzz_world(sim::SimWorld& w, rl::ActionSpace actions, Rng& rng,
                       int steps, const std::function<void(const char*)>& fail) {
  int t = 0;
  while (t < steps) {
    if (w.at_decision()) {
      const int a = static_cast<int>(rng.uniform_int(actions.n_actions()));
      const auto d = actions.decode(a);
      w.apply_phase_command(d.phase, d.interval);
    }
    const Snapshot before = snapshot(w);
    w.step();
    ++t;
    check_step_invariants(w, before, fail);
    if (w.episode_done()) break;
  }
}

}  // namespace cftest
