#pragma once

#include <array>
#include <deque>
#include <iosfwd>
#include <optional>
#include <vector>

#include "crossflow/rng.hpp"
#include "crossflow/sim/phases.hpp"
#include "crossflow/sim/types.hpp"

namespace crossflow::sim {

// Demand per incoming road, vehicles/hour (one value per movement).
struct FlowTable {
  double right = 480.0;
  double through = 600.0;
  double left = 240.0;
  double u_turn = 120.0;

  double rate(Movement m) const {
    switch (m) {
      case Movement::right: return right;
      case Movement::through: return through;
      case Movement::left: return left;
      default: return u_turn;
    }
  }
};

// Piecewise-constant per-approach rate multipliers. Segments must be
// contiguous from t=0; the last segment persists until the spawn target is
// reached. An empty schedule means multipliers of 1 everywhere.
struct FlowSegment {
  double start_s = 0.0;
  double duration_s = 0.0;
  std::array<double, kApproachCount> approach_mult{1.0, 1.0, 1.0, 1.0};
};
using FlowSchedule = std::vector<FlowSegment>;

struct Arrival {
  double time = 0.0;
  Route route;
};

// Draws the full arrival schedule: independent Poisson streams per
// (approach, movement), sampled as one superposed process and truncated at
// `total` vehicles. Sorted by time by construction.
std::vector<Arrival> spawn_schedule(const FlowTable& flow,
                                    const FlowSchedule& schedule, int total,
                                    Rng& rng);

struct CollisionBlock {
  int lane = -1;
  double pos = 0.0;       // front bumper of the leading crashed vehicle
  double start_time = 0.0;
  double duration = 300.0;
  std::vector<int> involved;
};

struct CollisionSettings {
  enum class RoadClass { off, incoming, outgoing };
  RoadClass road_class = RoadClass::off;
  double probability = 0.02;  // per crossing event
};

struct WorldCounts {
  long scheduled = 0;       // schedule entries plus directly placed vehicles
  long pending = 0;         // not yet spawned (future or queued at entry)
  long on_network = 0;      // on_incoming + crossing + on_outgoing
  long exited = 0;
  long crashed_present = 0;
  long crashed_removed = 0;
};

// Discrete-time (dt = 1 s) microscopic model of the four-way intersection.
// Single-threaded; owns its RNG stream, so identical (seed, config, command
// sequence) reproduces bit-identical trajectories.
class SimWorld {
 public:
  static constexpr double kDt = 1.0;
  static constexpr double kStopThreshold = 0.1;  // m/s; below = stopped

  SimWorld(VehicleSpec spec, FlowTable flow, FlowSchedule schedule,
           int total_vehicles, uint64_t seed,
           CollisionSettings collisions = {});

  void step();
  void apply_phase_command(int target_phase, double green_interval);
  bool at_decision() const { return controller_.at_decision(); }
  bool episode_done() const;

  double clock() const { return clock_; }
  const SignalController& controller() const { return controller_; }
  SignalController& controller_mut() { return controller_; }
  const VehicleSpec& vehicle_spec() const { return spec_; }

  const std::vector<Vehicle>& vehicles() const { return vehicles_; }
  const std::vector<int>& lane_vehicles(int lane) const {
    return lane_order_[lane];
  }
  // Vehicle id crossing the given junction path, or -1.
  int path_occupant(int path) const { return path_occupant_[path]; }
  const std::vector<CollisionBlock>& blocks() const { return blocks_; }
  long scheduled_total() const {
    return static_cast<long>(schedule_.size()) + placed_;
  }

  // Episode metrics.
  double total_waiting() const { return total_waiting_; }
  long switch_count() const { return controller_.switch_count(); }
  long exited_count() const { return exited_; }
  WorldCounts counts() const;

  // Scenario/test hook: insert a vehicle directly onto a lane. Infers a route
  // consistent with the lane, validates bounds and spacing. Returns the id.
  int place_vehicle(int lane, double pos, double speed = 0.0,
                    double waiting = 0.0);

  // Optional line-delimited trajectory sink (t, id, lane, pos, speed,
  // waiting, status; '#' lines carry signal and block events).
  void set_trace(std::ostream* sink) { trace_ = sink; }

 private:
  struct HeadPlan {
    bool permitted = false;
  };

  double braking_distance(double v) const;   // after this step, max braking
  double stopping_span(double v) const;      // move at v, then max braking
  double safe_speed(double budget) const;    // max v with span(v) <= budget
  bool junction_clear(int lane, const Route& route) const;
  bool entry_permitted(int lane, const Route& route) const;
  double head_budget(const Vehicle& v, int lane, bool* permitted) const;
  double leader_budget(const Vehicle& v, const Vehicle& leader) const;
  double crosser_budget(const Vehicle& v) const;
  const Vehicle* rearmost(int lane) const;
  void land_on_outgoing(Vehicle& v, double front, double speed);
  void relocate_crashed(int vehicle_id);
  void join_block_of(int leader_id, int follower_id);
  CollisionBlock* block_of(int vehicle_id);
  void remove_from_lane(int lane, int id);
  void insert_sorted(int lane, int id);
  void emit_trace();

  VehicleSpec spec_;
  FlowTable flow_;
  FlowSchedule flow_schedule_;
  CollisionSettings collisions_;
  Rng rng_;
  SignalController controller_;

  std::vector<Arrival> schedule_;
  std::size_t next_arrival_ = 0;
  std::array<std::deque<int>, kIncomingLaneCount> entry_queues_;

  std::vector<Vehicle> vehicles_;
  std::array<std::vector<int>, kLaneCount> lane_order_;  // head first
  std::array<int, kPathCount> path_occupant_;
  std::vector<CollisionBlock> blocks_;

  double clock_ = 0.0;
  long spawned_ = 0;   // entered the network from the schedule
  long exited_ = 0;
  long crashed_removed_ = 0;
  long placed_ = 0;
  long active_ = 0;    // on_network() count
  double total_waiting_ = 0.0;

  std::vector<double> new_speed_;
  std::vector<char> emergency_;
  std::ostream* trace_ = nullptr;
  int last_traced_phase_ = -1;
  int last_traced_mode_ = -1;
};

}  // namespace crossflow::sim
