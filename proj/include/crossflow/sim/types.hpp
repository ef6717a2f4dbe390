#pragma once

#include <array>
#include <stdexcept>
#include <string>

namespace crossflow::sim {

enum class Approach : int { N = 0, S = 1, E = 2, W = 3 };
enum class Movement : int { right = 0, through = 1, left = 2, u_turn = 3 };
enum class LaneDir : int { incoming = 0, outgoing = 1 };
enum class LaneSlot : int { outer = 0, middle = 1, inner = 2 };

constexpr int kApproachCount = 4;
constexpr int kLaneCount = 24;        // 4 approaches x {in,out} x 3 slots
constexpr int kIncomingLaneCount = 12;
constexpr int kPathCount = 16;        // 4 approaches x 4 movements
constexpr int kSignalCount = 12;      // 4 approaches x {right, through, left+U}
constexpr double kLaneLength = 300.0;

inline const char* approach_name(Approach a) {
  static constexpr const char* names[] = {"N", "S", "E", "W"};
  return names[static_cast<int>(a)];
}

inline const char* movement_name(Movement m) {
  static constexpr const char* names[] = {"right", "through", "left", "u_turn"};
  return names[static_cast<int>(m)];
}

// Uniform vehicle geometry and dynamics limits.
struct VehicleSpec {
  double length = 3.0;      // m, front to rear bumper
  double min_gap = 2.0;     // m, rear bumper to next front bumper at rest
  double max_accel = 1.0;   // m/s^2
  double max_decel = 4.5;   // m/s^2
  double max_speed = 13.89; // m/s (not in the vehicle table; urban default)

  void validate() const {
    if (length <= 0 || min_gap <= 0 || max_accel <= 0 || max_decel <= 0 ||
        max_speed <= 0) {
      throw std::invalid_argument("VehicleSpec: all fields must be > 0");
    }
  }
};

// Lanes are identified by a dense id: approach*6 + dir*3 + slot. This is also
// the row order of the observation grid (N,S,E,W x in/out x outer/middle/inner).
inline int lane_id(Approach a, LaneDir d, LaneSlot s) {
  return static_cast<int>(a) * 6 + static_cast<int>(d) * 3 +
         static_cast<int>(s);
}

inline Approach lane_approach(int lane) {
  return static_cast<Approach>(lane / 6);
}
inline LaneDir lane_dir(int lane) {
  return static_cast<LaneDir>((lane / 3) % 2);
}
inline LaneSlot lane_slot(int lane) { return static_cast<LaneSlot>(lane % 3); }

inline bool lane_is_incoming(int lane) {
  return lane_dir(lane) == LaneDir::incoming;
}

inline std::string lane_name(int lane) {
  return std::string(approach_name(lane_approach(lane))) +
         (lane_is_incoming(lane) ? "-in-" : "-out-") +
         std::array<const char*, 3>{"outer", "middle",
                                    "inner"}[lane % 3];
}

// Incoming slot that serves a movement: right turns from the outer lane,
// through from the middle lane, left and U-turns from the inner lane.
inline LaneSlot slot_for_movement(Movement m) {
  switch (m) {
    case Movement::right: return LaneSlot::outer;
    case Movement::through: return LaneSlot::middle;
    default: return LaneSlot::inner;
  }
}

// Outgoing slot a movement merges into.
inline LaneSlot exit_slot_for_movement(Movement m) {
  return slot_for_movement(m);
}

// Right-hand traffic: a southbound vehicle (from N) turns right toward W, etc.
inline Approach destination_approach(Approach origin, Movement m) {
  static constexpr Approach table[4][4] = {
      /* N */ {Approach::W, Approach::S, Approach::E, Approach::N},
      /* S */ {Approach::E, Approach::N, Approach::W, Approach::S},
      /* E */ {Approach::N, Approach::W, Approach::S, Approach::E},
      /* W */ {Approach::S, Approach::E, Approach::N, Approach::W}};
  return table[static_cast<int>(origin)][static_cast<int>(m)];
}

struct Route {
  Approach origin = Approach::N;
  Movement movement = Movement::through;

  Approach destination() const { return destination_approach(origin, movement); }
  int incoming_lane() const {
    return lane_id(origin, LaneDir::incoming, slot_for_movement(movement));
  }
  int outgoing_lane() const {
    return lane_id(destination(), LaneDir::outgoing,
                   exit_slot_for_movement(movement));
  }
  // Junction path id, one per (origin, movement).
  int path_id() const {
    return static_cast<int>(origin) * 4 + static_cast<int>(movement);
  }
  bool operator==(const Route&) const = default;
};

inline Route path_route(int path) {
  return Route{static_cast<Approach>(path / 4),
               static_cast<Movement>(path % 4)};
}

// In-junction travel distance per movement (m). Coarse box geometry: a right
// turn hugs the corner, a left turn sweeps across, a U-turn doubles back.
inline double path_length(Movement m) {
  static constexpr double lengths[] = {10.0, 20.0, 25.0, 15.0};
  return lengths[static_cast<int>(m)];
}

enum class VehicleStatus {
  queued_for_entry,
  on_incoming,
  crossing,
  on_outgoing,
  exited,
  crashed,
};

inline const char* status_name(VehicleStatus s) {
  static constexpr const char* names[] = {"queued",   "incoming", "crossing",
                                          "outgoing", "exited",   "crashed"};
  return names[static_cast<int>(s)];
}

struct Vehicle {
  int id = -1;
  Route route;
  VehicleStatus status = VehicleStatus::queued_for_entry;
  int lane = -1;          // current lane id while on a lane (or crash site)
  double pos = 0.0;       // front bumper, meters from lane start
  double path_pos = 0.0;  // progress along the junction path while crossing
  double speed = 0.0;     // m/s
  double waiting = 0.0;   // s continuously stopped (speed < 0.1)
  bool removed = false;   // crashed vehicle taken off with its block

  bool on_network() const {
    return status == VehicleStatus::on_incoming ||
           status == VehicleStatus::crossing ||
           status == VehicleStatus::on_outgoing;
  }
};

}  // namespace crossflow::sim
