#pragma once

#include <Eigen/Dense>
#include <iosfwd>

#include "crossflow/sim/world.hpp"

namespace crossflow::obs {

constexpr int kGridRows = sim::kLaneCount;  // one row per lane
constexpr int kGridCols = 60;               // 300 m / (length + min_gap)
constexpr double kCellLength = 5.0;

// Observation fed to the networks: three lane-by-cell channels plus the
// 12-entry movement-signal vector (all zeros during a transition).
struct StateTensor {
  Eigen::MatrixXf position{kGridRows, kGridCols};
  Eigen::MatrixXf velocity{kGridRows, kGridCols};
  Eigen::MatrixXf waiting{kGridRows, kGridCols};
  Eigen::VectorXf phase{sim::kSignalCount};

  StateTensor() {
    position.setZero();
    velocity.setZero();
    waiting.setZero();
    phase.setZero();
  }
  bool operator==(const StateTensor& o) const {
    return position == o.position && velocity == o.velocity &&
           waiting == o.waiting && phase == o.phase;
  }
};

// Grid row of a lane; identical to the lane id by construction
// (N,S,E,W x in/out x outer/middle/inner).
inline int lane_row(int lane) { return lane; }

// Cell holding a vehicle center at the given lane position (front bumper).
inline int cell_of(double front_pos, double vehicle_length) {
  const double center = front_pos - vehicle_length / 2.0;
  int cell = static_cast<int>(std::floor(center / kCellLength));
  return std::clamp(cell, 0, kGridCols - 1);
}

// Pure snapshot of the world. Every vehicle on the network occupies exactly
// one cell; vehicles inside the junction are folded into the last cell of
// their origin lane, which the crossing protocol keeps free of other centers.
// Present wrecks are encoded too (they are observable stopped traffic).
StateTensor encode_state(const sim::SimWorld& world);

// Debug dump: one flat text grid per channel, row-major, rows in lane order.
void dump_tensor(const StateTensor& t, std::ostream& out);

}  // namespace crossflow::obs
