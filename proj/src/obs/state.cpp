#include "crossflow/obs/state.hpp"

#include <ostream>
#include <stdexcept>

namespace crossflow::obs {

namespace {

// Grid slot of a vehicle, folding junction occupants into their origin lane.
std::pair<int, int> attributed_cell(const sim::Vehicle& v, double length) {
  using sim::VehicleStatus;
  if (v.status == VehicleStatus::crossing ||
      (v.status == VehicleStatus::crashed && v.lane < 0)) {
    return {lane_row(v.route.incoming_lane()), kGridCols - 1};
  }
  return {lane_row(v.lane), cell_of(v.pos, length)};
}

}  // namespace

StateTensor encode_state(const sim::SimWorld& world) {
  StateTensor t;
  const double length = world.vehicle_spec().length;
  for (const sim::Vehicle& v : world.vehicles()) {
    const bool present =
        v.on_network() ||
        (v.status == sim::VehicleStatus::crashed && !v.removed);
    if (!present) continue;
    const auto [row, cell] = attributed_cell(v, length);
    if (t.position(row, cell) != 0.0f) {
      throw std::logic_error("two vehicle centers mapped to one cell");
    }
    t.position(row, cell) = 1.0f;
    t.velocity(row, cell) = static_cast<float>(v.speed);
    t.waiting(row, cell) = static_cast<float>(v.waiting);
  }
  const sim::SignalController& ctl = world.controller();
  if (ctl.mode() == sim::SignalController::Mode::green) {
    const auto& greens = sim::PhaseTable::instance().greens(ctl.current_phase());
    for (int s = 0; s < sim::kSignalCount; ++s) {
      t.phase(s) = greens[s] ? 1.0f : 0.0f;
    }
  }
  return t;
}

void dump_tensor(const StateTensor& t, std::ostream& out) {
  auto grid = [&](const char* name, const Eigen::MatrixXf& m) {
    out << name << "\n";
    for (int r = 0; r < m.rows(); ++r) {
      out << sim::lane_name(r) << ':';
      for (int c = 0; c < m.cols(); ++c) out << ' ' << m(r, c);
      out << "\n";
    }
  };
  grid("position", t.position);
  grid("velocity", t.velocity);
  grid("waiting", t.waiting);
  out << "phase:";
  for (int s = 0; s < t.phase.size(); ++s) out << ' ' << t.phase(s);
  out << "\n";
}

}  // namespace crossflow::obs
