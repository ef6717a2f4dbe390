#pragma once

#include <cstdint>
#include <vector>

#include "crossflow/net/network.hpp"
#include "crossflow/obs/state.hpp"

namespace crossflow::rl {

// Waiting-time channel divisor; keeps activations near unit scale.
constexpr float kWaitingNormal = 300.0f;

constexpr int kGridInputDim =
    3 * obs::kGridRows * obs::kGridCols;  // channel-major, row-major

// Writes one observation into batch column `col`, normalizing velocity by
// max_speed and waiting by kWaitingNormal.
inline void pack_state(const obs::StateTensor& s, float max_speed,
                       net::MatX<float>& grid, net::MatX<float>& side,
                       int col) {
  constexpr int plane = obs::kGridRows * obs::kGridCols;
  for (int r = 0; r < obs::kGridRows; ++r) {
    for (int c = 0; c < obs::kGridCols; ++c) {
      const int at = r * obs::kGridCols + c;
      grid(at, col) = s.position(r, c);
      grid(plane + at, col) = s.velocity(r, c) / max_speed;
      grid(2 * plane + at, col) = s.waiting(r, c) / kWaitingNormal;
    }
  }
  side.col(col) = s.phase;
}

// Sparse snapshot for replay storage: only occupied cells are kept.
struct CompactState {
  std::vector<uint16_t> cell;  // row * cols + col
  std::vector<float> speed;
  std::vector<float> waiting;
  std::array<float, sim::kSignalCount> phase{};

  static CompactState from(const obs::StateTensor& s) {
    CompactState out;
    for (int r = 0; r < obs::kGridRows; ++r) {
      for (int c = 0; c < obs::kGridCols; ++c) {
        if (s.position(r, c) != 0.0f) {
          out.cell.push_back(static_cast<uint16_t>(r * obs::kGridCols + c));
          out.speed.push_back(s.velocity(r, c));
          out.waiting.push_back(s.waiting(r, c));
        }
      }
    }
    for (int i = 0; i < sim::kSignalCount; ++i) out.phase[i] = s.phase(i);
    return out;
  }

  void pack(float max_speed, net::MatX<float>& grid, net::MatX<float>& side,
            int col) const {
    constexpr int plane = obs::kGridRows * obs::kGridCols;
    grid.col(col).setZero();
    for (std::size_t i = 0; i < cell.size(); ++i) {
      const int at = cell[i];
      grid(at, col) = 1.0f;
      grid(plane + at, col) = speed[i] / max_speed;
      grid(2 * plane + at, col) = waiting[i] / kWaitingNormal;
    }
    for (int i = 0; i < sim::kSignalCount; ++i) side(i, col) = phase[i];
  }
};

}  // namespace crossflow::rl
