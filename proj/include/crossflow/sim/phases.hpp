#pragma once

#include <array>
#include <bitset>
#include <stdexcept>

#include "crossflow/sim/types.hpp"

namespace crossflow::sim {

constexpr int kPhaseCount = 8;

// Movement signal index over the 12 incoming-lane signals. Left and U-turn
// share the inner lane and therefore one signal head.
inline int signal_index(Approach a, Movement m) {
  return static_cast<int>(a) * 3 + static_cast<int>(slot_for_movement(m));
}

// The eight-phase plan. 0..3 are the paired phases (N+S through/right,
// N+S left/U, E+W through/right, E+W left/U); 4..7 give one approach all of
// its movements (N, S, E, W).
class PhaseTable {
 public:
  PhaseTable();

  const std::bitset<kSignalCount>& greens(int phase) const {
    return greens_.at(phase);
  }
  bool is_green(int phase, Approach a, Movement m) const {
    return greens_[phase][signal_index(a, m)];
  }
  // Paths are compatible when some phase greens both of their signals (they
  // are then non-conflicting by construction of the plan).
  bool compatible(int path_a, int path_b) const {
    return compat_[path_a][path_b];
  }

  static const PhaseTable& instance();

 private:
  std::array<std::bitset<kSignalCount>, kPhaseCount> greens_;
  std::array<std::bitset<kPathCount>, kPathCount> compat_;
};

// Signal head state machine. A phase change inserts an all-red transition of
// exactly 5 s; re-choosing the current phase extends the green by 5 s.
class SignalController {
 public:
  enum class Mode { green, transition };

  static constexpr double kTransitionSeconds = 5.0;
  static constexpr double kExtendSeconds = 5.0;

  int current_phase() const { return current_phase_; }
  Mode mode() const { return mode_; }
  double time_remaining() const { return time_remaining_; }
  long switch_count() const { return switch_count_; }
  bool at_decision() const {
    return mode_ == Mode::green && time_remaining_ <= 0.0;
  }

  // Issues the next phase command. Only legal at a decision point.
  void command(int target_phase, double green_interval) {
    if (target_phase < 0 || target_phase >= kPhaseCount) {
      throw std::invalid_argument("phase id out of range");
    }
    if (green_interval <= 0.0) {
      throw std::invalid_argument("green interval must be > 0");
    }
    if (!at_decision()) {
      throw std::logic_error("phase command issued mid-interval");
    }
    if (target_phase == current_phase_) {
      time_remaining_ = kExtendSeconds;
    } else {
      mode_ = Mode::transition;
      time_remaining_ = kTransitionSeconds;
      pending_phase_ = target_phase;
      pending_interval_ = green_interval;
      ++switch_count_;
    }
  }

  void tick(double dt) {
    time_remaining_ -= dt;
    if (mode_ == Mode::transition && time_remaining_ <= 1e-9) {
      mode_ = Mode::green;
      current_phase_ = pending_phase_;
      time_remaining_ = pending_interval_;
    }
    if (time_remaining_ < 0.0) time_remaining_ = 0.0;
  }

  bool movement_green(Approach a, Movement m) const {
    return mode_ == Mode::green &&
           PhaseTable::instance().is_green(current_phase_, a, m);
  }

  // Scenario/test hook: jump to a phase without a transition or switch count.
  void force_phase(int phase, double time_remaining = 0.0) {
    current_phase_ = phase;
    mode_ = Mode::green;
    time_remaining_ = time_remaining;
  }

 private:
  int current_phase_ = 0;
  Mode mode_ = Mode::green;
  double time_remaining_ = 0.0;
  long switch_count_ = 0;
  int pending_phase_ = 0;
  double pending_interval_ = 0.0;
};

}  // namespace crossflow::sim
