#include "crossflow/sim/phases.hpp"

namespace crossflow::sim {

PhaseTable::PhaseTable() {
  auto set = [&](int phase, Approach a, Movement m) {
    greens_[phase].set(signal_index(a, m));
  };
  // Paired phases.
  for (Approach a : {Approach::N, Approach::S}) {
    set(0, a, Movement::through);
    set(0, a, Movement::right);
    set(1, a, Movement::left);  // inner-lane signal also covers U-turns
  }
  for (Approach a : {Approach::E, Approach::W}) {
    set(2, a, Movement::through);
    set(2, a, Movement::right);
    set(3, a, Movement::left);
  }
  // Single-approach phases: all movements of one road.
  for (int i = 0; i < kApproachCount; ++i) {
    auto a = static_cast<Approach>(i);
    set(4 + i, a, Movement::right);
    set(4 + i, a, Movement::through);
    set(4 + i, a, Movement::left);
  }

  for (int p = 0; p < kPathCount; ++p) {
    Route rp = path_route(p);
    for (int q = 0; q < kPathCount; ++q) {
      Route rq = path_route(q);
      bool ok = (p == q);
      for (int phase = 0; phase < kPhaseCount && !ok; ++phase) {
        ok = is_green(phase, rp.origin, rp.movement) &&
             is_green(phase, rq.origin, rq.movement);
      }
      compat_[p][q] = ok;
    }
  }
}

const PhaseTable& PhaseTable::instance() {
  static const PhaseTable table;
  return table;
}

}  // namespace crossflow::sim
