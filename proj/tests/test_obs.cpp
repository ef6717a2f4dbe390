#include <doctest.h>

#include <sstream>

#include "crossflow/obs/reward.hpp"
#include "crossflow/obs/state.hpp"
#include "support/helpers.hpp"

using namespace crossflow;
using namespace cftest;

TEST_CASE("empty world encodes to zero grids and live greens") {
  auto w = empty_world();
  const auto t = obs::encode_state(w);
  CHECK(t.position.sum() == 0.0f);
  CHECK(t.velocity.sum() == 0.0f);
  CHECK(t.waiting.sum() == 0.0f);
  // Phase 0 greens N/S through+right: signals (a*3 + slot).
  CHECK(t.phase(sim::signal_index(sim::Approach::N, sim::Movement::through)) == 1.0f);
  CHECK(t.phase(sim::signal_index(sim::Approach::S, sim::Movement::right)) == 1.0f);
  CHECK(t.phase(sim::signal_index(sim::Approach::E, sim::Movement::through)) == 0.0f);
  CHECK(t.phase.sum() == 4.0f);
}

TEST_CASE("a vehicle lands in the cell holding its center") {
  auto w = empty_world();
  const int lane = sim::lane_id(sim::Approach::N, sim::LaneDir::incoming,
                                sim::LaneSlot::middle);
  // Front bumper at 9.0 -> center at 7.5 -> cell floor(7.5/5) = 1.
  w.place_vehicle(lane, 9.0, 0.0, 6.0);
  const auto t = obs::encode_state(w);
  CHECK(t.position(obs::lane_row(lane), 1) == 1.0f);
  CHECK(t.position.sum() == 1.0f);
  CHECK(t.velocity(obs::lane_row(lane), 1) == 0.0f);
  CHECK(t.waiting(obs::lane_row(lane), 1) == 6.0f);

  // Center semantics: front at 5.5 -> center 4.0 -> still cell 0.
  auto w2 = empty_world();
  w2.place_vehicle(lane, 5.5, 0.0);
  CHECK(obs::encode_state(w2).position(obs::lane_row(lane), 0) == 1.0f);
}

TEST_CASE("phase vector is all zero during a transition") {
  auto w = empty_world();
  w.apply_phase_command(2, 10.0);
  w.step();
  const auto t = obs::encode_state(w);
  CHECK(t.phase.sum() == 0.0f);
}

TEST_CASE("crossing vehicles fold into the last origin cell") {
  auto w = empty_world();
  const int lane = sim::lane_id(sim::Approach::N, sim::LaneDir::incoming,
                                sim::LaneSlot::middle);
  const int id = w.place_vehicle(lane, 295.0, 10.0);
  int guard = 0;
  while (w.vehicles()[id].status != sim::VehicleStatus::crossing) {
    w.step();
    REQUIRE(++guard < 20);
  }
  const auto t = obs::encode_state(w);
  CHECK(t.position(obs::lane_row(lane), obs::kGridCols - 1) == 1.0f);
  CHECK(t.position.sum() == 1.0f);
}

TEST_CASE("encoding is a pure function of the world") {
  auto w = paper_world(21, 60);
  for (int t = 0; t < 40; ++t) {
    if (w.at_decision()) w.apply_phase_command(t % 8, 10.0);
    w.step();
  }
  const auto a = obs::encode_state(w);
  const auto b = obs::encode_state(w);
  CHECK(a == b);
  // Every on-network vehicle occupies exactly one cell.
  const auto counts = w.counts();
  CHECK(static_cast<long>(a.position.sum()) ==
        counts.on_network + counts.crashed_present);
}

TEST_CASE("balance term matches hand-evaluated cases") {
  SUBCASE("equal queues balance to zero") {
    for (int k = 0; k <= 5; ++k) {
      std::vector<int> n(12, k);
      CHECK(obs::balance_term(n) == doctest::Approx(0.0).epsilon(1e-12));
    }
  }
  SUBCASE("two loaded lanes out of twelve") {
    std::vector<int> n(12, 0);
    n[0] = 6;
    n[1] = 6;
    CHECK(obs::balance_term(n) == doctest::Approx(-1.2).epsilon(1e-12));
  }
  SUBCASE("single loaded lane") {
    std::vector<int> n(12, 0);
    n[0] = 4;
    const double expect = 0.02 * (4.0 / 12.0 - 4.0) * 4.0;
    CHECK(obs::balance_term(n) == doctest::Approx(expect).epsilon(1e-12));
    CHECK(obs::balance_term(n) == doctest::Approx(-0.293333333333).epsilon(1e-9));
  }
  SUBCASE("never positive; zero only when equal (exhaustive mini-case)") {
    for (int a = 0; a <= 8; ++a) {
      for (int b = 0; b + a <= 8; ++b) {
        for (int c = 0; a + b + c <= 8; ++c) {
          const std::vector<int> n{a, b, c};
          const double r = obs::balance_term(n);
          CHECK(r <= 1e-12);
          if (a == b && b == c) {
            CHECK(r == doctest::Approx(0.0).epsilon(1e-12));
          } else {
            CHECK(r < -1e-12);
          }
        }
      }
    }
  }
  SUBCASE("scaling all counts by c scales the term by c^2") {
    const std::vector<int> n{3, 0, 5, 1, 0, 0, 2, 4, 0, 1, 1, 7};
    std::vector<int> n3;
    for (int x : n) n3.push_back(3 * x);
    CHECK(obs::balance_term(n3) ==
          doctest::Approx(9.0 * obs::balance_term(n)).epsilon(1e-9));
  }
}

TEST_CASE("reward matches the weighted-sum oracle") {
  SUBCASE("quiet intersection, same phase") {
    auto w = empty_world();
    const auto r = obs::compute_reward(0, 0, w);
    CHECK(r.action == 0.0);
    CHECK(r.stopped_count == 0.0);
    CHECK(r.mean_wait == 0.0);
    CHECK(r.balance == 0.0);
    CHECK(r.total == 0.0);
  }
  SUBCASE("phase change with two stopped vehicles per incoming lane") {
    auto w = empty_world();
    for (int ord = 0; ord < sim::kIncomingLaneCount; ++ord) {
      const int lane = (ord / 3) * 6 + ord % 3;
      w.place_vehicle(lane, 300.0, 0.0, 10.0);
      w.place_vehicle(lane, 295.0, 0.0, 10.0);
    }
    const auto r = obs::compute_reward(0, 3, w);
    CHECK(r.action == -5.0);
    CHECK(r.stopped_count == 24.0);
    CHECK(r.mean_wait == doctest::Approx(10.0).epsilon(1e-12));
    CHECK(r.balance == doctest::Approx(0.0).epsilon(1e-12));
    CHECK(r.total == doctest::Approx(-34.0).epsilon(1e-9));
  }
  SUBCASE("unbalanced queues shave the total") {
    auto w = empty_world();
    const int lane = sim::lane_id(sim::Approach::N, sim::LaneDir::incoming,
                                  sim::LaneSlot::outer);
    for (int i = 0; i < 4; ++i) {
      w.place_vehicle(lane, 300.0 - 5.0 * i, 0.0, 8.0);
    }
    const auto r = obs::compute_reward(1, 1, w);
    const double balance = 0.02 * (4.0 / 12.0 - 4.0) * 4.0;
    CHECK(r.action == 0.0);
    CHECK(r.stopped_count == 4.0);
    CHECK(r.mean_wait == doctest::Approx(8.0));
    CHECK(r.balance == doctest::Approx(balance));
    CHECK(r.total ==
          doctest::Approx(-4.0 - 0.5 * 8.0 + 0.8 * balance).epsilon(1e-9));
  }
  SUBCASE("moving vehicles do not count as stopped") {
    auto w = empty_world();
    const int lane = sim::lane_id(sim::Approach::N, sim::LaneDir::incoming,
                                  sim::LaneSlot::middle);
    w.place_vehicle(lane, 100.0, 9.0);
    const auto r = obs::compute_reward(0, 0, w);
    CHECK(r.stopped_count == 0.0);
    CHECK(r.total == 0.0);
  }
  SUBCASE("adding a balanced ring of stopped vehicles drops the total by 12") {
    auto w = empty_world();
    for (int ord = 0; ord < sim::kIncomingLaneCount; ++ord) {
      const int lane = (ord / 3) * 6 + ord % 3;
      w.place_vehicle(lane, 300.0, 0.0, 4.0);
    }
    const auto r1 = obs::compute_reward(0, 0, w);
    for (int ord = 0; ord < sim::kIncomingLaneCount; ++ord) {
      const int lane = (ord / 3) * 6 + ord % 3;
      w.place_vehicle(lane, 295.0, 0.0, 4.0);
    }
    const auto r2 = obs::compute_reward(0, 0, w);
    CHECK(r2.total == doctest::Approx(r1.total - 12.0).epsilon(1e-9));
  }
}

TEST_CASE("stopped counts attribute junction occupants to their origin lane") {
  auto w = empty_world();
  const int lane = sim::lane_id(sim::Approach::N, sim::LaneDir::incoming,
                                sim::LaneSlot::outer);
  w.place_vehicle(lane, 300.0, 0.0, 3.0);
  const auto counts = obs::stopped_per_incoming_lane(w);
  CHECK(counts[0] == 1);  // N-in-outer is ordinal 0
  int total = 0;
  for (int c : counts) total += c;
  CHECK(total == 1);
}

TEST_CASE("tensor dump is parseable text") {
  auto w = empty_world();
  const auto t = obs::encode_state(w);
  std::ostringstream out;
  obs::dump_tensor(t, out);
  const std::string text = out.str();
  CHECK(text.find("position") != std::string::npos);
  CHECK(text.find("N-in-outer") != std::string::npos);
  CHECK(text.find("phase:") != std::string::npos);
}
