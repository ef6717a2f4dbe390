#include "crossflow/sim/world.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <ostream>
#include <sstream>
#include <stdexcept>

namespace crossflow::sim {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

void require(bool cond, const char* msg) {
  if (!cond) throw std::logic_error(msg);
}

int incoming_ordinal(int lane) { return (lane / 6) * 3 + lane % 3; }
int ordinal_lane(int ordinal) { return (ordinal / 3) * 6 + ordinal % 3; }

Route route_for_lane(int lane) {
  if (lane_is_incoming(lane)) {
    static constexpr Movement by_slot[] = {Movement::right, Movement::through,
                                           Movement::left};
    return Route{lane_approach(lane), by_slot[static_cast<int>(lane_slot(lane))]};
  }
  for (int p = 0; p < kPathCount; ++p) {
    Route r = path_route(p);
    if (r.outgoing_lane() == lane) return r;
  }
  throw std::logic_error("no route reaches this lane");
}

}  // namespace

std::vector<Arrival> spawn_schedule(const FlowTable& flow,
                                    const FlowSchedule& schedule, int total,
                                    Rng& rng) {
  if (total < 0) throw std::invalid_argument("spawn target must be >= 0");
  for (Movement m : {Movement::right, Movement::through, Movement::left,
                     Movement::u_turn}) {
    if (flow.rate(m) < 0) {
      throw std::invalid_argument("flow rates must be >= 0");
    }
  }
  double expect_start = 0.0;
  for (const FlowSegment& seg : schedule) {
    if (std::abs(seg.start_s - expect_start) > 1e-9 || seg.duration_s <= 0) {
      throw std::invalid_argument("flow schedule segments must be contiguous");
    }
    for (double m : seg.approach_mult) {
      if (m < 0) throw std::invalid_argument("rate multipliers must be >= 0");
    }
    expect_start = seg.start_s + seg.duration_s;
  }

  std::vector<Arrival> out;
  out.reserve(total);
  double t = 0.0;
  std::size_t seg = 0;
  while (static_cast<int>(out.size()) < total) {
    const bool last = schedule.empty() || seg + 1 >= schedule.size();
    const double seg_end =
        last ? kInf : schedule[seg].start_s + schedule[seg].duration_s;
    std::array<double, kApproachCount> mult{1.0, 1.0, 1.0, 1.0};
    if (!schedule.empty()) mult = schedule[std::min(seg, schedule.size() - 1)].approach_mult;

    double rate[kApproachCount][4];
    double lambda = 0.0;  // total events/s of the superposed process
    for (int a = 0; a < kApproachCount; ++a) {
      for (int m = 0; m < 4; ++m) {
        rate[a][m] = flow.rate(static_cast<Movement>(m)) * mult[a] / 3600.0;
        lambda += rate[a][m];
      }
    }
    if (lambda <= 0.0) {
      if (last) break;  // target unreachable; schedule stays truncated
      t = seg_end;
      ++seg;
      continue;
    }
    const double gap = rng.exponential(lambda);
    if (t + gap >= seg_end) {
      t = seg_end;  // memoryless: restart the draw in the next segment
      ++seg;
      continue;
    }
    t += gap;
    double u = rng.uniform() * lambda;
    Route route{};
    for (int a = 0; a < kApproachCount; ++a) {
      for (int m = 0; m < 4; ++m) {
        u -= rate[a][m];
        if (u < 0) {
          route = Route{static_cast<Approach>(a), static_cast<Movement>(m)};
          a = kApproachCount;
          break;
        }
      }
    }
    out.push_back(Arrival{t, route});
  }
  return out;
}

SimWorld::SimWorld(VehicleSpec spec, FlowTable flow, FlowSchedule schedule,
                   int total_vehicles, uint64_t seed,
                   CollisionSettings collisions)
    : spec_(spec),
      flow_(flow),
      flow_schedule_(std::move(schedule)),
      collisions_(collisions),
      rng_(Rng::derive(seed, 2)) {
  spec_.validate();
  if (collisions_.probability < 0 || collisions_.probability > 1) {
    throw std::invalid_argument("collision probability must be in [0, 1]");
  }
  path_occupant_.fill(-1);
  Rng spawn_rng(Rng::derive(seed, 1));
  schedule_ = spawn_schedule(flow_, flow_schedule_, total_vehicles, spawn_rng);
}

double SimWorld::braking_distance(double v) const {
  const double b = spec_.max_decel * kDt;
  const double m = std::floor(v / b);
  return (m * v - b * m * (m + 1) / 2) * kDt;
}

double SimWorld::stopping_span(double v) const {
  return v * kDt + braking_distance(v);
}

// Exact inverse of stopping_span (piecewise linear, increasing).
double SimWorld::safe_speed(double budget) const {
  if (budget <= 0.0) return 0.0;
  const double b = spec_.max_decel * kDt;
  for (int k = 0;; ++k) {
    const double v = (budget + b * k * (k + 1) / 2) / (k + 1);
    if (v <= (k + 1) * b + 1e-12 || k > 64) return v;
  }
}

bool SimWorld::junction_clear(int lane, const Route& r) const {
  const PhaseTable& pt = PhaseTable::instance();
  const int path = r.path_id();
  const int dest = r.outgoing_lane();
  for (int q = 0; q < kPathCount; ++q) {
    const int occ = path_occupant_[q];
    if (occ < 0) continue;
    const Route& ro = vehicles_[occ].route;
    if (!pt.compatible(path, q)) return false;
    if (ro.outgoing_lane() == dest) return false;
    if (ro.incoming_lane() == lane) return false;
  }
  return true;
}

bool SimWorld::entry_permitted(int lane, const Route& r) const {
  return controller_.movement_green(r.origin, r.movement) &&
         junction_clear(lane, r);
}

const Vehicle* SimWorld::rearmost(int lane) const {
  const auto& ids = lane_order_[lane];
  return ids.empty() ? nullptr : &vehicles_[ids.back()];
}

double SimWorld::leader_budget(const Vehicle& v, const Vehicle& leader) const {
  return (leader.pos - spec_.length - spec_.min_gap - v.pos) +
         braking_distance(leader.speed);
}

double SimWorld::head_budget(const Vehicle& v, int lane, bool* permitted) const {
  // A vehicle crossing from this lane keeps the stop-line slot occupied, so
  // the queue compresses no closer than one car behind the line.
  for (int p = 0; p < kPathCount; ++p) {
    const int occ = path_occupant_[p];
    if (occ >= 0 && vehicles_[occ].route.incoming_lane() == lane) {
      return (kLaneLength - spec_.length - spec_.min_gap) - v.pos;
    }
  }
  const double line_budget = kLaneLength - v.pos;
  const bool green = controller_.movement_green(v.route.origin, v.route.movement);
  // A head that can no longer stop by the line is committed: it entered the
  // dilemma zone on green and clears the junction during the all-red window.
  const bool committed =
      stopping_span(std::max(0.0, v.speed - spec_.max_decel * kDt)) >
      line_budget + 1e-12;
  if ((green || committed) && junction_clear(lane, v.route)) {
    *permitted = true;
    const Vehicle* rear = rearmost(v.route.outgoing_lane());
    if (!rear) return kInf;
    const double ext_front =
        kLaneLength + path_length(v.route.movement) + rear->pos;
    return (ext_front - spec_.length - spec_.min_gap - v.pos) +
           braking_distance(rear->speed);
  }
  return line_budget;  // hold at the stop line
}

double SimWorld::crosser_budget(const Vehicle& v) const {
  const Vehicle* rear = rearmost(v.route.outgoing_lane());
  if (!rear) return kInf;
  const double ext_front = path_length(v.route.movement) + rear->pos;
  return (ext_front - spec_.length - spec_.min_gap - v.path_pos) +
         braking_distance(rear->speed);
}

CollisionBlock* SimWorld::block_of(int vehicle_id) {
  for (CollisionBlock& b : blocks_) {
    if (std::find(b.involved.begin(), b.involved.end(), vehicle_id) !=
        b.involved.end()) {
      return &b;
    }
  }
  return nullptr;
}

void SimWorld::join_block_of(int leader_id, int follower_id) {
  CollisionBlock* block = block_of(leader_id);
  require(block != nullptr, "crashed vehicle without a collision block");
  block->involved.push_back(follower_id);
  Vehicle& v = vehicles_[follower_id];
  v.status = VehicleStatus::crashed;
  v.speed = 0.0;
  --active_;
}

void SimWorld::remove_from_lane(int lane, int id) {
  auto& ids = lane_order_[lane];
  ids.erase(std::remove(ids.begin(), ids.end(), id), ids.end());
}

void SimWorld::insert_sorted(int lane, int id) {
  auto& ids = lane_order_[lane];
  const double pos = vehicles_[id].pos;
  auto it = std::find_if(ids.begin(), ids.end(), [&](int other) {
    return vehicles_[other].pos < pos;
  });
  ids.insert(it, id);
}

void SimWorld::land_on_outgoing(Vehicle& v, double front, double speed) {
  const int dest = v.route.outgoing_lane();
  v.status = VehicleStatus::on_outgoing;
  v.lane = dest;
  v.pos = front;
  v.path_pos = 0.0;
  v.speed = speed;
  lane_order_[dest].push_back(v.id);
}

void SimWorld::relocate_crashed(int id) {
  Vehicle& v = vehicles_[id];
  const bool on_incoming =
      collisions_.road_class == CollisionSettings::RoadClass::incoming;
  std::vector<int> lanes;
  for (int l = 0; l < kLaneCount; ++l) {
    if (lane_is_incoming(l) == on_incoming) lanes.push_back(l);
  }
  const int start = static_cast<int>(rng_.uniform_int(lanes.size()));
  const double want = rng_.uniform(spec_.length, kLaneLength);
  const double spacing = spec_.length + spec_.min_gap;
  for (std::size_t k = 0; k < lanes.size(); ++k) {
    const int lane = lanes[(start + k) % lanes.size()];
    // Allowed front positions: [length, laneLength] minus a `spacing` margin
    // around every present vehicle. Pick the feasible point nearest the draw.
    std::vector<std::pair<double, double>> forbidden;
    for (int other : lane_order_[lane]) {
      const double p = vehicles_[other].pos;
      forbidden.emplace_back(p - spacing, p + spacing);
    }
    std::sort(forbidden.begin(), forbidden.end());
    double best = kInf;
    double cursor = spec_.length;
    auto consider = [&](double lo, double hi) {
      if (lo > hi) return;
      const double candidate = std::clamp(want, lo, hi);
      if (std::abs(candidate - want) < std::abs(best - want)) best = candidate;
    };
    for (const auto& [lo, hi] : forbidden) {
      consider(cursor, std::min(lo, kLaneLength));
      cursor = std::max(cursor, hi);
    }
    consider(cursor, kLaneLength);
    if (best != kInf) {
      v.status = VehicleStatus::crashed;
      v.lane = lane;
      v.pos = best;
      v.path_pos = 0.0;
      v.speed = 0.0;
      insert_sorted(lane, id);
      blocks_.push_back(CollisionBlock{lane, best, clock_ + kDt, 300.0, {id}});
      --active_;
      if (trace_) {
        *trace_ << "# t=" << clock_ + kDt << " block lane=" << lane_name(lane)
                << " pos=" << best << " vehicle=" << id << "\n";
      }
      return;
    }
  }
  // Every lane of the class is jammed solid: the crash attempt is dropped and
  // the vehicle crosses normally.
  v.status = VehicleStatus::crossing;
  path_occupant_[v.route.path_id()] = id;
}

int SimWorld::place_vehicle(int lane, double pos, double speed,
                            double waiting) {
  if (lane < 0 || lane >= kLaneCount) {
    throw std::invalid_argument("lane id out of range");
  }
  if (pos < 0.0 || pos > kLaneLength) {
    throw std::invalid_argument("position outside the lane");
  }
  if (speed < 0.0 || speed > spec_.max_speed || waiting < 0.0) {
    throw std::invalid_argument("invalid speed or waiting time");
  }
  const double spacing = spec_.length + spec_.min_gap;
  for (int other : lane_order_[lane]) {
    if (std::abs(vehicles_[other].pos - pos) < spacing - 1e-9) {
      throw std::invalid_argument("placement overlaps an existing vehicle");
    }
  }
  Vehicle v;
  v.id = static_cast<int>(vehicles_.size());
  v.route = route_for_lane(lane);
  v.status = lane_is_incoming(lane) ? VehicleStatus::on_incoming
                                    : VehicleStatus::on_outgoing;
  v.lane = lane;
  v.pos = pos;
  v.speed = speed;
  v.waiting = waiting;
  vehicles_.push_back(v);
  insert_sorted(lane, v.id);
  ++placed_;
  ++active_;
  return v.id;
}

void SimWorld::apply_phase_command(int target_phase, double green_interval) {
  controller_.command(target_phase, green_interval);
}

bool SimWorld::episode_done() const {
  if (active_ != 0 || next_arrival_ < schedule_.size()) return false;
  for (const auto& q : entry_queues_) {
    if (!q.empty()) return false;
  }
  return true;
}

WorldCounts SimWorld::counts() const {
  WorldCounts c;
  c.scheduled = scheduled_total();
  c.pending = static_cast<long>(schedule_.size() - next_arrival_);
  for (const auto& q : entry_queues_) c.pending += static_cast<long>(q.size());
  for (const Vehicle& v : vehicles_) {
    if (v.on_network()) {
      ++c.on_network;
    } else if (v.status == VehicleStatus::exited) {
      ++c.exited;
    } else if (v.status == VehicleStatus::crashed) {
      v.removed ? ++c.crashed_removed : ++c.crashed_present;
    }
  }
  return c;
}

void SimWorld::step() {
  const double a = spec_.max_accel * kDt;
  const double b = spec_.max_decel * kDt;
  const std::size_t n = vehicles_.size();
  new_speed_.assign(n, 0.0);
  emergency_.assign(n, 0);
  std::vector<char> head_permitted(n, 0);

  auto choose_speed = [&](const Vehicle& v, double budget) {
    const double lo = std::max(0.0, v.speed - b);
    const double vs = safe_speed(budget);
    double ns = std::min({v.speed + a, spec_.max_speed, vs});
    if (ns < lo - 1e-12) {
      emergency_[v.id] = 1;  // sudden obstacle: brake hard, may join a crash
      ns = lo;
    }
    new_speed_[v.id] = ns;
  };

  // Pass 1: choose every speed from the pre-step snapshot.
  for (int lane = 0; lane < kLaneCount; ++lane) {
    const auto& ids = lane_order_[lane];
    const bool incoming = lane_is_incoming(lane);
    for (std::size_t i = 0; i < ids.size(); ++i) {
      const Vehicle& v = vehicles_[ids[i]];
      if (v.status == VehicleStatus::crashed) continue;
      double budget;
      if (i > 0) {
        budget = leader_budget(v, vehicles_[ids[i - 1]]);
        // Followers never plan past one car behind the line; this keeps the
        // promise consistent when their leader flips into the junction and
        // leaves only the stop-line slot behind.
        if (incoming) {
          budget = std::min(
              budget, (kLaneLength - spec_.length - spec_.min_gap) - v.pos);
        }
      } else if (incoming) {
        bool permitted = false;
        budget = head_budget(v, lane, &permitted);
        head_permitted[v.id] = permitted;
      } else {
        budget = kInf;
      }
      choose_speed(v, budget);
    }
  }
  for (int p = 0; p < kPathCount; ++p) {
    const int occ = path_occupant_[p];
    if (occ < 0) continue;
    const Vehicle& v = vehicles_[occ];
    if (v.status == VehicleStatus::crashed) continue;
    choose_speed(v, crosser_budget(v));
  }

  // Pass 2: move lane vehicles, front to back per lane.
  std::vector<char> entered_path(n, 0);
  std::vector<int> pending_crash;
  for (int lane = 0; lane < kLaneCount; ++lane) {
    const std::vector<int> ids = lane_order_[lane];  // mutation-safe copy
    const bool incoming = lane_is_incoming(lane);
    int prev = -1;  // nearest leader still on this lane, already moved
    for (int id : ids) {
      Vehicle& v = vehicles_[id];
      if (v.status == VehicleStatus::crashed) {
        prev = id;
        continue;
      }
      double np = v.pos + new_speed_[id] * kDt;
      v.speed = new_speed_[id];
      if (prev >= 0) {
        const double cap =
            vehicles_[prev].pos - spec_.length - spec_.min_gap;
        if (np > cap + 1e-9) {
          if (vehicles_[prev].status != VehicleStatus::crashed) {
            std::ostringstream msg;
            msg << "overlap with a non-crashed leader: lane=" << lane_name(lane)
                << " t=" << clock_ << " follower " << id << "@" << v.pos
                << "->" << np << " leader " << prev << "@"
                << vehicles_[prev].pos;
            throw std::logic_error(msg.str());
          }
          v.pos = cap;
          join_block_of(prev, id);
          prev = id;
          continue;
        }
      }
      v.pos = np;
      if (incoming && np > kLaneLength + 1e-12) {
        if (!head_permitted[id]) {
          // Unreachable from consistent states; placed vehicles may start
          // with an infeasible (pos, speed) pair under a red light.
          v.pos = kLaneLength;
          prev = id;
          continue;
        }
        remove_from_lane(lane, id);
        v.lane = -1;
        const bool crash_roll =
            collisions_.road_class != CollisionSettings::RoadClass::off &&
            rng_.bernoulli(collisions_.probability);
        if (crash_roll) {
          pending_crash.push_back(id);
        } else {
          v.status = VehicleStatus::crossing;
          v.path_pos = np - kLaneLength;
          v.pos = 0.0;
          path_occupant_[v.route.path_id()] = id;
          entered_path[id] = 1;
        }
        prev = -1;
      } else if (!incoming && np >= kLaneLength - 1e-12) {
        remove_from_lane(lane, id);
        v.status = VehicleStatus::exited;
        v.pos = kLaneLength;
        v.lane = -1;
        ++exited_;
        --active_;
        prev = -1;
      } else {
        prev = id;
      }
    }
  }

  // Pass 3: advance junction crossers and complete landings.
  for (int p = 0; p < kPathCount; ++p) {
    const int id = path_occupant_[p];
    if (id < 0) continue;
    Vehicle& v = vehicles_[id];
    if (v.status == VehicleStatus::crashed) continue;
    if (!entered_path[id]) {
      v.path_pos += new_speed_[id] * kDt;
      v.speed = new_speed_[id];
    }
    const double plen = path_length(v.route.movement);
    if (v.path_pos < plen) continue;
    const double front = v.path_pos - plen;
    const Vehicle* rear = rearmost(v.route.outgoing_lane());
    if (!rear || front <= rear->pos - spec_.length - spec_.min_gap + 1e-9) {
      land_on_outgoing(v, front, v.speed);
      path_occupant_[p] = -1;
    } else {
      const double cap = rear->pos - spec_.length - spec_.min_gap;
      require(rear->status == VehicleStatus::crashed,
              "junction exit blocked by a non-crashed vehicle");
      if (cap >= 0.0) {
        land_on_outgoing(v, cap, 0.0);
        path_occupant_[p] = -1;
        join_block_of(rear->id, v.id);
      } else {
        // No room on the lane at all: hold at the junction exit.
        v.path_pos = plen;
        v.speed = 0.0;
        join_block_of(rear->id, v.id);  // crashed in place, keeps the path
      }
    }
  }

  // Pass 4: place this step's collision blocks.
  for (int id : pending_crash) relocate_crashed(id);

  // Pass 5: expire blocks; involved vehicles leave the network for good.
  for (auto it = blocks_.begin(); it != blocks_.end();) {
    if (clock_ + kDt - it->start_time >= it->duration - 1e-9) {
      for (int id : it->involved) {
        Vehicle& v = vehicles_[id];
        if (v.lane >= 0) remove_from_lane(v.lane, id);
        for (int& occ : path_occupant_) {
          if (occ == id) occ = -1;
        }
        v.lane = -1;
        v.removed = true;
        ++crashed_removed_;
      }
      if (trace_) {
        *trace_ << "# t=" << clock_ + kDt
                << " block-removed lane=" << lane_name(it->lane) << "\n";
      }
      it = blocks_.erase(it);
    } else {
      ++it;
    }
  }

  // Pass 6: scheduled arrivals enter where there is room, FIFO per lane.
  while (next_arrival_ < schedule_.size() &&
         schedule_[next_arrival_].time <= clock_ + kDt + 1e-9) {
    const Arrival& arr = schedule_[next_arrival_++];
    Vehicle v;
    v.id = static_cast<int>(vehicles_.size());
    v.route = arr.route;
    v.status = VehicleStatus::queued_for_entry;
    v.lane = -1;
    vehicles_.push_back(v);
    entry_queues_[incoming_ordinal(arr.route.incoming_lane())].push_back(v.id);
  }
  for (int ord = 0; ord < kIncomingLaneCount; ++ord) {
    const int lane = ordinal_lane(ord);
    auto& queue = entry_queues_[ord];
    while (!queue.empty()) {
      const Vehicle* rear = rearmost(lane);
      const double entry_front = spec_.length;
      if (rear &&
          rear->pos < entry_front + spec_.length + spec_.min_gap - 1e-9) {
        break;
      }
      Vehicle& v = vehicles_[queue.front()];
      double budget =
          rear ? (rear->pos - spec_.length - spec_.min_gap - entry_front) +
                     braking_distance(rear->speed)
               : kLaneLength - entry_front;
      budget = std::min(
          budget, (kLaneLength - spec_.length - spec_.min_gap) - entry_front);
      v.status = VehicleStatus::on_incoming;
      v.lane = lane;
      v.pos = entry_front;
      v.speed = std::min(spec_.max_speed, safe_speed(budget));
      lane_order_[lane].push_back(v.id);
      queue.pop_front();
      ++spawned_;
      ++active_;
    }
  }

  // Pass 7: waiting-time bookkeeping (network vehicles and present wrecks).
  long stopped = 0;
  for (Vehicle& v : vehicles_) {
    const bool counted =
        v.on_network() || (v.status == VehicleStatus::crashed && !v.removed);
    if (!counted) continue;
    if (v.speed < kStopThreshold) {
      v.waiting += kDt;
      ++stopped;
    } else {
      v.waiting = 0.0;
    }
  }
  total_waiting_ += static_cast<double>(stopped) * kDt;

  clock_ += kDt;
  controller_.tick(kDt);
  emit_trace();
}

void SimWorld::emit_trace() {
  if (!trace_) return;
  const int phase = controller_.current_phase();
  const int mode = static_cast<int>(controller_.mode());
  if (phase != last_traced_phase_ || mode != last_traced_mode_) {
    *trace_ << "# t=" << clock_ << " phase=" << phase << " mode="
            << (controller_.mode() == SignalController::Mode::green
                    ? "green"
                    : "transition")
            << "\n";
    last_traced_phase_ = phase;
    last_traced_mode_ = mode;
  }
  for (const Vehicle& v : vehicles_) {
    const bool present =
        v.on_network() || (v.status == VehicleStatus::crashed && !v.removed);
    if (!present) continue;
    const int lane = v.lane >= 0 ? v.lane : v.route.incoming_lane();
    const double pos = v.status == VehicleStatus::crossing ? v.path_pos : v.pos;
    *trace_ << clock_ << ',' << v.id << ',' << lane_name(lane) << ',' << pos
            << ',' << v.speed << ',' << v.waiting << ','
            << status_name(v.status) << "\n";
  }
}

}  // namespace crossflow::sim
