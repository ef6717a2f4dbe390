#include "crossflow/harness/replay.hpp"

#include <istream>
#include <ostream>
#include <sstream>
#include <stdexcept>

namespace crossflow::harness {

namespace {

struct Record {
  double t = 0.0;
  int id = -1;
  std::string lane;
  double pos = 0.0, speed = 0.0, waiting = 0.0;
  std::string status;
};

bool parse_record(const std::string& line, Record& rec) {
  std::istringstream ss(line);
  std::string field;
  auto next = [&](std::string& into) {
    if (!std::getline(ss, into, ',')) {
      throw std::runtime_error("corrupt trajectory record: " + line);
    }
  };
  std::string t, id, pos, speed, waiting;
  next(t);
  next(id);
  next(rec.lane);
  next(pos);
  next(speed);
  next(waiting);
  next(rec.status);
  try {
    rec.t = std::stod(t);
    rec.id = std::stoi(id);
    rec.pos = std::stod(pos);
    rec.speed = std::stod(speed);
    rec.waiting = std::stod(waiting);
  } catch (const std::exception&) {
    throw std::runtime_error("corrupt trajectory record: " + line);
  }
  return true;
}

}  // namespace

ReplaySummary summarize_trace(std::istream& in) {
  ReplaySummary s;
  std::string line;
  bool any = false;
  double current_t = -1.0;
  std::map<std::string, long> current_queue;
  std::map<std::string, long> queue_sum;
  std::map<int, std::pair<double, double>> crash_span;
  long steps = 0;

  auto flush_step = [&]() {
    if (current_t < 0) return;
    ++steps;
    for (auto& [approach, count] : current_queue) {
      queue_sum[approach] += count;
      auto& mx = s.max_queue[approach];
      if (count > mx) mx = count;
    }
    current_queue.clear();
  };

  while (std::getline(in, line)) {
    if (line.empty()) continue;
    if (line[0] == '#') {
      // "# t=<T> phase=<P> mode=<M>" entries drive the timeline.
      double t = 0.0;
      int phase = -1;
      std::string mode;
      std::istringstream ss(line.substr(1));
      std::string tok;
      while (ss >> tok) {
        if (tok.rfind("t=", 0) == 0) t = std::stod(tok.substr(2));
        if (tok.rfind("phase=", 0) == 0) phase = std::stoi(tok.substr(6));
        if (tok.rfind("mode=", 0) == 0) mode = tok.substr(5);
      }
      if (phase >= 0) {
        if (!s.timeline.empty()) s.timeline.back().end = t;
        s.timeline.push_back(ReplaySummary::PhaseSpan{t, t, phase, mode});
      }
      continue;
    }
    Record rec;
    parse_record(line, rec);
    if (!any || rec.t < s.t_min) s.t_min = rec.t;
    if (!any || rec.t > s.t_max) s.t_max = rec.t;
    any = true;
    ++s.records;
    if (rec.t != current_t) {
      flush_step();
      current_t = rec.t;
    }
    const bool incoming = rec.lane.find("-in-") != std::string::npos;
    if (incoming && rec.speed < 0.1) {
      current_queue[rec.lane.substr(0, rec.lane.find('-'))] += 1;
    }
    if (rec.status == "crashed") {
      auto it = crash_span.find(rec.id);
      if (it == crash_span.end()) {
        crash_span[rec.id] = {rec.t, rec.t};
      } else {
        it->second.second = rec.t;
      }
    }
  }
  flush_step();
  if (!s.timeline.empty()) s.timeline.back().end = s.t_max;
  for (auto& [approach, sum] : queue_sum) {
    s.mean_queue[approach] =
        steps > 0 ? static_cast<double>(sum) / static_cast<double>(steps) : 0.0;
  }
  for (auto& [vehicle, span] : crash_span) {
    s.crashes.push_back(
        ReplaySummary::CrashSpan{vehicle, span.first, span.second});
  }
  return s;
}

void print_summary(const ReplaySummary& s, std::ostream& out) {
  if (s.records == 0) {
    out << "empty trace\n";
    return;
  }
  out << "trace: " << s.records << " records, t=[" << s.t_min << ", " << s.t_max
      << "]\n";
  out << "signal timeline:\n";
  for (const auto& span : s.timeline) {
    out << "  t=" << span.start << " .. " << span.end << "  phase " << span.phase
        << " (" << span.mode << ")\n";
  }
  out << "stopped vehicles per approach (incoming lanes):\n";
  for (const auto& [approach, mean] : s.mean_queue) {
    out << "  " << approach << ": mean " << mean << ", max "
        << s.max_queue.at(approach) << "\n";
  }
  if (!s.crashes.empty()) {
    out << "crashes:\n";
    for (const auto& c : s.crashes) {
      out << "  vehicle " << c.vehicle << ": blocked t=" << c.first_seen
          << " .. " << c.last_seen << " ("
          << c.last_seen - c.first_seen + 1 << " s)\n";
    }
  }
}

}  // namespace crossflow::harness
