#pragma once

#include <iosfwd>
#include <map>
#include <string>
#include <vector>

namespace crossflow::harness {

// Digest of a trajectory dump: the signal timeline, queue statistics per
// approach, and crash spans.
struct ReplaySummary {
  struct PhaseSpan {
    double start = 0.0;
    double end = 0.0;
    int phase = 0;
    std::string mode;
  };
  struct CrashSpan {
    int vehicle = -1;
    double first_seen = 0.0;
    double last_seen = 0.0;
  };
  long records = 0;
  double t_min = 0.0, t_max = 0.0;
  std::vector<PhaseSpan> timeline;
  std::map<std::string, double> mean_queue;  // stopped vehicles per approach
  std::map<std::string, long> max_queue;
  std::vector<CrashSpan> crashes;
};

ReplaySummary summarize_trace(std::istream& in);
void print_summary(const ReplaySummary& s, std::ostream& out);

}  // namespace crossflow::harness
