#pragma once

#include <string>
#include <vector>

#include "crossflow/harness/config.hpp"

namespace crossflow::harness {

constexpr const char* kCodeVersion = "crossflow 0.1.0";

// Run provenance: a full config snapshot written atomically at start and
// finalized when the command completes.
struct RunManifest {
  RunConfig config;
  std::string command;  // train | eval | sweep
  std::string started_at;
  std::string finished_at;
  std::string status = "running";  // running | complete | failed
  std::vector<std::string> checkpoints;
  std::vector<std::string> outputs;  // logs, reports, traces
  int aborted_episodes = 0;

  void write(const std::string& dir) const;  // <dir>/manifest.json
};

std::string timestamp_now();

// Episode log I/O (CSV; one line per episode).
void write_episode_log_header(std::ostream& out);
void write_episode_record(std::ostream& out, const rl::EpisodeRecord& rec);

}  // namespace crossflow::harness
