#include "crossflow/harness/manifest.hpp"

#include <nlohmann/json.hpp>

#include <chrono>
#include <cstdio>
#include <ctime>
#include <filesystem>
#include <ostream>

namespace crossflow::harness {

std::string timestamp_now() {
  const auto now = std::chrono::system_clock::now();
  const std::time_t t = std::chrono::system_clock::to_time_t(now);
  char buf[32];
  std::tm tm{};
  gmtime_r(&t, &tm);
  std::strftime(buf, sizeof(buf), "%Y-%m-%dT%H:%M:%SZ", &tm);
  return buf;
}

void RunManifest::write(const std::string& dir) const {
  nlohmann::json j;
  j["code_version"] = kCodeVersion;
  j["command"] = command;
  j["config"] = config.to_json();
  j["started_at"] = started_at;
  j["finished_at"] = finished_at;
  j["status"] = status;
  j["checkpoints"] = checkpoints;
  j["outputs"] = outputs;
  j["aborted_episodes"] = aborted_episodes;
  std::filesystem::create_directories(dir);
  write_text_file_atomic((std::filesystem::path(dir) / "manifest.json").string(),
                         j.dump(2) + "\n");
}

void write_episode_log_header(std::ostream& out) {
  out << "episode,method,reward,passing_time_s,waiting_time_s,switches,"
         "epsilon_or_lr,wallclock_s\n";
}

void write_episode_record(std::ostream& out, const rl::EpisodeRecord& rec) {
  char line[256];
  std::snprintf(line, sizeof(line), "%d,%s,%.6f,%.1f,%.1f,%ld,%.6g,%.3f\n",
                rec.episode, rl::method_name(rec.method), rec.reward,
                rec.passing_time_s, rec.waiting_time_s, rec.switches,
                rec.epsilon_or_lr, rec.wallclock_s);
  out << line;
}

}  // namespace crossflow::harness
