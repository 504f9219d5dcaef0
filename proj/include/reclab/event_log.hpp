#pragma once

#include <cstdint>
#include <fstream>
#include <map>
#include <mutex>
#include <optional>
#include <string>
#include <vector>

#include "reclab/events.hpp"

namespace reclab {

// Append-only interaction log; replaces the external log stack with a local
// file plus an in-memory mirror. Thread-safe appends, snapshot reads.
class EventLog {
 public:
  EventLog() = default;  // memory-only

  explicit EventLog(const std::string& path) : path_(path) {
    file_.open(path, std::ios::app);
    if (!file_) throw std::runtime_error("cannot open event log: " + path);
  }

  void append(const InteractionEvent& e) {
    std::lock_guard<std::mutex> lock(mutex_);
    events_.push_back(e);
    if (file_.is_open()) {
      file_ << to_json_line(e) << '\n';
      file_.flush();
    }
  }

  std::vector<InteractionEvent> snapshot() const {
    std::lock_guard<std::mutex> lock(mutex_);
    return events_;
  }

  std::size_t size() const {
    std::lock_guard<std::mutex> lock(mutex_);
    return events_.size();
  }

 private:
  mutable std::mutex mutex_;
  std::vector<InteractionEvent> events_;
  std::string path_;
  std::ofstream file_;
};

struct TagCounters {
  std::int64_t fetches = 0;
  std::int64_t clicks = 0;
};

// Online counters over a trailing window of the log. The window is anchored
// at the latest event timestamp so recomputation over the same log is
// idempotent; window 0 means everything.
struct ServeStats {
  std::int64_t window_seconds = 0;
  std::int64_t fetches = 0;
  std::int64_t clicks = 0;
  std::optional<double> ctr;  // undefined when fetches == 0
  double fallback_rate = 0.0;
  std::int64_t fallback_fetches = 0;
  std::int64_t fallback_clicks = 0;
  std::optional<double> fallback_ctr;
  std::map<std::string, TagCounters> per_algorithm;
  std::map<std::string, double> fetch_share;  // sums to 1 when fetches > 0
  std::map<std::string, double> click_share;
};

inline ServeStats compute_serve_stats(const std::vector<InteractionEvent>& events,
                                      std::int64_t window_seconds = 0) {
  ServeStats stats;
  stats.window_seconds = window_seconds;
  std::int64_t latest = 0;
  for (const auto& e : events) latest = std::max(latest, e.ts);
  const std::int64_t cutoff = window_seconds > 0 ? latest - window_seconds : 0;

  for (const auto& e : events) {
    if (e.ts <= cutoff && window_seconds > 0) continue;
    if (e.kind == EventKind::Fetch) {
      stats.fetches += 1;
      if (e.algorithm) stats.per_algorithm[to_string(*e.algorithm)].fetches += 1;
      if (e.fallback.value_or(false)) stats.fallback_fetches += 1;
    } else if (e.kind == EventKind::Click) {
      stats.clicks += 1;
      if (e.algorithm) stats.per_algorithm[to_string(*e.algorithm)].clicks += 1;
      if (e.fallback.value_or(false)) stats.fallback_clicks += 1;
    }
  }
  if (stats.fetches > 0) {
    stats.ctr = double(stats.clicks) / double(stats.fetches);
    stats.fallback_rate = double(stats.fallback_fetches) / double(stats.fetches);
    for (auto& [tag, counters] : stats.per_algorithm) {
      stats.fetch_share[tag] = double(counters.fetches) / double(stats.fetches);
      if (stats.clicks > 0)
        stats.click_share[tag] = double(counters.clicks) / double(stats.clicks);
    }
  }
  if (stats.fallback_fetches > 0)
    stats.fallback_ctr = double(stats.fallback_clicks) / double(stats.fallback_fetches);
  return stats;
}

inline nlohmann::json to_json(const ServeStats& s) {
  nlohmann::json j;
  j["window_seconds"] = s.window_seconds;
  j["fetches"] = s.fetches;
  j["clicks"] = s.clicks;
  if (s.ctr) j["ctr"] = *s.ctr; else j["ctr"] = nullptr;
  j["fallback_rate"] = s.fallback_rate;
  j["fallback_fetches"] = s.fallback_fetches;
  j["fallback_clicks"] = s.fallback_clicks;
  if (s.fallback_ctr) j["fallback_ctr"] = *s.fallback_ctr; else j["fallback_ctr"] = nullptr;
  auto& per = j["per_algorithm"] = nlohmann::json::object();
  for (const auto& [tag, counters] : s.per_algorithm)
    per[tag] = {{"fetches", counters.fetches}, {"clicks", counters.clicks}};
  j["fetch_share"] = s.fetch_share;
  j["click_share"] = s.click_share;
  return j;
}

}  // namespace reclab
