#pragma once

#include <cstdint>
#include <functional>
#include <map>
#include <memory>
#include <mutex>
#include <stdexcept>
#include <string>
#include <vector>

#include "reclab/recommend.hpp"

namespace reclab {

// One fully materialized set of lists for a domain. Built aside, installed
// with a pointer swap, never mutated afterwards.
struct DomainSnapshot {
  std::int64_t generated_at = 0;
  std::map<std::string, RecommendationList> item_lists;
  std::map<std::string, RecommendationList> user_lists;
};

// Snapshot store standing in for the external cache of the production
// stack. Readers always see a complete snapshot: a fetch resolves its
// domain pointer exactly once.
class RecStore {
 public:
  std::shared_ptr<const DomainSnapshot> get(const std::string& domain) const {
    std::lock_guard<std::mutex> lock(mutex_);
    auto it = snapshots_.find(domain);
    return it == snapshots_.end() ? nullptr : it->second;
  }

  void install(const std::string& domain, std::shared_ptr<const DomainSnapshot> snapshot) {
    std::lock_guard<std::mutex> lock(mutex_);
    snapshots_[domain] = std::move(snapshot);
  }

  bool has_domain(const std::string& domain) const {
    std::lock_guard<std::mutex> lock(mutex_);
    return snapshots_.count(domain) > 0;
  }

  std::vector<std::string> domains() const {
    std::lock_guard<std::mutex> lock(mutex_);
    std::vector<std::string> out;
    for (const auto& [domain, snapshot] : snapshots_) out.push_back(domain);
    return out;
  }

 private:
  mutable std::mutex mutex_;
  std::map<std::string, std::shared_ptr<const DomainSnapshot>> snapshots_;
};

// Runs the pipeline aside and installs the result atomically. On pipeline
// failure the previous snapshot stays visible and the error propagates.
inline void refresh_domain(RecStore& store, const std::string& domain,
                           const std::function<DomainSnapshot()>& pipeline) {
  auto snapshot = std::make_shared<DomainSnapshot>(pipeline());
  store.install(domain, std::move(snapshot));
}

// Churn-driven refresh period: high-churn domains refresh hourly, moderate
// ones every 6 hours, static ones daily.
struct RefreshPolicy {
  std::map<std::string, std::int64_t> overrides;  // domain -> period seconds

  std::int64_t period_seconds(const std::string& domain, double new_items_per_day) const {
    auto it = overrides.find(domain);
    if (it != overrides.end()) {
      if (it->second <= 0) throw std::invalid_argument("refresh period must be > 0");
      return it->second;
    }
    if (new_items_per_day >= 50.0) return 3600;
    if (new_items_per_day >= 5.0) return 21600;
    return 86400;
  }
};

}  // namespace reclab
