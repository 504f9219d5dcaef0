#pragma once

#include <atomic>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <set>
#include <stdexcept>
#include <string>

#include "reclab/engine.hpp"
#include "reclab/event_log.hpp"
#include "reclab/store.hpp"

namespace reclab {

struct FetchResponse {
  std::string fetch_id;
  RecommendationList list;
  bool store_hit = false;
};

class UnknownDomainError : public std::runtime_error {
 public:
  explicit UnknownDomainError(const std::string& domain)
      : std::runtime_error("unknown domain: " + domain) {}
};

// Fetch/click front end over the snapshot store. Unknown subjects in a
// known domain are answered on the fly through the fallback chain and
// logged as fallback. Clicks must name a live fetch id and an item that was
// actually in that response.
class FetchService {
 public:
  FetchService(RecStore& store, std::map<std::string, std::shared_ptr<const DomainEngine>> engines,
               EventLog& log, std::int64_t clock_start = 1)
      : store_(store), engines_(std::move(engines)), log_(log), clock_(clock_start) {}

  FetchResponse fetch(const RecRequest& request, const std::string& viewer = "-") {
    auto snapshot = store_.get(request.domain);
    auto engine = engines_.find(request.domain);
    if (!snapshot && engine == engines_.end()) throw UnknownDomainError(request.domain);

    FetchResponse response;
    if (snapshot) {
      const auto& lists = request.subject_kind == RecRequest::Subject::Item
                              ? snapshot->item_lists
                              : snapshot->user_lists;
      auto it = lists.find(request.subject_id);
      if (it != lists.end()) {
        response.list = it->second;
        response.store_hit = true;
        if (static_cast<int>(response.list.entries.size()) > request.k)
          response.list.entries.resize(request.k);
      }
    }
    if (!response.store_hit) {
      if (engine == engines_.end()) {
        response.list.request = request;
        response.list.fallback_used = true;  // nothing precomputed, nothing to compute
      } else {
        response.list = engine->second->recommend(request);
        response.list.fallback_used = true;  // store miss is a fallback by definition
      }
    }

    response.fetch_id = "f" + std::to_string(next_id_.fetch_add(1));
    {
      std::lock_guard<std::mutex> lock(mutex_);
      IssuedFetch& issued = issued_[response.fetch_id];
      issued.tag = response.list.source;
      issued.fallback = response.list.fallback_used;
      for (const auto& e : response.list.entries) issued.items.insert(e.item);
    }

    InteractionEvent event;
    event.ts = now();
    event.user = viewer.empty() ? "-" : viewer;
    event.item = request.subject_kind == RecRequest::Subject::Item ? request.subject_id : "-";
    event.domain = request.domain;
    event.kind = EventKind::Fetch;
    event.algorithm = response.list.source;
    event.fetch_id = response.fetch_id;
    event.fallback = response.list.fallback_used;
    log_.append(event);
    return response;
  }

  // Returns false for unknown fetch ids and for items that were not part of
  // the referenced response; accepted clicks log the originating algorithm
  // and fallback flag. Repeat clicks on one fetch are legal.
  bool record_click(const std::string& fetch_id, const std::string& item,
                    const std::string& domain, const std::string& viewer = "-") {
    AlgorithmTag tag;
    bool fallback = false;
    {
      std::lock_guard<std::mutex> lock(mutex_);
      auto it = issued_.find(fetch_id);
      if (it == issued_.end() || !it->second.items.count(item)) return false;
      tag = it->second.tag;
      fallback = it->second.fallback;
    }
    InteractionEvent event;
    event.ts = now();
    event.user = viewer.empty() ? "-" : viewer;
    event.item = item;
    event.domain = domain;
    event.kind = EventKind::Click;
    event.algorithm = tag;
    event.fetch_id = fetch_id;
    event.fallback = fallback;
    log_.append(event);
    return true;
  }

  ServeStats stats(std::int64_t window_seconds = 0) const {
    return compute_serve_stats(log_.snapshot(), window_seconds);
  }

  // Logical clock: strictly monotone, deterministic for replayed traffic.
  std::int64_t now() { return clock_.fetch_add(1); }

 private:
  struct IssuedFetch {
    std::set<std::string> items;
    AlgorithmTag tag = AlgorithmTag::WebsiteTrend;
    bool fallback = false;
  };

  RecStore& store_;
  std::map<std::string, std::shared_ptr<const DomainEngine>> engines_;
  EventLog& log_;
  std::atomic<std::int64_t> clock_;
  std::atomic<std::int64_t> next_id_{1};
  mutable std::mutex mutex_;
  std::map<std::string, IssuedFetch> issued_;
};

// Builds a complete snapshot for a domain: one item list per catalog item,
// one user list per matrix user.
inline DomainSnapshot build_domain_snapshot(const DomainEngine& engine, int k,
                                            std::int64_t generated_at) {
  DomainSnapshot snapshot;
  snapshot.generated_at = generated_at;
  std::set<std::string> items;
  auto catalog = engine.stats.domains.find(engine.domain);
  if (catalog != engine.stats.domains.end())
    for (const auto& [id, stats] : catalog->second.items) items.insert(id);
  for (const auto& id : engine.content_embeddings.item_ids) items.insert(id);
  for (const auto& id : engine.factor_embeddings.item_ids) items.insert(id);

  for (const auto& item : items) {
    RecRequest request;
    request.domain = engine.domain;
    request.subject_kind = RecRequest::Subject::Item;
    request.subject_id = item;
    request.k = k;
    snapshot.item_lists[item] = engine.recommend(request);
  }
  for (const auto& user : engine.matrix.user_ids) {
    RecRequest request;
    request.domain = engine.domain;
    request.subject_kind = RecRequest::Subject::User;
    request.subject_id = user;
    request.k = k;
    snapshot.user_lists[user] = engine.recommend(request);
  }
  return snapshot;
}

}  // namespace reclab
