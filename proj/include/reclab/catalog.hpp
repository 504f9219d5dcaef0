#pragma once

#include <algorithm>
#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include "reclab/events.hpp"

namespace reclab {

struct ItemStats {
  std::string item;
  std::int64_t total_views = 0;
  std::int64_t windowed_views = 0;
  std::int64_t last_seen = 0;
  std::int64_t first_seen = 0;
  int popularity_rank = 0;  // 1 = most windowed views
};

struct DomainCatalog {
  std::map<std::string, ItemStats> items;
  std::vector<std::string> by_rank;  // item ids, rank order
  double new_items_per_day = 0.0;
};

// Per-item view totals, trailing-window counts and ranks, plus a per-domain
// churn estimate. The trailing window ends at the latest event timestamp in
// the input, so results are a pure function of the data.
struct CatalogStats {
  std::map<std::string, DomainCatalog> domains;
  std::int64_t window_end = 0;
  int window_hours = 48;

  const ItemStats* find(const std::string& domain, const std::string& item) const {
    auto d = domains.find(domain);
    if (d == domains.end()) return nullptr;
    auto it = d->second.items.find(item);
    return it == d->second.items.end() ? nullptr : &it->second;
  }

  std::int64_t total_views(const std::string& domain, const std::string& item) const {
    const ItemStats* s = find(domain, item);
    return s ? s->total_views : 0;
  }
};

inline CatalogStats compute_catalog_stats(const std::vector<InteractionEvent>& events,
                                          const std::vector<ItemDocument>& docs,
                                          int window_hours = 48) {
  CatalogStats stats;
  stats.window_hours = window_hours;

  for (const auto& d : docs) {
    auto& item = stats.domains[d.domain].items[d.item];
    item.item = d.item;
  }

  std::int64_t max_ts = 0;
  for (const auto& e : events)
    if (e.kind == EventKind::View) max_ts = std::max(max_ts, e.ts);
  stats.window_end = max_ts;
  const std::int64_t window_start = max_ts - std::int64_t{window_hours} * 3600;

  std::map<std::string, std::pair<std::int64_t, std::int64_t>> span;  // domain -> min/max ts
  for (const auto& e : events) {
    if (e.kind != EventKind::View) continue;
    auto& item = stats.domains[e.domain].items[e.item];
    item.item = e.item;
    item.total_views += 1;
    if (e.ts > window_start) item.windowed_views += 1;
    item.last_seen = std::max(item.last_seen, e.ts);
    item.first_seen = item.first_seen == 0 ? e.ts : std::min(item.first_seen, e.ts);
    auto [it, inserted] = span.emplace(e.domain, std::make_pair(e.ts, e.ts));
    if (!inserted) {
      it->second.first = std::min(it->second.first, e.ts);
      it->second.second = std::max(it->second.second, e.ts);
    }
  }

  for (auto& [domain, catalog] : stats.domains) {
    catalog.by_rank.reserve(catalog.items.size());
    for (const auto& [id, item] : catalog.items) catalog.by_rank.push_back(id);
    std::sort(catalog.by_rank.begin(), catalog.by_rank.end(),
              [&](const std::string& a, const std::string& b) {
                auto wa = catalog.items.at(a).windowed_views;
                auto wb = catalog.items.at(b).windowed_views;
                return wa != wb ? wa > wb : a < b;
              });
    for (std::size_t r = 0; r < catalog.by_rank.size(); ++r)
      catalog.items.at(catalog.by_rank[r]).popularity_rank = static_cast<int>(r) + 1;

    std::int64_t viewed_items = 0;
    for (const auto& [id, item] : catalog.items)
      if (item.total_views > 0) ++viewed_items;
    auto s = span.find(domain);
    if (s != span.end() && viewed_items > 0) {
      // Spans shorter than a day count as one day.
      double days = std::max(1.0, double(s->second.second - s->second.first) / 86400.0);
      catalog.new_items_per_day = double(viewed_items) / days;
    }
  }
  return stats;
}

}  // namespace reclab
