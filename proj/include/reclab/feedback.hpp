#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <map>
#include <stdexcept>
#include <string>
#include <unordered_map>
#include <vector>

#include "reclab/events.hpp"

namespace reclab {

// Sparse user x item view counts with id<->index maps. Ids are indexed in
// lexicographic order so the layout is independent of event order.
struct FeedbackMatrix {
  std::string domain;  // empty when the source events span several domains
  std::vector<std::string> user_ids;
  std::vector<std::string> item_ids;
  std::unordered_map<std::string, int> user_index;
  std::unordered_map<std::string, int> item_index;
  // Per user row: (item column, count), sorted by column. Counts are > 0.
  std::vector<std::vector<std::pair<int, std::int64_t>>> rows;

  int num_users() const { return static_cast<int>(user_ids.size()); }
  int num_items() const { return static_cast<int>(item_ids.size()); }
  bool empty() const { return user_ids.empty(); }

  std::int64_t user_total(int u) const {
    std::int64_t s = 0;
    for (const auto& [i, c] : rows[u]) s += c;
    return s;
  }

  std::vector<std::int64_t> item_totals() const {
    std::vector<std::int64_t> totals(item_ids.size(), 0);
    for (const auto& row : rows)
      for (const auto& [i, c] : row) totals[i] += c;
    return totals;
  }

  std::int64_t total_count() const {
    std::int64_t s = 0;
    for (int u = 0; u < num_users(); ++u) s += user_total(u);
    return s;
  }

  bool has_cell(int u, int i) const {
    const auto& row = rows[u];
    auto it = std::lower_bound(row.begin(), row.end(), i,
                               [](const auto& p, int col) { return p.first < col; });
    return it != row.end() && it->first == i;
  }
};

namespace detail {

inline FeedbackMatrix matrix_from_counts(
    const std::map<std::string, std::map<std::string, std::int64_t>>& counts,
    const std::string& domain) {
  FeedbackMatrix m;
  m.domain = domain;
  std::map<std::string, int> items_seen;  // ordered -> lexicographic columns
  for (const auto& [user, row] : counts)
    for (const auto& [item, c] : row) items_seen.emplace(item, 0);
  for (auto& [item, idx] : items_seen) {
    idx = static_cast<int>(m.item_ids.size());
    m.item_index.emplace(item, idx);
    m.item_ids.push_back(item);
  }
  for (const auto& [user, row] : counts) {
    int u = static_cast<int>(m.user_ids.size());
    m.user_index.emplace(user, u);
    m.user_ids.push_back(user);
    auto& out = m.rows.emplace_back();
    out.reserve(row.size());
    for (const auto& [item, c] : row) out.emplace_back(items_seen.at(item), c);
  }
  return m;
}

}  // namespace detail

// Aggregates View events into per-(user,item) counts, then removes users
// below min_user_views and items below min_item_views in alternating passes
// until a fixed point. Thresholds count view events, not distinct items.
// Returns an empty matrix when filtering removes everything.
inline FeedbackMatrix build_feedback_matrix(const std::vector<InteractionEvent>& events,
                                            int min_user_views = 2, int min_item_views = 5) {
  if (events.empty()) throw std::invalid_argument("build_feedback_matrix: no events");
  if (min_user_views < 1 || min_item_views < 1)
    throw std::invalid_argument("build_feedback_matrix: thresholds must be >= 1");

  std::map<std::string, std::map<std::string, std::int64_t>> counts;
  std::string domain;
  bool single_domain = true;
  bool any_view = false;
  for (const auto& e : events) {
    if (e.kind != EventKind::View) continue;
    any_view = true;
    counts[e.user][e.item] += 1;
    if (domain.empty()) {
      domain = e.domain;
    } else if (domain != e.domain) {
      single_domain = false;
    }
  }
  if (!any_view) throw std::invalid_argument("build_feedback_matrix: no view events");
  if (!single_domain) domain.clear();

  std::map<std::string, std::int64_t> item_totals;
  for (const auto& [user, row] : counts)
    for (const auto& [item, c] : row) item_totals[item] += c;

  bool changed = true;
  while (changed) {
    changed = false;
    for (auto it = counts.begin(); it != counts.end();) {
      std::int64_t total = 0;
      for (const auto& [item, c] : it->second) total += c;
      if (total < min_user_views) {
        for (const auto& [item, c] : it->second) item_totals[item] -= c;
        it = counts.erase(it);
        changed = true;
      } else {
        ++it;
      }
    }
    for (auto it = item_totals.begin(); it != item_totals.end();) {
      if (it->second < min_item_views) {
        for (auto& [user, row] : counts) {
          auto cell = row.find(it->first);
          if (cell != row.end()) row.erase(cell);
        }
        it = item_totals.erase(it);
        changed = true;
      } else {
        ++it;
      }
    }
  }
  std::erase_if(counts, [](const auto& kv) { return kv.second.empty(); });
  return detail::matrix_from_counts(counts, domain);
}

// Recency holdout. Test items of user u are the ceil(fraction * n) items of
// their row with the latest last-view timestamps; ties break by item id
// (lexicographically greater counts as more recent). Users with fewer than
// five distinct items stay train-only.
struct HoldoutSplit {
  FeedbackMatrix train;
  std::map<std::string, std::vector<std::string>> test;  // user -> held-out items
  double fraction = 0.2;
};

inline HoldoutSplit holdout_split(const FeedbackMatrix& matrix,
                                  const std::vector<InteractionEvent>& events,
                                  double fraction = 0.2) {
  if (!(fraction > 0.0 && fraction < 1.0))
    throw std::invalid_argument("holdout_split: fraction must be in (0,1)");

  // Last view timestamp per matrix cell.
  std::unordered_map<std::string, std::unordered_map<std::string, std::int64_t>> last_ts;
  for (const auto& e : events) {
    if (e.kind != EventKind::View) continue;
    auto u = matrix.user_index.find(e.user);
    if (u == matrix.user_index.end()) continue;
    if (!matrix.item_index.count(e.item)) continue;
    auto& cell = last_ts[e.user][e.item];
    cell = std::max(cell, e.ts);
  }

  HoldoutSplit split;
  split.fraction = fraction;
  split.train = matrix;
  for (int u = 0; u < matrix.num_users(); ++u) {
    const auto& row = matrix.rows[u];
    const int distinct = static_cast<int>(row.size());
    if (distinct < 5) continue;
    const int take = static_cast<int>(std::ceil(fraction * distinct));
    const auto& user_ts = last_ts[matrix.user_ids[u]];

    std::vector<std::pair<std::pair<std::int64_t, std::string>, int>> order;
    order.reserve(row.size());
    for (const auto& [col, c] : row) {
      const std::string& item = matrix.item_ids[col];
      auto ts_it = user_ts.find(item);
      std::int64_t ts = ts_it == user_ts.end() ? 0 : ts_it->second;
      order.push_back({{ts, item}, col});
    }
    std::sort(order.begin(), order.end());

    std::vector<int> held_cols;
    auto& held = split.test[matrix.user_ids[u]];
    for (int j = distinct - take; j < distinct; ++j) {
      held.push_back(order[j].first.second);
      held_cols.push_back(order[j].second);
    }
    std::sort(held.begin(), held.end());
    std::sort(held_cols.begin(), held_cols.end());
    auto& train_row = split.train.rows[u];
    std::erase_if(train_row, [&](const std::pair<int, std::int64_t>& cell) {
      return std::binary_search(held_cols.begin(), held_cols.end(), cell.first);
    });
  }
  return split;
}

}  // namespace reclab
