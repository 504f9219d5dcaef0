#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <map>
#include <optional>
#include <set>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

namespace reclab {

// DCG_p = sum_{i=1..p} (2^rel_i - 1) / log2(i + 1), positions 1-based.
inline double dcg(std::span<const int> rel, std::size_t p) {
  if (p > rel.size()) throw std::invalid_argument("dcg: cutoff exceeds list length");
  double sum = 0.0;
  for (std::size_t i = 0; i < p; ++i) {
    if (rel[i] < 0) throw std::invalid_argument("dcg: negative relevance");
    sum += (std::ldexp(1.0, rel[i]) - 1.0) / std::log2(double(i) + 2.0);
  }
  return sum;
}

inline double dcg(std::span<const int> rel) { return dcg(rel, rel.size()); }

// DCG normalized by the ideal ordering of the given relevance multiset.
// IDCG of 0 yields 0 by convention.
inline double ndcg(std::span<const int> rel, std::vector<int> ideal_multiset, std::size_t p) {
  std::sort(ideal_multiset.begin(), ideal_multiset.end(), std::greater<int>());
  const double idcg = dcg(ideal_multiset, std::min(p, ideal_multiset.size()));
  if (idcg == 0.0) return 0.0;
  return dcg(rel, std::min(p, rel.size())) / idcg;
}

inline double ndcg(std::span<const int> rel, std::vector<int> ideal_multiset) {
  return ndcg(rel, std::move(ideal_multiset), rel.size());
}

// HR@k = mean over users of [top-k recommendations intersect the test set].
// Returns nullopt when no user is eligible (distinct from a true 0).
inline std::optional<double> hit_rate_at_k(
    const std::map<std::string, std::vector<std::string>>& recommendations,
    const std::map<std::string, std::vector<std::string>>& test_sets, int k) {
  if (k < 1) throw std::invalid_argument("hit_rate_at_k: k must be >= 1");
  std::size_t users = 0, hits = 0;
  for (const auto& [user, truth] : test_sets) {
    if (truth.empty()) continue;
    auto rec = recommendations.find(user);
    if (rec == recommendations.end()) continue;
    ++users;
    const std::set<std::string> truth_set(truth.begin(), truth.end());
    const std::size_t top = std::min<std::size_t>(rec->second.size(), static_cast<std::size_t>(k));
    for (std::size_t i = 0; i < top; ++i) {
      if (truth_set.count(rec->second[i])) {
        ++hits;
        break;
      }
    }
  }
  if (users == 0) return std::nullopt;
  return double(hits) / double(users);
}

struct FillReport {
  double item_fill_rate = 0.0;
  double user_fill_rate = 0.0;
  double coverage = 0.0;
};

// item_fill_rate: catalog fraction with a nonempty item-based list.
// user_fill_rate: same for users. coverage: catalog fraction appearing in
// at least one list of either kind.
inline std::optional<FillReport> fill_and_coverage(
    const std::map<std::string, std::vector<std::string>>& item_lists,
    const std::map<std::string, std::vector<std::string>>& user_lists,
    const std::set<std::string>& catalog, const std::set<std::string>& users) {
  if (catalog.empty()) return std::nullopt;
  FillReport report;
  std::size_t filled_items = 0;
  for (const auto& item : catalog) {
    auto it = item_lists.find(item);
    if (it != item_lists.end() && !it->second.empty()) ++filled_items;
  }
  report.item_fill_rate = double(filled_items) / double(catalog.size());

  if (!users.empty()) {
    std::size_t filled_users = 0;
    for (const auto& user : users) {
      auto it = user_lists.find(user);
      if (it != user_lists.end() && !it->second.empty()) ++filled_users;
    }
    report.user_fill_rate = double(filled_users) / double(users.size());
  }

  std::set<std::string> appearing;
  for (const auto& [subject, list] : item_lists)
    for (const auto& item : list)
      if (catalog.count(item)) appearing.insert(item);
  for (const auto& [subject, list] : user_lists)
    for (const auto& item : list)
      if (catalog.count(item)) appearing.insert(item);
  report.coverage = double(appearing.size()) / double(catalog.size());
  return report;
}

// Gini over the exposure distribution of every catalog item (zero-exposure
// items included), via the discrete Lorenz formula on ascending-sorted
// exposures: G = 2 * sum(i * x_i) / (n * sum(x)) - (n + 1) / n.
inline double gini_index(std::vector<double> exposures) {
  const std::size_t n = exposures.size();
  if (n == 0) return 0.0;
  std::sort(exposures.begin(), exposures.end());
  double total = 0.0, weighted = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    total += exposures[i];
    weighted += double(i + 1) * exposures[i];
  }
  if (total <= 0.0) return 0.0;
  return 2.0 * weighted / (double(n) * total) - (double(n) + 1.0) / double(n);
}

struct BiasReport {
  double gini_exposure = 0.0;
  std::vector<double> bucket_mean_exposure;  // index 0 = least viewed bucket
  std::vector<std::size_t> bucket_sizes;
};

// exposure(i) = number of lists containing i. Buckets are popularity
// quantiles by total views ascending, so the last bucket holds the most
// popular items.
inline BiasReport bias_report(const std::vector<std::vector<std::string>>& lists,
                              const std::map<std::string, std::int64_t>& total_views,
                              int n_buckets = 10) {
  if (n_buckets < 1) throw std::invalid_argument("bias_report: n_buckets must be >= 1");
  std::map<std::string, std::int64_t> exposure;
  for (const auto& [item, views] : total_views) exposure[item] = 0;
  for (const auto& list : lists)
    for (const auto& item : list) {
      auto it = exposure.find(item);
      if (it != exposure.end()) it->second += 1;
    }

  BiasReport report;
  std::vector<double> values;
  values.reserve(exposure.size());
  for (const auto& [item, e] : exposure) values.push_back(double(e));
  report.gini_exposure = gini_index(values);

  std::vector<std::string> order;
  order.reserve(total_views.size());
  for (const auto& [item, views] : total_views) order.push_back(item);
  std::sort(order.begin(), order.end(), [&](const std::string& a, const std::string& b) {
    auto va = total_views.at(a), vb = total_views.at(b);
    return va != vb ? va < vb : a < b;
  });

  const std::size_t n = order.size();
  report.bucket_mean_exposure.assign(n_buckets, 0.0);
  report.bucket_sizes.assign(n_buckets, 0);
  for (int b = 0; b < n_buckets; ++b) {
    const std::size_t begin = n * b / n_buckets;
    const std::size_t end = n * (b + 1) / n_buckets;
    double sum = 0.0;
    for (std::size_t i = begin; i < end; ++i) sum += double(exposure.at(order[i]));
    report.bucket_sizes[b] = end - begin;
    report.bucket_mean_exposure[b] = end > begin ? sum / double(end - begin) : 0.0;
  }
  return report;
}

}  // namespace reclab
