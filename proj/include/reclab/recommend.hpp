#pragma once

#include <algorithm>
#include <functional>
#include <optional>
#include <set>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "reclab/als.hpp"
#include "reclab/ann.hpp"
#include "reclab/catalog.hpp"
#include "reclab/dbscan.hpp"
#include "reclab/embedding.hpp"
#include "reclab/events.hpp"
#include "reclab/rng.hpp"

namespace reclab {

struct RecRequest {
  enum class Subject { Item, User };
  std::string domain;
  Subject subject_kind = Subject::Item;
  std::string subject_id;
  int k = 6;  // production boxes hold four to six suggestions
};

struct ScoredItem {
  std::string item;
  double score = 0.0;
};

struct RecommendationList {
  std::vector<ScoredItem> entries;
  AlgorithmTag source = AlgorithmTag::WebsiteTrend;
  bool fallback_used = false;
  RecRequest request;
};

// A chain stage either produces entries (possibly fewer than k, possibly
// none) or reports a cold subject it cannot score at all.
enum class StageStatus { Ok, Cold };

struct StageResult {
  StageStatus status = StageStatus::Ok;
  std::vector<ScoredItem> entries;

  static StageResult cold() { return {StageStatus::Cold, {}}; }
};

struct FilterConfig {
  double dedup_cosine_threshold = 0.95;
  double low_view_percentile = 0.10;
};

// ---- individual recommenders -------------------------------------------

// Top-k by trailing-window views, score = windowed views, ties by item id.
inline StageResult website_trend(const CatalogStats& stats, const std::string& domain, int k) {
  StageResult result;
  auto it = stats.domains.find(domain);
  if (it == stats.domains.end()) return result;
  const DomainCatalog& catalog = it->second;
  for (const std::string& id : catalog.by_rank) {
    if (static_cast<int>(result.entries.size()) >= k) break;
    const ItemStats& item = catalog.items.at(id);
    if (item.windowed_views <= 0) break;  // rank order => the rest are zero too
    result.entries.push_back({id, double(item.windowed_views)});
  }
  return result;
}

// Weighted sampling without replacement from the subject's cluster,
// weight = windowed_views + 1. Deterministic under the seed.
inline StageResult category_trend(const std::string& item_id, const ClusterModel& clusters,
                                  const EmbeddingMatrix& embeddings, const CatalogStats& stats,
                                  const std::string& domain, int k, std::uint64_t seed) {
  auto row = embeddings.item_index.find(item_id);
  if (row == embeddings.item_index.end()) return StageResult::cold();
  const int label = clusters.labels[row->second];
  StageResult result;
  if (label < 0) return result;  // noise: nothing to sample, falls through

  std::vector<std::string> candidates;
  std::vector<double> weights;
  for (int i = 0; i < embeddings.num_items(); ++i) {
    if (clusters.labels[i] != label || i == row->second) continue;
    candidates.push_back(embeddings.item_ids[i]);
    weights.push_back(double(stats.find(domain, embeddings.item_ids[i])
                                 ? stats.find(domain, embeddings.item_ids[i])->windowed_views
                                 : 0) +
                      1.0);
  }

  Rng rng(seed);
  while (!candidates.empty() && static_cast<int>(result.entries.size()) < k) {
    double total = 0.0;
    for (double w : weights) total += w;
    double draw = rng.uniform01() * total;
    std::size_t pick = 0;
    for (; pick + 1 < candidates.size(); ++pick) {
      draw -= weights[pick];
      if (draw < 0.0) break;
    }
    result.entries.push_back({candidates[pick], weights[pick]});
    candidates.erase(candidates.begin() + pick);
    weights.erase(weights.begin() + pick);
  }
  return result;
}

// The set of catalog items excluded from content-based candidates: the
// bottom floor(percentile * N) of the embedded items by (total views, id).
inline std::set<std::string> low_view_exclusion_set(const EmbeddingMatrix& embeddings,
                                                    const CatalogStats& stats,
                                                    const std::string& domain,
                                                    double percentile) {
  std::vector<std::string> order = embeddings.item_ids;
  std::sort(order.begin(), order.end(), [&](const std::string& a, const std::string& b) {
    auto va = stats.total_views(domain, a), vb = stats.total_views(domain, b);
    return va != vb ? va < vb : a < b;
  });
  const std::size_t cut =
      static_cast<std::size_t>(percentile * double(order.size()));
  return {order.begin(), order.begin() + std::min(cut, order.size())};
}

// ANN neighbors of the subject, minus the low-view pre-filter set and any
// near-duplicate whose cosine to the subject exceeds the dedup threshold.
// Scores are cosine similarities.
inline StageResult content_based(const std::string& item_id, const EmbeddingMatrix& embeddings,
                                 const AnnIndex& index, const FilterConfig& filters,
                                 const CatalogStats& stats, const std::string& domain, int k) {
  auto row = embeddings.item_index.find(item_id);
  if (row == embeddings.item_index.end() || !embeddings.embeddable[row->second])
    return StageResult::cold();

  const std::set<std::string> excluded =
      low_view_exclusion_set(embeddings, stats, domain, filters.low_view_percentile);

  const int fetch = std::min(embeddings.num_items(), 3 * k + 16);
  NeighborList neighbors = ann_query(index, embeddings, embeddings.row(row->second), fetch,
                                     /*search_k=*/-1, /*exclude_row=*/row->second);
  StageResult result;
  for (const Neighbor& n : neighbors) {
    if (static_cast<int>(result.entries.size()) >= k) break;
    const std::string& candidate = embeddings.item_ids[n.item];
    const double cosine = 1.0 - double(n.distance);
    if (cosine > filters.dedup_cosine_threshold) continue;  // near-duplicate
    if (excluded.count(candidate)) continue;
    result.entries.push_back({candidate, cosine});
  }
  return result;
}

// Item-to-item CF: nearest neighbors in item factor space.
inline StageResult cf_item(const std::string& item_id, const FactorModel& model,
                           const AnnIndex& factor_index, const EmbeddingMatrix& factor_embeddings,
                           int k) {
  auto row = model.item_row(item_id);
  if (!row) return StageResult::cold();
  StageResult result;
  NeighborList neighbors = ann_query(factor_index, factor_embeddings,
                                     factor_embeddings.row(*row), k,
                                     /*search_k=*/-1, /*exclude_row=*/*row);
  for (const Neighbor& n : neighbors)
    result.entries.push_back({factor_embeddings.item_ids[n.item], 1.0 - double(n.distance)});
  return result;
}

// User-to-item CF: highest predicted scores over unseen items.
inline StageResult cf_user(const std::string& user_id, const FactorModel& model,
                           const FeedbackMatrix& train, int k) {
  auto row = model.user_row(user_id);
  if (!row) return StageResult::cold();
  std::vector<double> scores = predict_scores(model, *row);

  std::set<int> seen;
  auto train_row = train.user_index.find(user_id);
  if (train_row != train.user_index.end())
    for (const auto& [col, c] : train.rows[train_row->second]) {
      auto item = model.item_row(train.item_ids[col]);
      if (item) seen.insert(*item);
    }

  std::vector<int> order;
  for (int i = 0; i < static_cast<int>(scores.size()); ++i)
    if (!seen.count(i)) order.push_back(i);
  std::sort(order.begin(), order.end(), [&](int a, int b) {
    return scores[a] != scores[b] ? scores[a] > scores[b]
                                  : model.item_ids[a] < model.item_ids[b];
  });
  StageResult result;
  for (int i : order) {
    if (static_cast<int>(result.entries.size()) >= k) break;
    result.entries.push_back({model.item_ids[i], scores[i]});
  }
  return result;
}

// ---- hybrid fallback chain ----------------------------------------------

using RecommenderFn = std::function<StageResult(const RecRequest&)>;

struct ChainStage {
  AlgorithmTag tag;
  RecommenderFn run;
};

// Walks the chain until k entries are collected. The first contributing
// stage names the list's source; partial lists are topped up from later
// stages with duplicates and the subject removed. fallback_used is set when
// any stage beyond the first contributed, the first stage was cold, or
// nothing was produced at all.
inline RecommendationList hybrid_recommend(const RecRequest& request,
                                           std::span<const ChainStage> chain) {
  if (chain.empty()) throw std::invalid_argument("hybrid_recommend: empty chain");
  RecommendationList list;
  list.request = request;
  list.source = chain.front().tag;

  std::set<std::string> included;
  bool first_cold = false;
  bool later_contributed = false;
  bool source_set = false;
  for (std::size_t stage = 0; stage < chain.size(); ++stage) {
    if (static_cast<int>(list.entries.size()) >= request.k) break;
    StageResult result = chain[stage].run(request);
    if (result.status == StageStatus::Cold) {
      if (stage == 0) first_cold = true;
      continue;
    }
    bool contributed = false;
    for (const ScoredItem& entry : result.entries) {
      if (static_cast<int>(list.entries.size()) >= request.k) break;
      if (entry.item == request.subject_id) continue;
      if (!included.insert(entry.item).second) continue;
      list.entries.push_back(entry);
      contributed = true;
    }
    if (contributed) {
      if (!source_set) {
        list.source = chain[stage].tag;
        source_set = true;
      }
      if (stage > 0) later_contributed = true;
    }
  }
  list.fallback_used = first_cold || later_contributed || list.entries.empty();
  return list;
}

inline std::string to_json_line(const RecommendationList& list) {
  nlohmann::json j;
  j["domain"] = list.request.domain;
  j["subject"] = list.request.subject_id;
  j["subject_kind"] = list.request.subject_kind == RecRequest::Subject::Item ? "item" : "user";
  j["k"] = list.request.k;
  j["source"] = to_string(list.source);
  j["fallback_used"] = list.fallback_used;
  auto& entries = j["entries"] = nlohmann::json::array();
  for (const ScoredItem& e : list.entries) entries.push_back({{"item", e.item}, {"score", e.score}});
  return j.dump();
}

}  // namespace reclab
