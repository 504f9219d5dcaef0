#pragma once

#include <memory>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include "reclab/als.hpp"
#include "reclab/ann.hpp"
#include "reclab/catalog.hpp"
#include "reclab/dbscan.hpp"
#include "reclab/feedback.hpp"
#include "reclab/lsa.hpp"
#include "reclab/recommend.hpp"
#include "reclab/tokenize.hpp"
#include "reclab/word_vectors.hpp"

namespace reclab {

// Everything one domain needs to answer requests, built in one pass from
// events and documents. Immutable once built; safe for concurrent reads.
struct EngineConfig {
  int min_user_views = 2;
  int min_item_views = 5;
  int window_hours = 48;
  int snippet_length = 100;
  int lsa_dim = 100;
  std::vector<double> eps_grid = {0.2, 0.35, 0.5, 0.75, 1.0, 1.5};
  int min_pts = 5;
  AlsConfig als;
  AnnIndexConfig ann;
  FilterConfig filters;
  int default_k = 6;
  std::uint64_t seed = 1;
};

class DomainEngine {
 public:
  std::string domain;
  EngineConfig config;
  CatalogStats stats;
  FeedbackMatrix matrix;  // the CF training matrix (possibly a train split)
  std::optional<FactorModel> factors;
  EmbeddingMatrix content_embeddings;
  std::optional<AnnIndex> content_index;
  ClusterModel clusters;
  EmbeddingMatrix factor_embeddings;  // item factors as float rows
  std::optional<AnnIndex> factor_index;

  bool has_content() const { return content_index.has_value(); }
  bool has_factors() const { return factors.has_value() && factor_index.has_value(); }

  std::vector<ChainStage> item_chain() const {
    std::vector<ChainStage> chain;
    chain.push_back({AlgorithmTag::CfItem, [this](const RecRequest& r) {
                       if (!has_factors()) return StageResult::cold();
                       return cf_item(r.subject_id, *factors, *factor_index, factor_embeddings,
                                      r.k + 1);
                     }});
    chain.push_back({AlgorithmTag::ContentBased, [this](const RecRequest& r) {
                       if (!has_content()) return StageResult::cold();
                       return content_based(r.subject_id, content_embeddings, *content_index,
                                            config.filters, stats, r.domain, r.k + 1);
                     }});
    chain.push_back({AlgorithmTag::CategoryTrend, [this](const RecRequest& r) {
                       if (!has_content()) return StageResult::cold();
                       return category_trend(r.subject_id, clusters, content_embeddings, stats,
                                             r.domain, r.k + 1,
                                             derive_seed(config.seed, fnv1a64(r.subject_id)));
                     }});
    chain.push_back({AlgorithmTag::WebsiteTrend, [this](const RecRequest& r) {
                       return website_trend(stats, r.domain, r.k + 1);
                     }});
    return chain;
  }

  std::vector<ChainStage> user_chain() const {
    std::vector<ChainStage> chain;
    chain.push_back({AlgorithmTag::CfUser, [this](const RecRequest& r) {
                       if (!factors) return StageResult::cold();
                       return cf_user(r.subject_id, *factors, matrix, r.k);
                     }});
    chain.push_back({AlgorithmTag::WebsiteTrend, [this](const RecRequest& r) {
                       return website_trend(stats, r.domain, r.k + 1);
                     }});
    return chain;
  }

  RecommendationList recommend(const RecRequest& request) const {
    auto chain = request.subject_kind == RecRequest::Subject::Item ? item_chain() : user_chain();
    return hybrid_recommend(request, chain);
  }
};

// Builds the full per-domain pipeline: stats, filtered matrix, ALS factors,
// LSA embeddings + ANN index, clusters. Pieces without enough data are
// simply absent and the fallback chain routes around them.
inline DomainEngine build_engine(const std::vector<InteractionEvent>& events,
                                 const std::vector<ItemDocument>& docs,
                                 const std::string& domain, const EngineConfig& config,
                                 const std::optional<FeedbackMatrix>& pretrained_matrix = {}) {
  DomainEngine engine;
  engine.domain = domain;
  engine.config = config;

  std::vector<InteractionEvent> domain_events;
  for (const auto& e : events)
    if (e.domain == domain) domain_events.push_back(e);
  std::vector<ItemDocument> domain_docs;
  for (const auto& d : docs)
    if (d.domain == domain) domain_docs.push_back(d);

  engine.stats = compute_catalog_stats(domain_events, domain_docs, config.window_hours);

  bool any_view = false;
  for (const auto& e : domain_events) any_view |= e.kind == EventKind::View;
  if (pretrained_matrix) {
    engine.matrix = *pretrained_matrix;
  } else if (any_view) {
    engine.matrix =
        build_feedback_matrix(domain_events, config.min_user_views, config.min_item_views);
  }
  if (!engine.matrix.empty()) {
    engine.factors = train_als(engine.matrix, config.als);
    EmbeddingMatrix fe;
    fe.dim = config.als.factors;
    fe.source = EmbeddingSource::Lsa;
    for (std::size_t i = 0; i < engine.factors->item_ids.size(); ++i) {
      fe.item_index.emplace(engine.factors->item_ids[i], static_cast<int>(i));
      fe.item_ids.push_back(engine.factors->item_ids[i]);
      for (int f = 0; f < config.als.factors; ++f)
        fe.data.push_back(static_cast<float>(engine.factors->item_factors(i, f)));
    }
    fe.finalize();
    engine.factor_embeddings = std::move(fe);
    if (engine.factor_embeddings.num_items() >= 1)
      engine.factor_index = build_index(engine.factor_embeddings, config.ann);
  }

  if (!domain_docs.empty()) {
    std::vector<Snippet> snippets;
    snippets.reserve(domain_docs.size());
    for (const auto& d : domain_docs) snippets.push_back(extract_snippet(d, config.snippet_length));
    int usable = 0;
    std::set<std::string> vocab_probe;
    for (const auto& s : snippets) {
      usable += s.tokens.empty() ? 0 : 1;
      for (const auto& t : s.tokens) vocab_probe.insert(t);
    }
    const int dim = std::min({config.lsa_dim, usable, static_cast<int>(vocab_probe.size())});
    if (dim >= 1) {
      LsaModel lsa = fit_lsa(snippets, dim);
      engine.content_embeddings = embed_documents(lsa, snippets);
      if (engine.content_embeddings.num_items() >= 1)
        engine.content_index = build_index(engine.content_embeddings, config.ann);
      engine.clusters =
          fit_categories(engine.content_embeddings, config.eps_grid, config.min_pts);
    }
  }
  return engine;
}

}  // namespace reclab
