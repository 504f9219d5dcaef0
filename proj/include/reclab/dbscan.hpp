#pragma once

#include <algorithm>
#include <cmath>
#include <limits>
#include <queue>
#include <span>
#include <stdexcept>
#include <vector>

#include "reclab/embedding.hpp"
#include "reclab/parallel.hpp"

namespace reclab {

// DBSCAN over item embeddings plus BIC model selection across an eps grid.
// A point is core when it has >= min_pts neighbors within eps, itself
// included. Distances are Euclidean in embedding space.
struct ClusterModel {
  std::vector<int> labels;  // per embedding row; -1 = noise or unembeddable
  double eps = 0.0;
  int min_pts = 0;
  double selected_eps_score = 0.0;  // BIC of the chosen clustering
  int n_clusters = 0;
  bool fallback_single_cluster = false;

  int label_of(const EmbeddingMatrix& emb, const std::string& item) const {
    auto it = emb.item_index.find(item);
    if (it == emb.item_index.end()) return -1;
    return labels[it->second];
  }
};

namespace detail {

inline double squared_distance(std::span<const float> a, std::span<const float> b) {
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    const double d = double(a[i]) - b[i];
    s += d * d;
  }
  return s;
}

inline std::vector<int> dbscan_labels(const EmbeddingMatrix& emb,
                                      const std::vector<int>& rows, double eps, int min_pts,
                                      int& n_clusters) {
  const int n = static_cast<int>(rows.size());
  const double eps_sq = eps * eps;

  std::vector<std::vector<int>> neighbors(n);
  parallel_for(n, [&](std::size_t i) {
    for (int j = 0; j < n; ++j)
      if (squared_distance(emb.row(rows[i]), emb.row(rows[j])) <= eps_sq)
        neighbors[i].push_back(j);
  });

  std::vector<int> labels(n, -1);
  std::vector<char> visited(n, 0);
  n_clusters = 0;
  for (int i = 0; i < n; ++i) {
    if (visited[i]) continue;
    visited[i] = 1;
    if (static_cast<int>(neighbors[i].size()) < min_pts) continue;  // not core
    const int cluster = n_clusters++;
    labels[i] = cluster;
    std::queue<int> frontier;
    for (int j : neighbors[i]) frontier.push(j);
    while (!frontier.empty()) {
      const int j = frontier.front();
      frontier.pop();
      if (labels[j] == -1) labels[j] = cluster;  // border point
      if (visited[j]) continue;
      visited[j] = 1;
      labels[j] = cluster;
      if (static_cast<int>(neighbors[j].size()) >= min_pts)
        for (int q : neighbors[j]) frontier.push(q);
    }
  }
  return labels;
}

// Isotropic Gaussian per cluster; BIC = log-likelihood of non-noise points
// minus 0.5 * params * ln(n), params = clusters * (dim + 1).
inline double bic_score(const EmbeddingMatrix& emb, const std::vector<int>& rows,
                        const std::vector<int>& labels, int n_clusters) {
  if (n_clusters == 0) return -std::numeric_limits<double>::infinity();
  const int d = emb.dim;
  std::vector<std::vector<double>> means(n_clusters, std::vector<double>(d, 0.0));
  std::vector<int> counts(n_clusters, 0);
  for (std::size_t i = 0; i < rows.size(); ++i) {
    if (labels[i] < 0) continue;
    counts[labels[i]] += 1;
    auto v = emb.row(rows[i]);
    for (int f = 0; f < d; ++f) means[labels[i]][f] += v[f];
  }
  for (int c = 0; c < n_clusters; ++c)
    for (int f = 0; f < d; ++f) means[c][f] /= counts[c];

  std::vector<double> variance(n_clusters, 0.0);
  for (std::size_t i = 0; i < rows.size(); ++i) {
    if (labels[i] < 0) continue;
    auto v = emb.row(rows[i]);
    double sq = 0.0;
    for (int f = 0; f < d; ++f) {
      const double delta = v[f] - means[labels[i]][f];
      sq += delta * delta;
    }
    variance[labels[i]] += sq;
  }

  double log_likelihood = 0.0;
  std::int64_t n = 0;
  for (int c = 0; c < n_clusters; ++c) {
    const double var = std::max(variance[c] / (double(counts[c]) * d), 1e-12);
    log_likelihood += -0.5 * counts[c] * d * (std::log(2.0 * M_PI * var) + 1.0);
    n += counts[c];
  }
  const double params = double(n_clusters) * (d + 1);
  return log_likelihood - 0.5 * params * std::log(double(n));
}

}  // namespace detail

// Runs DBSCAN for every eps candidate and keeps the best BIC; ties resolve
// to the smaller eps. If every candidate labels everything noise, all
// embedded points become one cluster and the fallback flag is set.
inline ClusterModel fit_categories(const EmbeddingMatrix& embeddings,
                                   std::span<const double> eps_grid, int min_pts = 5) {
  if (embeddings.num_items() == 0)
    throw std::invalid_argument("fit_categories: empty embeddings");
  if (eps_grid.empty()) throw std::invalid_argument("fit_categories: empty eps grid");

  std::vector<int> rows;
  for (int i = 0; i < embeddings.num_items(); ++i)
    if (embeddings.embeddable[i]) rows.push_back(i);

  ClusterModel best;
  best.min_pts = min_pts;
  best.labels.assign(embeddings.num_items(), -1);
  double best_score = -std::numeric_limits<double>::infinity();

  std::vector<double> grid(eps_grid.begin(), eps_grid.end());
  std::sort(grid.begin(), grid.end());
  for (double eps : grid) {
    if (eps <= 0.0) throw std::invalid_argument("fit_categories: eps must be > 0");
    int n_clusters = 0;
    std::vector<int> labels = detail::dbscan_labels(embeddings, rows, eps, min_pts, n_clusters);
    if (n_clusters == 0) continue;
    const double score = detail::bic_score(embeddings, rows, labels, n_clusters);
    if (score > best_score) {  // strict: earlier (smaller) eps wins ties
      best_score = score;
      best.eps = eps;
      best.n_clusters = n_clusters;
      best.selected_eps_score = score;
      best.labels.assign(embeddings.num_items(), -1);
      for (std::size_t i = 0; i < rows.size(); ++i) best.labels[rows[i]] = labels[i];
    }
  }

  if (best.n_clusters == 0) {
    best.fallback_single_cluster = true;
    best.n_clusters = rows.empty() ? 0 : 1;
    for (int row : rows) best.labels[row] = 0;
    best.eps = grid.front();
    best.selected_eps_score = -std::numeric_limits<double>::infinity();
  }
  return best;
}

}  // namespace reclab
