#pragma once

#include <algorithm>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <limits>
#include <queue>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "reclab/embedding.hpp"
#include "reclab/metrics.hpp"
#include "reclab/parallel.hpp"
#include "reclab/rng.hpp"

namespace reclab {

// Forest of random-projection split trees over an embedding space, angular
// metric. Each internal node splits its subset by the perpendicular
// bisector of two randomly chosen distinct points; leaves hold at most
// leaf_size rows. Queries run a best-first traversal over all trees with a
// shared priority queue of path margins, then score candidates exactly.
struct AnnIndexConfig {
  int n_trees = 50;
  int leaf_size = 16;
  std::uint64_t seed = 7;

  static int default_search_k(int n_trees, int k) { return n_trees * k; }
};

// distance = 1 - cosine similarity, in [0, 2]. The forest approximates the
// neighbor *set*; reported distances are always exact.
inline float angular_distance(std::span<const float> a, std::span<const float> b) {
  return 1.0f - cosine_similarity(a, b);
}

struct Neighbor {
  int item = -1;
  float distance = 0.0f;
};
using NeighborList = std::vector<Neighbor>;

struct AnnTree {
  // Internal node arrays; child refs >= 0 are internal ids, < 0 encode
  // ~leaf_id. root is encoded the same way (a whole-tree leaf is valid).
  std::vector<std::int32_t> left;
  std::vector<std::int32_t> right;
  std::vector<float> offset;
  std::vector<float> normals;  // internal_count x dim
  std::vector<std::int32_t> leaf_begin;
  std::vector<std::int32_t> leaf_end;
  std::vector<std::int32_t> items;
  std::int32_t root = ~0;
};

struct AnnIndex {
  int num_items = 0;
  int dim = 0;
  AnnIndexConfig config;
  std::vector<AnnTree> trees;
};

namespace detail {

struct TreeBuilder {
  const EmbeddingMatrix& emb;
  int leaf_size;
  int max_depth;
  Rng rng;
  AnnTree tree;

  TreeBuilder(const EmbeddingMatrix& e, int ls, std::uint64_t seed)
      : emb(e), leaf_size(ls), rng(seed) {
    int depth_budget = 2 * (32 - __builtin_clz(std::max(1, e.num_items()))) + 32;
    max_depth = depth_budget;
  }

  std::int32_t make_leaf(std::span<const std::int32_t> rows) {
    const std::int32_t id = static_cast<std::int32_t>(tree.leaf_begin.size());
    tree.leaf_begin.push_back(static_cast<std::int32_t>(tree.items.size()));
    tree.items.insert(tree.items.end(), rows.begin(), rows.end());
    tree.leaf_end.push_back(static_cast<std::int32_t>(tree.items.size()));
    return ~id;
  }

  bool rows_equal(int a, int b) {
    auto ra = emb.row(a), rb = emb.row(b);
    return std::equal(ra.begin(), ra.end(), rb.begin());
  }

  // Picks two rows with distinct vectors; falls back to a scan, and signals
  // an all-identical subset with false.
  bool pick_pair(std::span<const std::int32_t> rows, int& a, int& b) {
    const std::size_t n = rows.size();
    for (int attempt = 0; attempt < 16; ++attempt) {
      const int i = static_cast<int>(rng.below(n));
      const int j = static_cast<int>(rng.below(n));
      if (i != j && !rows_equal(rows[i], rows[j])) {
        a = rows[i];
        b = rows[j];
        return true;
      }
    }
    for (std::size_t j = 1; j < n; ++j) {
      if (!rows_equal(rows[0], rows[j])) {
        a = rows[0];
        b = rows[j];
        return true;
      }
    }
    return false;
  }

  std::int32_t build(std::vector<std::int32_t> rows, int depth) {
    if (static_cast<int>(rows.size()) <= leaf_size) return make_leaf(rows);

    int pa = -1, pb = -1;
    const bool distinct = depth < max_depth && pick_pair(rows, pa, pb);
    if (!distinct) {
      // Degenerate rule: split by index at a random pivot. Also the escape
      // hatch for pathologically unbalanced recursions.
      std::sort(rows.begin(), rows.end());
      const std::size_t pivot = 1 + rng.below(rows.size() - 1);
      std::vector<std::int32_t> lo(rows.begin(), rows.begin() + pivot);
      std::vector<std::int32_t> hi(rows.begin() + pivot, rows.end());
      const std::int32_t id = allocate_internal(std::vector<float>(emb.dim, 0.0f), 0.0f);
      const std::int32_t l = build(std::move(lo), depth + 1);
      const std::int32_t r = build(std::move(hi), depth + 1);
      tree.left[id] = l;
      tree.right[id] = r;
      return id;
    }

    // Perpendicular bisector of the two picked points: normal = a - b,
    // offset = normal . midpoint. margin(a) > 0 > margin(b), so both sides
    // are nonempty.
    auto va = emb.row(pa), vb = emb.row(pb);
    std::vector<float> normal(emb.dim);
    float offset = 0.0f;
    for (int d = 0; d < emb.dim; ++d) {
      normal[d] = va[d] - vb[d];
      offset += normal[d] * (va[d] + vb[d]) * 0.5f;
    }

    std::vector<std::int32_t> lo, hi;
    for (std::int32_t row : rows) {
      float margin = -offset;
      auto v = emb.row(row);
      for (int d = 0; d < emb.dim; ++d) margin += normal[d] * v[d];
      (margin >= 0.0f ? hi : lo).push_back(row);
    }
    if (lo.empty() || hi.empty()) {
      // Float roundoff collapsed a side; fall back to the index rule.
      std::sort(rows.begin(), rows.end());
      const std::size_t pivot = rows.size() / 2;
      lo.assign(rows.begin(), rows.begin() + pivot);
      hi.assign(rows.begin() + pivot, rows.end());
      normal.assign(emb.dim, 0.0f);
      offset = 0.0f;
    }

    const std::int32_t id = allocate_internal(normal, offset);
    const std::int32_t l = build(std::move(lo), depth + 1);
    const std::int32_t r = build(std::move(hi), depth + 1);
    tree.left[id] = l;
    tree.right[id] = r;
    return id;
  }

  std::int32_t allocate_internal(const std::vector<float>& normal, float offset) {
    const std::int32_t id = static_cast<std::int32_t>(tree.left.size());
    tree.left.push_back(0);
    tree.right.push_back(0);
    tree.offset.push_back(offset);
    tree.normals.insert(tree.normals.end(), normal.begin(), normal.end());
    return id;
  }
};

}  // namespace detail

inline AnnIndex build_index(const EmbeddingMatrix& embeddings, const AnnIndexConfig& config = {}) {
  if (embeddings.num_items() == 0) throw std::invalid_argument("build_index: empty embeddings");
  if (config.n_trees < 1 || config.leaf_size < 2)
    throw std::invalid_argument("build_index: invalid config");

  AnnIndex index;
  index.num_items = embeddings.num_items();
  index.dim = embeddings.dim;
  index.config = config;
  index.trees.resize(config.n_trees);

  std::vector<std::int32_t> all(embeddings.num_items());
  for (int i = 0; i < embeddings.num_items(); ++i) all[i] = i;

  parallel_for(config.n_trees, [&](std::size_t t) {
    detail::TreeBuilder builder(embeddings, config.leaf_size, derive_seed(config.seed, t));
    builder.tree.root = builder.build(all, 0);
    index.trees[t] = std::move(builder.tree);
  });
  return index;
}

inline NeighborList exact_neighbors(const EmbeddingMatrix& embeddings, std::span<const float> query,
                                    int k, int exclude_row = -1) {
  if (static_cast<int>(query.size()) != embeddings.dim)
    throw std::invalid_argument("exact_neighbors: query dimension mismatch");
  if (k < 1) throw std::invalid_argument("exact_neighbors: k must be >= 1");
  double qn = 0.0;
  for (float v : query) qn += double(v) * v;
  if (qn == 0.0) throw std::invalid_argument("exact_neighbors: zero-norm query");

  NeighborList all;
  all.reserve(embeddings.num_items());
  for (int i = 0; i < embeddings.num_items(); ++i) {
    if (i == exclude_row || embeddings.norms[i] == 0.0f) continue;
    all.push_back({i, angular_distance(query, embeddings.row(i))});
  }
  auto by_distance = [](const Neighbor& a, const Neighbor& b) {
    return a.distance != b.distance ? a.distance < b.distance : a.item < b.item;
  };
  const std::size_t top = std::min<std::size_t>(k, all.size());
  std::partial_sort(all.begin(), all.begin() + top, all.end(), by_distance);
  all.resize(top);
  return all;
}

// Best-first search across all trees. search_k counts unique candidates
// whose exact distance will be computed; search_k >= N degenerates to the
// exact scan (recall 1 by construction).
inline NeighborList ann_query(const AnnIndex& index, const EmbeddingMatrix& embeddings,
                              std::span<const float> query, int k, int search_k = -1,
                              int exclude_row = -1) {
  if (static_cast<int>(query.size()) != index.dim)
    throw std::invalid_argument("ann_query: query dimension mismatch");
  if (k < 1) throw std::invalid_argument("ann_query: k must be >= 1");
  double qn = 0.0;
  for (float v : query) qn += double(v) * v;
  if (qn == 0.0) throw std::invalid_argument("ann_query: zero-norm query");
  if (search_k < 0) search_k = AnnIndexConfig::default_search_k(index.config.n_trees, k);
  if (search_k < k) search_k = k;

  // (priority, tree, node ref); ties pop in (tree, node) order so traversal
  // is deterministic.
  using Entry = std::tuple<double, std::int32_t, std::int32_t>;
  auto cmp = [](const Entry& a, const Entry& b) {
    if (std::get<0>(a) != std::get<0>(b)) return std::get<0>(a) < std::get<0>(b);
    if (std::get<1>(a) != std::get<1>(b)) return std::get<1>(a) > std::get<1>(b);
    return std::get<2>(a) > std::get<2>(b);
  };
  std::priority_queue<Entry, std::vector<Entry>, decltype(cmp)> frontier(cmp);
  const double inf = std::numeric_limits<double>::infinity();
  for (std::int32_t t = 0; t < static_cast<std::int32_t>(index.trees.size()); ++t)
    frontier.emplace(inf, t, index.trees[t].root);

  std::vector<char> seen(index.num_items, 0);
  std::vector<std::int32_t> candidates;
  candidates.reserve(search_k);

  while (!frontier.empty() && static_cast<int>(candidates.size()) < search_k) {
    auto [priority, t, ref] = frontier.top();
    frontier.pop();
    const AnnTree& tree = index.trees[t];
    if (ref < 0) {
      const std::int32_t leaf = ~ref;
      for (std::int32_t pos = tree.leaf_begin[leaf]; pos < tree.leaf_end[leaf]; ++pos) {
        const std::int32_t row = tree.items[pos];
        if (!seen[row]) {
          seen[row] = 1;
          candidates.push_back(row);
        }
      }
    } else {
      const float* normal = tree.normals.data() + static_cast<std::size_t>(ref) * index.dim;
      double margin = -double(tree.offset[ref]);
      for (int d = 0; d < index.dim; ++d) margin += double(normal[d]) * query[d];
      frontier.emplace(std::min(priority, +margin), t, tree.right[ref]);
      frontier.emplace(std::min(priority, -margin), t, tree.left[ref]);
    }
  }

  NeighborList result;
  result.reserve(candidates.size());
  for (std::int32_t row : candidates) {
    if (row == exclude_row || embeddings.norms[row] == 0.0f) continue;
    result.push_back({row, angular_distance(query, embeddings.row(row))});
  }
  auto by_distance = [](const Neighbor& a, const Neighbor& b) {
    return a.distance != b.distance ? a.distance < b.distance : a.item < b.item;
  };
  const std::size_t top = std::min<std::size_t>(k, result.size());
  std::partial_sort(result.begin(), result.begin() + top, result.end(), by_distance);
  result.resize(top);
  return result;
}

struct AnnAccuracy {
  double mean_ndcg = 0.0;
  double mean_recall = 0.0;
};

// Graded-relevance fidelity: the exact top-k defines relevance k - rank,
// the ANN list is scored with nDCG@k against that ideal plus set recall.
inline AnnAccuracy accuracy_vs_exact(const AnnIndex& index, const EmbeddingMatrix& embeddings,
                                     std::span<const int> sample_rows, int k, int search_k = -1) {
  if (sample_rows.empty()) throw std::invalid_argument("accuracy_vs_exact: empty sample");
  double ndcg_sum = 0.0, recall_sum = 0.0;
  for (int row : sample_rows) {
    const auto query = embeddings.row(row);
    NeighborList exact = exact_neighbors(embeddings, query, k, row);
    NeighborList approx = ann_query(index, embeddings, query, k, search_k, row);

    std::unordered_map<int, int> relevance;  // item -> k - rank (1-based rank)
    std::vector<int> ideal;
    for (std::size_t r = 0; r < exact.size(); ++r) {
      const int rel_r = k - static_cast<int>(r) - 1;
      relevance[exact[r].item] = rel_r;
      ideal.push_back(rel_r);
    }
    std::vector<int> rel;
    std::size_t overlap = 0;
    for (const Neighbor& n : approx) {
      auto it = relevance.find(n.item);
      rel.push_back(it == relevance.end() ? 0 : it->second);
      if (it != relevance.end()) ++overlap;
    }
    ndcg_sum += ndcg(rel, ideal, k);
    recall_sum += exact.empty() ? 1.0 : double(overlap) / double(exact.size());
  }
  return {ndcg_sum / double(sample_rows.size()), recall_sum / double(sample_rows.size())};
}

// --- serialization -----------------------------------------------------
// Little-endian binary; layout documented in docs/formats.md. Magic "RANN",
// version 1.

namespace detail {

template <typename T>
void write_pod(std::ostream& out, const T& value) {
  out.write(reinterpret_cast<const char*>(&value), sizeof(T));
}

template <typename T>
void write_vec(std::ostream& out, const std::vector<T>& v) {
  write_pod(out, std::uint64_t{v.size()});
  out.write(reinterpret_cast<const char*>(v.data()), sizeof(T) * v.size());
}

template <typename T>
T read_pod(std::istream& in) {
  T value;
  in.read(reinterpret_cast<char*>(&value), sizeof(T));
  if (!in) throw std::runtime_error("ann index: truncated stream");
  return value;
}

template <typename T>
std::vector<T> read_vec(std::istream& in) {
  const std::uint64_t n = read_pod<std::uint64_t>(in);
  std::vector<T> v(n);
  in.read(reinterpret_cast<char*>(v.data()), sizeof(T) * n);
  if (!in) throw std::runtime_error("ann index: truncated stream");
  return v;
}

}  // namespace detail

inline void save_index(const AnnIndex& index, std::ostream& out) {
  out.write("RANN", 4);
  detail::write_pod(out, std::uint32_t{1});
  detail::write_pod(out, std::uint32_t(index.num_items));
  detail::write_pod(out, std::uint32_t(index.dim));
  detail::write_pod(out, std::uint32_t(index.config.n_trees));
  detail::write_pod(out, std::uint32_t(index.config.leaf_size));
  detail::write_pod(out, std::uint64_t(index.config.seed));
  for (const AnnTree& tree : index.trees) {
    detail::write_pod(out, tree.root);
    detail::write_vec(out, tree.left);
    detail::write_vec(out, tree.right);
    detail::write_vec(out, tree.offset);
    detail::write_vec(out, tree.normals);
    detail::write_vec(out, tree.leaf_begin);
    detail::write_vec(out, tree.leaf_end);
    detail::write_vec(out, tree.items);
  }
}

inline void save_index_file(const AnnIndex& index, const std::string& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write index: " + path);
  save_index(index, out);
}

inline AnnIndex load_index(std::istream& in) {
  char magic[4];
  in.read(magic, 4);
  if (!in || std::memcmp(magic, "RANN", 4) != 0)
    throw std::runtime_error("ann index: bad magic");
  const auto version = detail::read_pod<std::uint32_t>(in);
  if (version != 1) throw std::runtime_error("ann index: unsupported version");
  AnnIndex index;
  index.num_items = detail::read_pod<std::uint32_t>(in);
  index.dim = detail::read_pod<std::uint32_t>(in);
  index.config.n_trees = detail::read_pod<std::uint32_t>(in);
  index.config.leaf_size = detail::read_pod<std::uint32_t>(in);
  index.config.seed = detail::read_pod<std::uint64_t>(in);
  index.trees.resize(index.config.n_trees);
  for (AnnTree& tree : index.trees) {
    tree.root = detail::read_pod<std::int32_t>(in);
    tree.left = detail::read_vec<std::int32_t>(in);
    tree.right = detail::read_vec<std::int32_t>(in);
    tree.offset = detail::read_vec<float>(in);
    tree.normals = detail::read_vec<float>(in);
    tree.leaf_begin = detail::read_vec<std::int32_t>(in);
    tree.leaf_end = detail::read_vec<std::int32_t>(in);
    tree.items = detail::read_vec<std::int32_t>(in);
  }
  return index;
}

inline AnnIndex load_index_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open index: " + path);
  return load_index(in);
}

}  // namespace reclab
