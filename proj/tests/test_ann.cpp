#include <catch2/catch_amalgamated.hpp>

#include <set>
#include <sstream>

#include "reclab/ann.hpp"
#include "reclab/rng.hpp"

using namespace reclab;

namespace {

EmbeddingMatrix random_embeddings(int n, int dim, std::uint64_t seed) {
  EmbeddingMatrix m;
  m.dim = dim;
  Rng rng(seed);
  for (int i = 0; i < n; ++i) {
    std::string id = "i" + std::to_string(i);
    m.item_index.emplace(id, i);
    m.item_ids.push_back(id);
    for (int d = 0; d < dim; ++d)
      m.data.push_back(static_cast<float>(rng.uniform(-1.0, 1.0)));
  }
  m.finalize();
  return m;
}

// Collects every leaf of a tree and checks the partition property.
void require_partition(const AnnTree& tree, int n) {
  std::vector<int> count(n, 0);
  for (std::size_t leaf = 0; leaf < tree.leaf_begin.size(); ++leaf)
    for (std::int32_t pos = tree.leaf_begin[leaf]; pos < tree.leaf_end[leaf]; ++pos)
      count[tree.items[pos]] += 1;
  for (int i = 0; i < n; ++i) REQUIRE(count[i] == 1);
}

// Independent naive scan: double loop over items and dimensions, no shared
// helpers with the implementation.
std::vector<std::pair<float, int>> naive_scan(const EmbeddingMatrix& m,
                                              std::span<const float> q) {
  std::vector<std::pair<float, int>> out;
  double qn = 0.0;
  for (float v : q) qn += double(v) * v;
  for (int i = 0; i < m.num_items(); ++i) {
    double dot = 0.0, n = 0.0;
    for (int d = 0; d < m.dim; ++d) {
      dot += double(m.row(i)[d]) * q[d];
      n += double(m.row(i)[d]) * m.row(i)[d];
    }
    if (n == 0.0) continue;
    double cos = dot / (std::sqrt(n) * std::sqrt(qn));
    if (cos > 1.0) cos = 1.0;
    if (cos < -1.0) cos = -1.0;
    out.push_back({1.0f - static_cast<float>(cos), i});
  }
  std::sort(out.begin(), out.end());
  return out;
}

}  // namespace

TEST_CASE("build_index: every tree partitions the items") {
  EmbeddingMatrix m = random_embeddings(100, 8, 3);
  AnnIndexConfig config;
  config.n_trees = 10;
  config.leaf_size = 4;
  AnnIndex index = build_index(m, config);
  REQUIRE(index.trees.size() == 10);
  for (const auto& tree : index.trees) require_partition(tree, 100);
}

TEST_CASE("build_index: N <= leaf_size yields single-leaf trees") {
  EmbeddingMatrix m = random_embeddings(10, 4, 5);
  AnnIndexConfig config;
  config.n_trees = 3;
  config.leaf_size = 16;
  AnnIndex index = build_index(m, config);
  for (const auto& tree : index.trees) {
    REQUIRE(tree.left.empty());
    REQUIRE(tree.leaf_begin.size() == 1);
    REQUIRE(tree.items.size() == 10);
  }
}

TEST_CASE("build_index: identical points fall back to index splits") {
  EmbeddingMatrix m;
  m.dim = 3;
  for (int i = 0; i < 40; ++i) {
    m.item_index.emplace("i" + std::to_string(i), i);
    m.item_ids.push_back("i" + std::to_string(i));
    m.data.insert(m.data.end(), {1.0f, 2.0f, 3.0f});
  }
  m.finalize();
  AnnIndexConfig config;
  config.n_trees = 4;
  config.leaf_size = 8;
  AnnIndex index = build_index(m, config);
  for (const auto& tree : index.trees) require_partition(tree, 40);
}

TEST_CASE("build_index is deterministic under the seed") {
  EmbeddingMatrix m = random_embeddings(200, 6, 11);
  AnnIndexConfig config;
  config.n_trees = 5;
  AnnIndex a = build_index(m, config);
  AnnIndex b = build_index(m, config);
  for (int t = 0; t < 5; ++t) {
    REQUIRE(a.trees[t].items == b.trees[t].items);
    REQUIRE(a.trees[t].normals == b.trees[t].normals);
  }
}

TEST_CASE("exact_neighbors: k = N returns all items sorted") {
  EmbeddingMatrix m = random_embeddings(20, 4, 17);
  std::vector<float> q(m.row(0).begin(), m.row(0).end());
  NeighborList all = exact_neighbors(m, q, 20);
  REQUIRE(all.size() == 20);
  for (std::size_t i = 1; i < all.size(); ++i)
    REQUIRE(all[i - 1].distance <= all[i].distance);
  REQUIRE(all[0].item == 0);
  REQUIRE(all[0].distance == 0.0f);
}

TEST_CASE("exact_neighbors: orthonormal basis catalog") {
  EmbeddingMatrix m;
  m.dim = 4;
  for (int i = 0; i < 4; ++i) {
    m.item_index.emplace("e" + std::to_string(i), i);
    m.item_ids.push_back("e" + std::to_string(i));
    for (int d = 0; d < 4; ++d) m.data.push_back(d == i ? 1.0f : 0.0f);
  }
  m.finalize();
  std::vector<float> q{1, 0, 0, 0};
  NeighborList top = exact_neighbors(m, q, 2);
  REQUIRE(top[0].item == 0);
  REQUIRE(top[0].distance == 0.0f);
  REQUIRE(top[1].distance == 1.0f);  // orthogonal -> cos 0
}

TEST_CASE("exact_neighbors matches an independently coded naive scan") {
  EmbeddingMatrix m = random_embeddings(20, 5, 23);
  Rng rng(41);
  for (int trial = 0; trial < 10; ++trial) {
    std::vector<float> q;
    for (int d = 0; d < 5; ++d) q.push_back(static_cast<float>(rng.uniform(-1, 1)));
    auto naive = naive_scan(m, q);
    NeighborList got = exact_neighbors(m, q, 20);
    REQUIRE(got.size() == naive.size());
    for (std::size_t i = 0; i < got.size(); ++i) {
      REQUIRE(got[i].item == naive[i].second);
      REQUIRE(got[i].distance == naive[i].first);
    }
  }
}

TEST_CASE("exact_neighbors rejects zero-norm queries") {
  EmbeddingMatrix m = random_embeddings(5, 3, 29);
  std::vector<float> zero(3, 0.0f);
  REQUIRE_THROWS_AS(exact_neighbors(m, zero, 1), std::invalid_argument);
  REQUIRE_THROWS_AS(ann_query(build_index(m), m, zero, 1), std::invalid_argument);
}

TEST_CASE("ann_query with search_k >= N equals the exact scan") {
  EmbeddingMatrix m = random_embeddings(300, 8, 31);
  AnnIndexConfig config;
  config.n_trees = 8;
  AnnIndex index = build_index(m, config);
  Rng rng(5);
  for (int trial = 0; trial < 5; ++trial) {
    std::vector<float> q;
    for (int d = 0; d < 8; ++d) q.push_back(static_cast<float>(rng.uniform(-1, 1)));
    NeighborList approx = ann_query(index, m, q, 10, /*search_k=*/300);
    NeighborList exact = exact_neighbors(m, q, 10);
    REQUIRE(approx.size() == exact.size());
    for (std::size_t i = 0; i < approx.size(); ++i) {
      REQUIRE(approx[i].item == exact[i].item);
      REQUIRE(approx[i].distance == exact[i].distance);
    }
  }
}

TEST_CASE("ann_query returns exact distances for whatever it returns") {
  EmbeddingMatrix m = random_embeddings(500, 16, 37);
  AnnIndex index = build_index(m);
  std::vector<float> q(m.row(42).begin(), m.row(42).end());
  NeighborList approx = ann_query(index, m, q, 10, 60);
  REQUIRE(!approx.empty());
  for (const Neighbor& n : approx) {
    const float want = angular_distance(q, m.row(n.item));
    REQUIRE(n.distance == want);
  }
  // strictly sorted with id tie-break
  for (std::size_t i = 1; i < approx.size(); ++i) {
    REQUIRE((approx[i - 1].distance < approx[i].distance ||
             (approx[i - 1].distance == approx[i].distance &&
              approx[i - 1].item < approx[i].item)));
  }
}

TEST_CASE("ann_query excludes the subject row on request") {
  EmbeddingMatrix m = random_embeddings(100, 8, 43);
  AnnIndex index = build_index(m);
  std::vector<float> q(m.row(7).begin(), m.row(7).end());
  NeighborList with = ann_query(index, m, q, 5, 100);
  NeighborList without = ann_query(index, m, q, 5, 100, /*exclude_row=*/7);
  REQUIRE(with[0].item == 7);
  for (const Neighbor& n : without) REQUIRE(n.item != 7);
}

TEST_CASE("recall on random vectors meets the operating target") {
  // Smaller sibling of the acceptance fixture: 2000 x 16-d, defaults.
  EmbeddingMatrix m = random_embeddings(2000, 16, 47);
  AnnIndex index = build_index(m);
  std::vector<int> sample;
  for (int i = 0; i < 50; ++i) sample.push_back(i * 37 % 2000);
  AnnAccuracy acc = accuracy_vs_exact(index, m, sample, 10);
  REQUIRE(acc.mean_recall >= 0.9);
  REQUIRE(acc.mean_ndcg >= 0.9);
}

TEST_CASE("accuracy_vs_exact: identical lists score 1.0") {
  EmbeddingMatrix m = random_embeddings(50, 4, 53);
  AnnIndex index = build_index(m);
  std::vector<int> sample{0, 1, 2};
  // search_k = N makes ANN exact, so both metrics hit 1 exactly.
  AnnAccuracy acc = accuracy_vs_exact(index, m, sample, 5, 50);
  REQUIRE(acc.mean_recall == 1.0);
  REQUIRE(acc.mean_ndcg == Catch::Approx(1.0).margin(1e-12));
}

TEST_CASE("recall is 1 exactly when search_k = N") {
  EmbeddingMatrix m = random_embeddings(400, 8, 59);
  AnnIndexConfig config;
  config.n_trees = 4;
  AnnIndex index = build_index(m, config);
  std::vector<int> sample{5, 105, 205, 305};
  AnnAccuracy acc = accuracy_vs_exact(index, m, sample, 10, 400);
  REQUIRE(acc.mean_recall == 1.0);
}

TEST_CASE("index save/load round-trip preserves queries") {
  EmbeddingMatrix m = random_embeddings(150, 6, 61);
  AnnIndexConfig config;
  config.n_trees = 6;
  AnnIndex index = build_index(m, config);

  std::stringstream buffer;
  save_index(index, buffer);
  AnnIndex back = load_index(buffer);
  REQUIRE(back.num_items == index.num_items);
  REQUIRE(back.dim == index.dim);
  REQUIRE(back.config.n_trees == 6);

  std::vector<float> q(m.row(3).begin(), m.row(3).end());
  NeighborList a = ann_query(index, m, q, 8);
  NeighborList b = ann_query(back, m, q, 8);
  REQUIRE(a.size() == b.size());
  for (std::size_t i = 0; i < a.size(); ++i) {
    REQUIRE(a[i].item == b[i].item);
    REQUIRE(a[i].distance == b[i].distance);
  }
}

TEST_CASE("unembeddable rows never surface as neighbors") {
  EmbeddingMatrix m = random_embeddings(30, 4, 67);
  // zero out one row
  for (int d = 0; d < 4; ++d) m.data[5 * 4 + d] = 0.0f;
  m.finalize();
  AnnIndex index = build_index(m);
  std::vector<float> q(m.row(0).begin(), m.row(0).end());
  for (const Neighbor& n : ann_query(index, m, q, 30, 30)) REQUIRE(n.item != 5);
  for (const Neighbor& n : exact_neighbors(m, q, 30)) REQUIRE(n.item != 5);
}
