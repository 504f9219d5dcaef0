#pragma once

#include <cmath>
#include <cstdint>
#include <fstream>
#include <span>
#include <sstream>
#include <stdexcept>
#include <string>
#include <unordered_map>
#include <vector>

namespace reclab {

enum class EmbeddingSource { Lsa, WordVectorAverage };

// Dense item vectors. All-zero rows are kept but flagged unembeddable so
// downstream consumers can fall through instead of scoring garbage.
struct EmbeddingMatrix {
  std::vector<std::string> item_ids;
  std::unordered_map<std::string, int> item_index;
  std::vector<float> data;  // row-major, items x dim
  std::vector<float> norms; // cached L2 norms, one per row
  std::vector<char> embeddable;
  int dim = 0;
  EmbeddingSource source = EmbeddingSource::Lsa;

  int num_items() const { return static_cast<int>(item_ids.size()); }

  std::span<const float> row(int i) const {
    return {data.data() + static_cast<std::size_t>(i) * dim, static_cast<std::size_t>(dim)};
  }

  bool is_embeddable(const std::string& item) const {
    auto it = item_index.find(item);
    return it != item_index.end() && embeddable[it->second] != 0;
  }

  // Validates finiteness, computes norms, flags zero rows. Call after data
  // is filled in.
  void finalize() {
    const int n = num_items();
    norms.assign(n, 0.0f);
    embeddable.assign(n, 0);
    for (int i = 0; i < n; ++i) {
      double sq = 0.0;
      for (float v : row(i)) {
        if (!std::isfinite(v)) throw std::runtime_error("embedding contains non-finite value");
        sq += double(v) * v;
      }
      norms[i] = static_cast<float>(std::sqrt(sq));
      embeddable[i] = norms[i] > 0.0f ? 1 : 0;
    }
  }
};

inline float cosine_similarity(std::span<const float> a, std::span<const float> b) {
  double dot = 0.0, na = 0.0, nb = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    dot += double(a[i]) * b[i];
    na += double(a[i]) * a[i];
    nb += double(b[i]) * b[i];
  }
  if (na == 0.0 || nb == 0.0) return 0.0f;
  double c = dot / (std::sqrt(na) * std::sqrt(nb));
  if (c > 1.0) c = 1.0;
  if (c < -1.0) c = -1.0;
  return static_cast<float>(c);
}

// Export format: one line per item, "item_id v1 ... vd".
inline void save_embeddings(const EmbeddingMatrix& m, std::ostream& out) {
  out.precision(9);
  for (int i = 0; i < m.num_items(); ++i) {
    out << m.item_ids[i];
    for (float v : m.row(i)) out << ' ' << v;
    out << '\n';
  }
}

inline void save_embeddings_file(const EmbeddingMatrix& m, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write embeddings: " + path);
  save_embeddings(m, out);
}

inline EmbeddingMatrix load_embeddings(std::istream& in,
                                       EmbeddingSource source = EmbeddingSource::Lsa) {
  EmbeddingMatrix m;
  m.source = source;
  std::string line;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    std::istringstream ls(line);
    std::string id;
    if (!(ls >> id)) throw std::runtime_error("malformed embedding line");
    std::vector<float> values;
    float v;
    while (ls >> v) values.push_back(v);
    if (m.dim == 0) {
      m.dim = static_cast<int>(values.size());
      if (m.dim == 0) throw std::runtime_error("embedding row has no values");
    } else if (static_cast<int>(values.size()) != m.dim) {
      throw std::runtime_error("inconsistent embedding dimension for item " + id);
    }
    if (m.item_index.count(id)) throw std::runtime_error("duplicate embedding item " + id);
    m.item_index.emplace(id, m.num_items());
    m.item_ids.push_back(id);
    m.data.insert(m.data.end(), values.begin(), values.end());
  }
  m.finalize();
  return m;
}

inline EmbeddingMatrix load_embeddings_file(const std::string& path,
                                            EmbeddingSource source = EmbeddingSource::Lsa) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open embeddings: " + path);
  return load_embeddings(in, source);
}

}  // namespace reclab
