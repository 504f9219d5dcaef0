#pragma once

#include <charconv>
#include <cstdint>
#include <fstream>
#include <sstream>
#include <stdexcept>
#include <string>
#include <unordered_map>
#include <vector>

#include "reclab/embedding.hpp"
#include "reclab/tokenize.hpp"

namespace reclab {

// Pretrained vectors in the text format: first line "N dim", then one line
// per word: token followed by dim reals, space-separated.
struct WordVectors {
  std::unordered_map<std::string, int> index;
  std::vector<float> data;  // row-major
  int dim = 0;

  std::size_t size() const { return index.size(); }
  const float* row(int i) const { return data.data() + static_cast<std::size_t>(i) * dim; }
};

inline WordVectors load_word_vectors(std::istream& in) {
  WordVectors wv;
  std::string line;
  if (!std::getline(in, line)) throw std::runtime_error("word vectors: empty file");

  std::size_t declared = 0;
  {
    std::istringstream header(line);
    long long n = -1, d = -1;
    if (!(header >> n >> d) || n < 0 || d < 1)
      throw std::runtime_error("word vectors: malformed header, expected \"N dim\"");
    declared = static_cast<std::size_t>(n);
    wv.dim = static_cast<int>(d);
  }

  std::size_t line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    const std::size_t sep = line.find(' ');
    if (sep == std::string::npos || sep == 0)
      throw std::runtime_error("word vectors: malformed line " + std::to_string(line_no));
    std::string token = line.substr(0, sep);

    std::vector<float> values;
    values.reserve(wv.dim);
    const char* p = line.data() + sep;
    const char* end = line.data() + line.size();
    while (p < end) {
      while (p < end && *p == ' ') ++p;
      if (p == end) break;
      float v;
      auto [next, ec] = std::from_chars(p, end, v);
      if (ec != std::errc{})
        throw std::runtime_error("word vectors: bad number on line " + std::to_string(line_no));
      values.push_back(v);
      p = next;
    }
    if (static_cast<int>(values.size()) != wv.dim)
      throw std::runtime_error("word vectors: dimension mismatch on line " + std::to_string(line_no) +
                               " (expected " + std::to_string(wv.dim) + ", got " +
                               std::to_string(values.size()) + ")");
    if (wv.index.count(token)) continue;  // keep the first occurrence
    wv.index.emplace(token, static_cast<int>(wv.index.size()));
    wv.data.insert(wv.data.end(), values.begin(), values.end());
  }
  if (wv.size() != declared)
    throw std::runtime_error("word vectors: header declares " + std::to_string(declared) +
                             " entries, file has " + std::to_string(wv.size()));
  return wv;
}

inline WordVectors load_word_vectors_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open word vectors: " + path);
  return load_word_vectors(in);
}

struct WordAverageResult {
  EmbeddingMatrix embeddings;
  std::uint64_t oov_tokens = 0;
  std::uint64_t total_tokens = 0;
};

// Item vector = arithmetic mean of in-vocabulary token vectors. Items whose
// tokens are all OOV get a zero row flagged unembeddable.
inline WordAverageResult embed_from_word_vectors(const WordVectors& wv,
                                                 const std::vector<Snippet>& snippets) {
  WordAverageResult result;
  EmbeddingMatrix& m = result.embeddings;
  m.dim = wv.dim;
  m.source = EmbeddingSource::WordVectorAverage;
  m.data.assign(snippets.size() * static_cast<std::size_t>(wv.dim), 0.0f);
  for (std::size_t i = 0; i < snippets.size(); ++i) {
    const Snippet& s = snippets[i];
    if (m.item_index.count(s.item_id))
      throw std::invalid_argument("embed_from_word_vectors: duplicate item " + s.item_id);
    m.item_index.emplace(s.item_id, static_cast<int>(i));
    m.item_ids.push_back(s.item_id);

    std::vector<double> sum(wv.dim, 0.0);
    std::int64_t hits = 0;
    for (const auto& tok : s.tokens) {
      ++result.total_tokens;
      auto it = wv.index.find(tok);
      if (it == wv.index.end()) {
        ++result.oov_tokens;
        continue;
      }
      const float* v = wv.row(it->second);
      for (int j = 0; j < wv.dim; ++j) sum[j] += v[j];
      ++hits;
    }
    if (hits > 0) {
      float* out = m.data.data() + i * wv.dim;
      for (int j = 0; j < wv.dim; ++j) out[j] = static_cast<float>(sum[j] / hits);
    }
  }
  m.finalize();
  return result;
}

}  // namespace reclab
