#pragma once

#include <algorithm>
#include <cmath>
#include <map>
#include <stdexcept>
#include <string>
#include <unordered_map>
#include <vector>

#include <Eigen/Dense>

#include "reclab/embedding.hpp"
#include "reclab/parallel.hpp"
#include "reclab/tokenize.hpp"

namespace reclab {

// TF-IDF + truncated SVD. tf is the raw in-snippet count, idf = ln(N/df).
// With A the docs x terms tf-idf matrix and A = U S V^T, term_vectors
// stores V * diag(sigma) (= A^T U); a document with tf-idf row a embeds as
// a V = (a * term_vectors) / sigma, so a training document reproduces its
// own projection U_d * sigma exactly.
struct LsaModel {
  std::vector<std::string> terms;                  // column order
  std::unordered_map<std::string, int> vocabulary; // term -> column
  std::vector<double> idf;
  Eigen::MatrixXd term_vectors;   // terms x dim, V * diag(sigma)
  Eigen::VectorXd singular_values;  // non-increasing
  int dim = 0;
};

namespace detail {

using SparseRow = std::vector<std::pair<int, double>>;  // (term column, weight)

inline SparseRow tfidf_row(const std::vector<std::string>& tokens, const LsaModel& model) {
  std::map<int, int> tf;
  for (const auto& tok : tokens) {
    auto it = model.vocabulary.find(tok);
    if (it != model.vocabulary.end()) tf[it->second] += 1;
  }
  SparseRow row;
  row.reserve(tf.size());
  for (const auto& [col, count] : tf) row.emplace_back(col, count * model.idf[col]);
  return row;
}

inline double sparse_dot(const SparseRow& a, const SparseRow& b) {
  double s = 0.0;
  std::size_t i = 0, j = 0;
  while (i < a.size() && j < b.size()) {
    if (a[i].first < b[j].first) {
      ++i;
    } else if (a[i].first > b[j].first) {
      ++j;
    } else {
      s += a[i].second * b[j].second;
      ++i;
      ++j;
    }
  }
  return s;
}

}  // namespace detail

// Fits on snippets with at least one token; empty snippets are skipped.
// The truncated SVD comes from the eigendecomposition of the docs x docs
// Gram matrix, which keeps memory bounded by documents rather than terms.
inline LsaModel fit_lsa(const std::vector<Snippet>& snippets, int dim = 100) {
  LsaModel model;
  std::vector<const Snippet*> docs;
  for (const auto& s : snippets)
    if (!s.tokens.empty()) docs.push_back(&s);
  const int n_docs = static_cast<int>(docs.size());

  std::map<std::string, int> df;
  for (const Snippet* s : docs) {
    std::map<std::string, int> seen;
    for (const auto& tok : s->tokens) seen[tok] = 1;
    for (const auto& [tok, one] : seen) df[tok] += 1;
  }
  const int n_terms = static_cast<int>(df.size());
  if (dim < 1 || dim > std::min(n_docs, n_terms))
    throw std::invalid_argument("fit_lsa: dim must be in [1, min(#terms, #docs)]");

  model.dim = dim;
  model.terms.reserve(df.size());
  for (const auto& [term, count] : df) {
    model.vocabulary.emplace(term, static_cast<int>(model.terms.size()));
    model.terms.push_back(term);
    model.idf.push_back(std::log(double(n_docs) / count));
  }

  std::vector<detail::SparseRow> rows(n_docs);
  parallel_for(n_docs, [&](std::size_t d) { rows[d] = detail::tfidf_row(docs[d]->tokens, model); });

  Eigen::MatrixXd gram(n_docs, n_docs);
  parallel_for(n_docs, [&](std::size_t i) {
    for (int j = static_cast<int>(i); j < n_docs; ++j) {
      double v = detail::sparse_dot(rows[i], rows[j]);
      gram(i, j) = v;
      gram(j, i) = v;
    }
  });

  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eigen(gram);
  if (eigen.info() != Eigen::Success) throw std::runtime_error("fit_lsa: eigensolver failed");

  // Eigenvalues come back ascending; take the top dim.
  model.singular_values.resize(dim);
  Eigen::MatrixXd u(n_docs, dim);
  for (int j = 0; j < dim; ++j) {
    const int src = n_docs - 1 - j;
    model.singular_values(j) = std::sqrt(std::max(0.0, eigen.eigenvalues()(src)));
    u.col(j) = eigen.eigenvectors().col(src);
  }

  // term_vectors = A^T U; columns belonging to numerically zero singular
  // values are zeroed.
  model.term_vectors = Eigen::MatrixXd::Zero(n_terms, dim);
  for (int d = 0; d < n_docs; ++d)
    for (const auto& [col, w] : rows[d]) model.term_vectors.row(col) += w * u.row(d);
  const double cutoff = model.singular_values(0) * 1e-12;
  for (int j = 0; j < dim; ++j)
    if (model.singular_values(j) <= cutoff) model.term_vectors.col(j).setZero();
  return model;
}

// Projects snippets into the fitted space. Out-of-vocabulary tokens are
// ignored; all-OOV or empty snippets become zero rows flagged unembeddable.
inline EmbeddingMatrix embed_documents(const LsaModel& model, const std::vector<Snippet>& snippets) {
  EmbeddingMatrix m;
  m.dim = model.dim;
  m.source = EmbeddingSource::Lsa;
  m.data.assign(static_cast<std::size_t>(snippets.size()) * model.dim, 0.0f);
  for (const auto& s : snippets) {
    if (m.item_index.count(s.item_id))
      throw std::invalid_argument("embed_documents: duplicate item " + s.item_id);
    m.item_index.emplace(s.item_id, m.num_items());
    m.item_ids.push_back(s.item_id);
  }
  parallel_for(snippets.size(), [&](std::size_t i) {
    detail::SparseRow row = detail::tfidf_row(snippets[i].tokens, model);
    Eigen::VectorXd projected = Eigen::VectorXd::Zero(model.dim);
    for (const auto& [col, w] : row) projected += w * model.term_vectors.row(col).transpose();
    float* out = m.data.data() + i * model.dim;
    for (int j = 0; j < model.dim; ++j) {
      const double sigma = model.singular_values(j);
      out[j] = sigma > 0.0 ? static_cast<float>(projected(j) / sigma) : 0.0f;
    }
  });
  m.finalize();
  return m;
}

}  // namespace reclab
