#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <map>
#include <sstream>

#include "reclab/lsa.hpp"
#include "reclab/tokenize.hpp"
#include "reclab/word_vectors.hpp"

using namespace reclab;

namespace {

ItemDocument doc(const std::string& id, const std::string& title, const std::string& body) {
  ItemDocument d;
  d.item = id;
  d.domain = "d";
  d.title = title;
  d.body = body;
  return d;
}

// Independent dense SVD oracle: builds the raw tf-idf matrix with its own
// tf/idf arithmetic and extracts the top singular value by power iteration
// on A^T A. No reclab LSA code on this path.
double top_singular_value_oracle(const std::vector<std::vector<std::string>>& docs) {
  std::map<std::string, int> vocab;
  std::map<std::string, int> df;
  for (const auto& tokens : docs) {
    std::map<std::string, bool> seen;
    for (const auto& t : tokens) seen[t] = true;
    for (const auto& [t, unused] : seen) df[t] += 1;
  }
  for (const auto& [t, unused] : df) vocab.emplace(t, static_cast<int>(vocab.size()));

  const std::size_t n = docs.size(), m = vocab.size();
  std::vector<std::vector<double>> a(n, std::vector<double>(m, 0.0));
  for (std::size_t d = 0; d < n; ++d) {
    std::map<std::string, int> tf;
    for (const auto& t : docs[d]) tf[t] += 1;
    for (const auto& [t, count] : tf)
      a[d][vocab.at(t)] = count * std::log(double(n) / df.at(t));
  }

  std::vector<double> v(m, 1.0 / std::sqrt(double(m)));
  double sigma = 0.0;
  for (int iter = 0; iter < 3000; ++iter) {
    std::vector<double> av(n, 0.0);
    for (std::size_t d = 0; d < n; ++d)
      for (std::size_t t = 0; t < m; ++t) av[d] += a[d][t] * v[t];
    std::vector<double> atav(m, 0.0);
    for (std::size_t d = 0; d < n; ++d)
      for (std::size_t t = 0; t < m; ++t) atav[t] += a[d][t] * av[d];
    double norm = 0.0;
    for (double x : atav) norm += x * x;
    norm = std::sqrt(norm);
    if (norm == 0.0) return 0.0;
    for (std::size_t t = 0; t < m; ++t) v[t] = atav[t] / norm;
    sigma = std::sqrt(norm);
  }
  return sigma;
}

}  // namespace

TEST_CASE("tokenize folds case and strips punctuation") {
  REQUIRE(tokenize("Hello, World!") == std::vector<std::string>{"hello", "world"});
  REQUIRE(tokenize("a  b\tc\nd") == std::vector<std::string>{"a", "b", "c", "d"});
  REQUIRE(tokenize("") == std::vector<std::string>{});
  REQUIRE(tokenize("...!?") == std::vector<std::string>{});
  REQUIRE(tokenize("caf\xC3\xA9 2024") == std::vector<std::string>{"caf\xC3\xA9", "2024"});
}

TEST_CASE("tokenize handles non-Latin scripts and bad bytes") {
  // Arabic-script words separated by an Arabic comma
  auto t = tokenize("\xD8\xB3\xD9\x84\xD8\xA7\xD9\x85\xD8\x8C\xD8\xAE\xD9\x88\xD8\xA8");
  REQUIRE(t.size() == 2);
  // lone continuation byte acts as a separator
  REQUIRE(tokenize("ab\x80zz") == std::vector<std::string>{"ab", "zz"});
}

TEST_CASE("extract_snippet with L=0 keeps only the title") {
  Snippet s = extract_snippet(doc("x", "a b", "body words here"), 0);
  REQUIRE(s.tokens == std::vector<std::string>{"a", "b"});
}

TEST_CASE("extract_snippet truncation is a no-op on short bodies") {
  Snippet s = extract_snippet(doc("x", "t", "one two three"), 5);
  REQUIRE(s.tokens == std::vector<std::string>{"t", "one", "two", "three"});
}

TEST_CASE("extract_snippet flags empty sources") {
  Snippet s = extract_snippet(doc("x", "", ""), 100);
  REQUIRE(s.empty_source);
  REQUIRE(s.tokens.empty());
}

TEST_CASE("extract_snippet caps body tokens at L") {
  Snippet s = extract_snippet(doc("x", "title", "w1 w2 w3 w4 w5 w6"), 3);
  REQUIRE(s.tokens == std::vector<std::string>{"title", "w1", "w2", "w3"});
}

namespace {

std::vector<Snippet> fixture_snippets() {
  std::vector<ItemDocument> docs = {
      doc("d0", "apple fruit", "apple orchard grows sweet apple fruit"),
      doc("d1", "apple fruit", "apple orchard grows sweet apple fruit"),
      doc("d2", "market report", "market prices rise in the stock market report"),
      doc("d3", "fruit market", "apple prices fall at the fruit market"),
      doc("d4", "orchard visit", "a visit to the orchard with sweet fruit"),
      doc("d5", "stock analysis", "stock prices and market analysis report"),
  };
  std::vector<Snippet> snippets;
  for (const auto& d : docs) snippets.push_back(extract_snippet(d, 100));
  return snippets;
}

}  // namespace

TEST_CASE("fit_lsa: identical documents project to cosine 1") {
  auto snippets = fixture_snippets();
  LsaModel model = fit_lsa(snippets, 3);
  EmbeddingMatrix emb = embed_documents(model, snippets);
  float c = cosine_similarity(emb.row(0), emb.row(1));
  REQUIRE(c == Catch::Approx(1.0).margin(1e-6));
}

TEST_CASE("fit_lsa: singular values are non-increasing") {
  auto snippets = fixture_snippets();
  LsaModel model = fit_lsa(snippets, 4);
  for (int j = 1; j < 4; ++j)
    REQUIRE(model.singular_values(j) <= model.singular_values(j - 1) + 1e-12);
}

TEST_CASE("fit_lsa: top singular value matches the power-method oracle") {
  auto snippets = fixture_snippets();
  std::vector<std::vector<std::string>> docs;
  for (const auto& s : snippets) docs.push_back(s.tokens);
  const double oracle = top_singular_value_oracle(docs);
  LsaModel model = fit_lsa(snippets, 3);
  REQUIRE(model.singular_values(0) == Catch::Approx(oracle).epsilon(1e-9));
}

TEST_CASE("fit_lsa rejects out-of-range dim") {
  auto snippets = fixture_snippets();
  REQUIRE_THROWS_AS(fit_lsa(snippets, 1000), std::invalid_argument);
  REQUIRE_THROWS_AS(fit_lsa(snippets, 0), std::invalid_argument);
}

TEST_CASE("embed_documents reproduces training projections") {
  auto snippets = fixture_snippets();
  LsaModel model = fit_lsa(snippets, 3);
  EmbeddingMatrix all = embed_documents(model, snippets);

  Snippet duplicate = snippets[3];
  duplicate.item_id = "copy";
  EmbeddingMatrix one = embed_documents(model, {duplicate});
  for (int j = 0; j < 3; ++j)
    REQUIRE(one.row(0)[j] == Catch::Approx(all.row(3)[j]).margin(1e-6));
}

TEST_CASE("embed_documents flags all-OOV snippets") {
  auto snippets = fixture_snippets();
  LsaModel model = fit_lsa(snippets, 3);
  Snippet oov;
  oov.item_id = "weird";
  oov.tokens = {"zzz", "qqq"};
  EmbeddingMatrix emb = embed_documents(model, {oov});
  REQUIRE_FALSE(emb.is_embeddable("weird"));
}

TEST_CASE("near-duplicate documents have the highest pairwise cosine") {
  auto snippets = fixture_snippets();
  LsaModel model = fit_lsa(snippets, 4);
  EmbeddingMatrix emb = embed_documents(model, snippets);
  float best = -2.0f;
  int bi = -1, bj = -1;
  for (int i = 0; i < emb.num_items(); ++i)
    for (int j = i + 1; j < emb.num_items(); ++j) {
      float c = cosine_similarity(emb.row(i), emb.row(j));
      if (c > best) {
        best = c;
        bi = i;
        bj = j;
      }
    }
  REQUIRE(bi == 0);
  REQUIRE(bj == 1);
}

TEST_CASE("cosines are invariant under scaling all term vectors") {
  auto snippets = fixture_snippets();
  LsaModel model = fit_lsa(snippets, 3);
  LsaModel scaled = model;
  scaled.term_vectors *= 3.7;
  EmbeddingMatrix a = embed_documents(model, snippets);
  EmbeddingMatrix b = embed_documents(scaled, snippets);
  for (int i = 0; i < a.num_items(); ++i)
    for (int j = i + 1; j < a.num_items(); ++j)
      REQUIRE(cosine_similarity(a.row(i), a.row(j)) ==
              Catch::Approx(cosine_similarity(b.row(i), b.row(j))).margin(1e-5));
}

TEST_CASE("reconstruction error is non-increasing in dim") {
  auto snippets = fixture_snippets();
  // Dense A via the model's vocabulary/idf, reconstruction via E * V^T.
  double previous = std::numeric_limits<double>::infinity();
  for (int dim = 1; dim <= 4; ++dim) {
    LsaModel model = fit_lsa(snippets, dim);
    EmbeddingMatrix emb = embed_documents(model, snippets);
    const int terms = static_cast<int>(model.terms.size());
    double err = 0.0;
    for (int d = 0; d < emb.num_items(); ++d) {
      std::map<std::string, int> tf;
      for (const auto& t : snippets[d].tokens) tf[t] += 1;
      for (int t = 0; t < terms; ++t) {
        auto it = tf.find(model.terms[t]);
        const double a = it == tf.end() ? 0.0 : it->second * model.idf[t];
        double recon = 0.0;
        for (int j = 0; j < dim; ++j) {
          const double sigma = model.singular_values(j);
          const double v = sigma > 0 ? model.term_vectors(t, j) / sigma : 0.0;
          recon += emb.row(d)[j] * v;
        }
        err += (a - recon) * (a - recon);
      }
    }
    REQUIRE(err <= previous + 1e-6);
    previous = err;
  }
}

TEST_CASE("word vector loading and averaging") {
  std::istringstream in("3 2\nalpha 1 0\nbeta 0 1\ngamma 1 1\n");
  WordVectors wv = load_word_vectors(in);
  REQUIRE(wv.size() == 3);
  REQUIRE(wv.dim == 2);

  Snippet one{"single", {"alpha"}, 0, false};
  Snippet mix{"mix", {"alpha", "beta", "gamma"}, 0, false};
  Snippet perm{"perm", {"gamma", "alpha", "beta"}, 0, false};
  Snippet oov{"oov", {"nope"}, 0, false};
  auto result = embed_from_word_vectors(wv, {one, mix, perm, oov});
  const EmbeddingMatrix& emb = result.embeddings;

  REQUIRE(emb.row(0)[0] == 1.0f);
  REQUIRE(emb.row(0)[1] == 0.0f);
  // (1,0)+(0,1)+(1,1) averaged -> (2/3, 2/3)
  REQUIRE(emb.row(1)[0] == Catch::Approx(2.0 / 3).margin(1e-7));
  REQUIRE(emb.row(1)[1] == Catch::Approx(2.0 / 3).margin(1e-7));
  // permutation invariance
  REQUIRE(emb.row(2)[0] == emb.row(1)[0]);
  REQUIRE(emb.row(2)[1] == emb.row(1)[1]);
  REQUIRE_FALSE(emb.is_embeddable("oov"));
  REQUIRE(result.oov_tokens == 1);
  REQUIRE(result.total_tokens == 8);
}

TEST_CASE("word vector file dimension mismatch is fatal") {
  std::istringstream in("2 3\nalpha 1 0 0\nbeta 0 1\n");
  REQUIRE_THROWS(load_word_vectors(in));
}

TEST_CASE("word vector header mismatch is fatal") {
  std::istringstream in("5 2\nalpha 1 0\n");
  REQUIRE_THROWS(load_word_vectors(in));
}

TEST_CASE("embedding save/load round-trip") {
  std::istringstream in("2 2\nalpha 0.5 -1.25 \nbeta 3 4\n");
  WordVectors wv = load_word_vectors(in);
  Snippet a{"a", {"alpha"}, 0, false};
  Snippet b{"b", {"beta"}, 0, false};
  EmbeddingMatrix emb = embed_from_word_vectors(wv, {a, b}).embeddings;

  std::stringstream buffer;
  save_embeddings(emb, buffer);
  EmbeddingMatrix back = load_embeddings(buffer, EmbeddingSource::WordVectorAverage);
  REQUIRE(back.num_items() == 2);
  REQUIRE(back.dim == 2);
  for (int i = 0; i < 2; ++i)
    for (int j = 0; j < 2; ++j) REQUIRE(back.row(i)[j] == emb.row(i)[j]);
}
