#include <catch2/catch_amalgamated.hpp>

#include <algorithm>
#include <cmath>

#include "reclab/metrics.hpp"
#include "reclab/rng.hpp"

using namespace reclab;

namespace {

// Independent naive nDCG used as the oracle: recomputes DCG term by term
// with std::pow and sorts a copy for the ideal.
double naive_ndcg(const std::vector<int>& rel, std::vector<int> ideal) {
  auto naive_dcg = [](const std::vector<int>& r) {
    double s = 0.0;
    for (std::size_t i = 0; i < r.size(); ++i)
      s += (std::pow(2.0, r[i]) - 1.0) / (std::log(double(i) + 2.0) / std::log(2.0));
    return s;
  };
  std::sort(ideal.begin(), ideal.end(), std::greater<int>());
  const double idcg = naive_dcg(ideal);
  if (idcg == 0.0) return 0.0;
  return naive_dcg(rel) / idcg;
}

}  // namespace

TEST_CASE("dcg scalar cases") {
  std::vector<int> single{1};
  REQUIRE(dcg(single, 1) == Catch::Approx(1.0).margin(1e-12));
  std::vector<int> zeros{0, 0, 0};
  REQUIRE(dcg(zeros) == 0.0);
  std::vector<int> graded{2, 1, 0};
  REQUIRE(dcg(graded, 3) == Catch::Approx(3.63093).margin(1e-5));
}

TEST_CASE("ndcg scalar cases") {
  std::vector<int> ideal_order{3, 2, 1};
  REQUIRE(ndcg(ideal_order, {3, 2, 1}) == Catch::Approx(1.0).margin(1e-12));
  std::vector<int> all_zero{0, 0};
  REQUIRE(ndcg(all_zero, {0, 0}) == 0.0);
  std::vector<int> mixed{1, 0, 1};
  REQUIRE(ndcg(mixed, {1, 0, 1}, 3) == Catch::Approx(0.91972).margin(1e-5));
}

TEST_CASE("ndcg equals the naive oracle over all permutations up to length 5") {
  const std::vector<std::vector<int>> bases = {
      {1}, {1, 0}, {2, 1, 0}, {2, 2, 1, 0}, {4, 3, 2, 1, 0}, {2, 1, 1, 0, 0}};
  for (const auto& base : bases) {
    std::vector<int> p = base;
    std::sort(p.begin(), p.end());
    do {
      const double got = ndcg(p, base);
      const double want = naive_ndcg(p, base);
      REQUIRE(got == Catch::Approx(want).margin(1e-12));
      REQUIRE(got >= 0.0);
      REQUIRE(got <= 1.0 + 1e-12);
    } while (std::next_permutation(p.begin(), p.end()));
  }
}

TEST_CASE("ndcg is 1 whenever the list is sorted by non-increasing relevance") {
  Rng rng(11);
  for (int trial = 0; trial < 50; ++trial) {
    std::vector<int> rel;
    const int n = 1 + int(rng.below(6));
    for (int i = 0; i < n; ++i) rel.push_back(int(rng.below(4)));
    std::sort(rel.begin(), rel.end(), std::greater<int>());
    const bool all_zero = std::all_of(rel.begin(), rel.end(), [](int r) { return r == 0; });
    const double v = ndcg(rel, rel);
    if (all_zero) {
      REQUIRE(v == 0.0);
    } else {
      REQUIRE(v == Catch::Approx(1.0).margin(1e-12));
    }
  }
}

TEST_CASE("hit rate scalar cases") {
  std::map<std::string, std::vector<std::string>> recs = {
      {"u1", {"a", "b"}}, {"u2", {"c"}}, {"u3", {"d", "e"}}};
  std::map<std::string, std::vector<std::string>> test = {
      {"u1", {"a"}}, {"u2", {"x"}}, {"u3", {"e"}}};
  auto hr = hit_rate_at_k(recs, test, 2);
  REQUIRE(hr);
  REQUIRE(*hr == Catch::Approx(2.0 / 3).margin(1e-12));
}

TEST_CASE("hit rate is undefined with no eligible users") {
  std::map<std::string, std::vector<std::string>> recs = {{"u1", {"a"}}};
  std::map<std::string, std::vector<std::string>> empty_tests;
  REQUIRE_FALSE(hit_rate_at_k(recs, empty_tests, 5).has_value());
}

TEST_CASE("hit rate matches a set-intersection oracle on random fixtures") {
  Rng rng(99);
  for (int trial = 0; trial < 100; ++trial) {
    std::map<std::string, std::vector<std::string>> recs, tests;
    const int users = 1 + int(rng.below(8));
    const int k = 1 + int(rng.below(5));
    for (int u = 0; u < users; ++u) {
      std::string name = "u" + std::to_string(u);
      int rec_len = int(rng.below(8));
      for (int r = 0; r < rec_len; ++r)
        recs[name].push_back("i" + std::to_string(rng.below(12)));
      int test_len = 1 + int(rng.below(4));
      for (int t = 0; t < test_len; ++t)
        tests[name].push_back("i" + std::to_string(rng.below(12)));
    }
    // oracle: literal set intersection of top-k against test set
    std::size_t hits = 0;
    for (const auto& [user, truth] : tests) {
      std::set<std::string> ts(truth.begin(), truth.end());
      bool hit = false;
      const auto& r = recs[user];
      for (int i = 0; i < std::min<int>(k, int(r.size())); ++i)
        if (ts.count(r[i])) hit = true;
      hits += hit ? 1 : 0;
    }
    const double want = double(hits) / double(tests.size());
    auto got = hit_rate_at_k(recs, tests, k);
    REQUIRE(got);
    REQUIRE(*got == want);
  }
}

TEST_CASE("hit rate is monotone in k") {
  Rng rng(5);
  std::map<std::string, std::vector<std::string>> recs, tests;
  for (int u = 0; u < 20; ++u) {
    std::string name = "u" + std::to_string(u);
    for (int r = 0; r < 10; ++r) recs[name].push_back("i" + std::to_string(rng.below(30)));
    tests[name].push_back("i" + std::to_string(rng.below(30)));
  }
  double previous = 0.0;
  for (int k = 1; k <= 10; ++k) {
    auto hr = hit_rate_at_k(recs, tests, k);
    REQUIRE(hr);
    REQUIRE(*hr >= previous);
    previous = *hr;
  }
}

TEST_CASE("fill and coverage hand fixture") {
  // 4-item catalog, item lists exist for 3, only 2 distinct items appear.
  std::set<std::string> catalog{"a", "b", "c", "d"};
  std::map<std::string, std::vector<std::string>> item_lists = {
      {"a", {"b"}}, {"b", {"a"}}, {"c", {"a"}}};
  auto report = fill_and_coverage(item_lists, {}, catalog, {});
  REQUIRE(report);
  REQUIRE(report->item_fill_rate == Catch::Approx(0.75));
  REQUIRE(report->coverage == Catch::Approx(0.5));
}

TEST_CASE("fill and coverage: all ones when everything is served") {
  std::set<std::string> catalog{"a", "b"};
  std::set<std::string> users{"u"};
  std::map<std::string, std::vector<std::string>> item_lists = {{"a", {"b"}}, {"b", {"a"}}};
  std::map<std::string, std::vector<std::string>> user_lists = {{"u", {"a"}}};
  auto report = fill_and_coverage(item_lists, user_lists, catalog, users);
  REQUIRE(report);
  REQUIRE(report->item_fill_rate == 1.0);
  REQUIRE(report->user_fill_rate == 1.0);
  REQUIRE(report->coverage == 1.0);
}

TEST_CASE("fill and coverage undefined on empty catalog") {
  REQUIRE_FALSE(fill_and_coverage({}, {}, {}, {}).has_value());
}

TEST_CASE("gini: uniform exposure gives 0") {
  REQUIRE(gini_index({1, 1, 1, 1}) == Catch::Approx(0.0).margin(1e-12));
  REQUIRE(gini_index({}) == 0.0);
  REQUIRE(gini_index({0, 0}) == 0.0);
}

TEST_CASE("gini: single exposed item of four gives 0.75") {
  REQUIRE(gini_index({0, 0, 0, 5}) == Catch::Approx(0.75).margin(1e-12));
}

TEST_CASE("gini is invariant under uniform scaling") {
  std::vector<double> base{0, 1, 2, 5, 9};
  double g1 = gini_index(base);
  for (double& v : base) v *= 7.5;
  REQUIRE(gini_index(base) == Catch::Approx(g1).margin(1e-12));
}

TEST_CASE("bias report buckets by popularity") {
  std::map<std::string, std::int64_t> views = {{"cold1", 1}, {"cold2", 2}, {"hot1", 100}, {"hot2", 90}};
  std::vector<std::vector<std::string>> lists = {{"hot1", "hot2"}, {"hot1"}, {"hot1", "cold1"}};
  BiasReport report = bias_report(lists, views, 2);
  REQUIRE(report.bucket_sizes == std::vector<std::size_t>{2, 2});
  // bottom bucket: cold1 (1 exposure) + cold2 (0) -> mean 0.5
  REQUIRE(report.bucket_mean_exposure[0] == Catch::Approx(0.5));
  // top bucket: hot2 (1) + hot1 (3) -> mean 2.0
  REQUIRE(report.bucket_mean_exposure[1] == Catch::Approx(2.0));
  REQUIRE(report.gini_exposure > 0.0);
}
