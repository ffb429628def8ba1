#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <iostream>
#include <numeric>
#include <sstream>
#include <stdexcept>
#include <vector>

#include "ili/retrieval.hpp"
#include "ili/rng.hpp"

using namespace ili;

namespace {

DenseMatrix random_matrix(std::size_t r, std::size_t c, Rng& rng) {
  DenseMatrix m(r, c);
  for (double& v : m.data) v = rng.normal();
  return m;
}

// Independent direct-summation AP used as the oracle: walks the gallery in
// ranked order, accumulating precision at each relevant position.
double brute_force_ap(const double* query, const DenseMatrix& gallery,
                      int query_label, const std::vector<int>& gallery_labels) {
  struct Scored {
    double sim;
    int index;
  };
  std::vector<Scored> scored;
  for (std::size_t g = 0; g < gallery.rows; ++g) {
    double dot = 0.0, nq = 0.0, ng = 0.0;
    for (std::size_t k = 0; k < gallery.cols; ++k) {
      dot += query[k] * gallery.at(g, k);
      nq += query[k] * query[k];
      ng += gallery.at(g, k) * gallery.at(g, k);
    }
    double sim = (nq == 0.0 || ng == 0.0) ? 0.0 : dot / std::sqrt(nq * ng);
    scored.push_back({sim, static_cast<int>(g)});
  }
  std::sort(scored.begin(), scored.end(), [](const Scored& a, const Scored& b) {
    if (a.sim != b.sim) return a.sim > b.sim;
    return a.index < b.index;
  });
  int relevant_total = 0;
  for (int l : gallery_labels)
    if (l == query_label) ++relevant_total;
  if (relevant_total == 0) return -1.0;
  double sum = 0.0;
  int hits = 0;
  for (std::size_t k = 0; k < scored.size(); ++k)
    if (gallery_labels[(std::size_t)scored[k].index] == query_label) {
      ++hits;
      sum += static_cast<double>(hits) / static_cast<double>(k + 1);
    }
  return sum / relevant_total;
}

}  // namespace

TEST_CASE("cosine similarity handles zero vectors and scale") {
  double a[] = {1.0, 0.0};
  double b[] = {10.0, 0.0};
  double z[] = {0.0, 0.0};
  CHECK(cosine_similarity(a, b, 2) == doctest::Approx(1.0));
  CHECK(cosine_similarity(a, z, 2) == 0.0);
  CHECK(cosine_similarity(z, z, 2) == 0.0);
}

TEST_CASE("the query itself ranks first") {
  Rng rng(50);
  DenseMatrix gallery = random_matrix(10, 4, rng);
  for (std::size_t q = 0; q < gallery.rows; ++q) {
    std::vector<int> order = rank_gallery(gallery.row_ptr(q), gallery);
    CHECK(order[0] == static_cast<int>(q));
  }
}

TEST_CASE("an all-ties query falls back to index order") {
  DenseMatrix gallery(4, 2);
  gallery.fill(0.0);
  for (std::size_t g = 0; g < 4; ++g) gallery.at(g, 0) = 1.0 + (double)g;
  double query[] = {0.0, 1.0};  // orthogonal to every row
  std::vector<int> order = rank_gallery(query, gallery);
  CHECK(order == std::vector<int>{0, 1, 2, 3});
}

TEST_CASE("positive rescaling of gallery rows keeps the ranking") {
  Rng rng(51);
  DenseMatrix gallery = random_matrix(8, 3, rng);
  double query[] = {0.3, -0.2, 0.9};
  std::vector<int> base = rank_gallery(query, gallery);
  DenseMatrix scaled = gallery;
  Rng srng(52);
  for (std::size_t g = 0; g < 8; ++g) {
    double s = 0.5 + 2.0 * srng.uniform();
    for (std::size_t k = 0; k < 3; ++k) scaled.at(g, k) *= s;
  }
  CHECK(rank_gallery(query, scaled) == base);
}

TEST_CASE("rank_gallery rejects an empty gallery") {
  DenseMatrix empty(0, 3);
  double q[] = {1.0, 0.0, 0.0};
  CHECK_THROWS_AS(rank_gallery(q, empty), std::invalid_argument);
}

TEST_CASE("average precision worked examples") {
  SUBCASE("all relevant items first") {
    std::vector<int> ranking{2, 0, 1, 3};
    std::vector<bool> relevant{true, false, true, false};
    CHECK(average_precision(ranking, relevant) == doctest::Approx(1.0));
  }
  SUBCASE("single relevant item at rank 4") {
    std::vector<int> ranking{1, 2, 3, 0};
    std::vector<bool> relevant{true, false, false, false};
    CHECK(average_precision(ranking, relevant) == doctest::Approx(0.25));
  }
  SUBCASE("no relevant items is an error") {
    std::vector<int> ranking{0, 1};
    std::vector<bool> relevant{false, false};
    CHECK_THROWS_AS(average_precision(ranking, relevant),
                    std::invalid_argument);
  }
}

TEST_CASE("MAP equals the brute-force oracle on 200 random instances") {
  // The skipped-query warnings are expected here; keep the log readable.
  std::stringstream sink;
  std::streambuf* saved = std::cerr.rdbuf(sink.rdbuf());
  Rng rng(53);
  for (int trial = 0; trial < 200; ++trial) {
    std::size_t nq = 1 + (std::size_t)rng.uniform_int(10);
    std::size_t ng = 2 + (std::size_t)rng.uniform_int(29);
    std::size_t dim = 2 + (std::size_t)rng.uniform_int(5);
    int classes = 1 + (int)rng.uniform_int(4);
    DenseMatrix queries = random_matrix(nq, dim, rng);
    DenseMatrix gallery = random_matrix(ng, dim, rng);
    std::vector<int> ql(nq), gl(ng);
    for (int& l : ql) l = (int)rng.uniform_int(classes);
    for (int& l : gl) l = (int)rng.uniform_int(classes);

    double oracle_sum = 0.0;
    std::size_t used = 0;
    for (std::size_t q = 0; q < nq; ++q) {
      double ap = brute_force_ap(queries.row_ptr(q), gallery, ql[q], gl);
      if (ap >= 0.0) {
        oracle_sum += ap;
        ++used;
      }
    }
    if (used == 0) {
      CHECK_THROWS_AS(mean_average_precision(queries, gallery, ql, gl),
                      std::invalid_argument);
      continue;
    }
    double oracle = oracle_sum / (double)used;
    CHECK(mean_average_precision(queries, gallery, ql, gl) == oracle);
  }
  std::cerr.rdbuf(saved);
}

TEST_CASE("evaluate_retrieval is symmetric under swapping modalities") {
  Rng rng(54);
  DenseMatrix za = random_matrix(12, 4, rng);
  DenseMatrix zv = random_matrix(12, 4, rng);
  std::vector<int> labels{0, 1, 2, 0, 1, 2, 0, 1, 2, 0, 1, 2};
  RetrievalResult fwd = evaluate_retrieval(za, zv, labels);
  RetrievalResult rev = evaluate_retrieval(zv, za, labels);
  CHECK(fwd.map_a2v == rev.map_v2a);
  CHECK(fwd.map_v2a == rev.map_a2v);
  CHECK(fwd.map_avg == doctest::Approx((fwd.map_a2v + fwd.map_v2a) / 2)
                           .epsilon(1e-12));
}

TEST_CASE("clustered identical embeddings give perfect MAP") {
  DenseMatrix za(9, 3), zv(9, 3);
  za.fill(0.0);
  std::vector<int> labels(9);
  for (std::size_t i = 0; i < 9; ++i) {
    labels[i] = (int)(i / 3);
    za.at(i, i / 3) = 1.0 + 0.01 * (double)(i % 3);
  }
  zv = za;
  RetrievalResult r = evaluate_retrieval(za, zv, labels);
  CHECK(r.map_a2v == doctest::Approx(1.0));
  CHECK(r.map_v2a == doctest::Approx(1.0));
}

TEST_CASE("rank_and_score marks unanswerable queries with NaN") {
  Rng rng(55);
  DenseMatrix queries = random_matrix(3, 2, rng);
  DenseMatrix gallery = random_matrix(4, 2, rng);
  std::vector<int> ql{0, 7, 0};  // label 7 never occurs in the gallery
  std::vector<int> gl{0, 0, 1, 1};
  DirectionResult d = rank_and_score(queries, gallery, ql, gl);
  REQUIRE(d.ap.size() == 3);
  CHECK(std::isfinite(d.ap[0]));
  CHECK(std::isnan(d.ap[1]));
  CHECK(std::isfinite(d.ap[2]));
  CHECK(d.rankings.size() == 3);
  CHECK(d.map == doctest::Approx((d.ap[0] + d.ap[2]) / 2).epsilon(1e-12));
}

TEST_CASE("MAP stays within [0,1]") {
  Rng rng(56);
  for (int trial = 0; trial < 20; ++trial) {
    DenseMatrix queries = random_matrix(6, 3, rng);
    DenseMatrix gallery = random_matrix(15, 3, rng);
    std::vector<int> ql(6), gl(15);
    for (int& l : ql) l = (int)rng.uniform_int(3);
    for (int& l : gl) l = (int)rng.uniform_int(3);
    double map = mean_average_precision(queries, gallery, ql, gl);
    CHECK(map >= 0.0);
    CHECK(map <= 1.0);
  }
}
