#include "ili/retrieval.hpp"

#include <algorithm>
#include <cmath>
#include <iostream>
#include <limits>
#include <numeric>
#include <stdexcept>

namespace ili {

double cosine_similarity(const double* a, const double* b, std::size_t n) {
  double dot = 0.0, na = 0.0, nb = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    dot += a[i] * b[i];
    na += a[i] * a[i];
    nb += b[i] * b[i];
  }
  if (na == 0.0 || nb == 0.0) return 0.0;
  return dot / (std::sqrt(na) * std::sqrt(nb));
}

std::vector<int> rank_gallery(const double* query, const DenseMatrix& gallery) {
  if (gallery.rows == 0)
    throw std::invalid_argument("rank_gallery: empty gallery");
  std::vector<double> sims(gallery.rows);
  for (std::size_t g = 0; g < gallery.rows; ++g)
    sims[g] = cosine_similarity(query, gallery.row_ptr(g), gallery.cols);
  std::vector<int> order(gallery.rows);
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(), [&](int a, int b) {
    return sims[static_cast<std::size_t>(a)] >
           sims[static_cast<std::size_t>(b)];
  });
  return order;
}

double average_precision(const std::vector<int>& ranking,
                         const std::vector<bool>& relevant) {
  if (ranking.size() != relevant.size())
    throw std::invalid_argument("average_precision: size mismatch");
  std::size_t total_relevant = 0;
  for (bool r : relevant)
    if (r) ++total_relevant;
  if (total_relevant == 0)
    throw std::invalid_argument("average_precision: no relevant items");
  double sum = 0.0;
  std::size_t hits = 0;
  for (std::size_t k = 0; k < ranking.size(); ++k) {
    if (relevant[static_cast<std::size_t>(ranking[k])]) {
      ++hits;
      sum += static_cast<double>(hits) / static_cast<double>(k + 1);
    }
  }
  return sum / static_cast<double>(total_relevant);
}

DirectionResult rank_and_score(const DenseMatrix& queries,
                               const DenseMatrix& gallery,
                               const std::vector<int>& query_labels,
                               const std::vector<int>& gallery_labels) {
  if (queries.cols != gallery.cols)
    throw std::invalid_argument("rank_and_score: dim mismatch");
  if (query_labels.size() != queries.rows ||
      gallery_labels.size() != gallery.rows)
    throw std::invalid_argument("rank_and_score: label count mismatch");
  DirectionResult out;
  out.rankings.reserve(queries.rows);
  out.ap.reserve(queries.rows);
  double sum = 0.0;
  std::size_t used = 0, skipped = 0;
  std::vector<bool> relevant(gallery.rows);
  for (std::size_t q = 0; q < queries.rows; ++q) {
    bool any = false;
    for (std::size_t g = 0; g < gallery.rows; ++g) {
      relevant[g] = gallery_labels[g] == query_labels[q];
      any = any || relevant[g];
    }
    out.rankings.push_back(rank_gallery(queries.row_ptr(q), gallery));
    if (!any) {
      out.ap.push_back(std::numeric_limits<double>::quiet_NaN());
      ++skipped;
      continue;
    }
    double ap = average_precision(out.rankings.back(), relevant);
    out.ap.push_back(ap);
    sum += ap;
    ++used;
  }
  if (skipped > 0)
    std::cerr << "warning: " << skipped
              << " query(ies) have no relevant gallery item; excluded from "
                 "MAP\n";
  if (used == 0)
    throw std::invalid_argument(
        "rank_and_score: no query has a relevant gallery item");
  out.map = sum / static_cast<double>(used);
  return out;
}

double mean_average_precision(const DenseMatrix& queries,
                              const DenseMatrix& gallery,
                              const std::vector<int>& query_labels,
                              const std::vector<int>& gallery_labels) {
  return rank_and_score(queries, gallery, query_labels, gallery_labels).map;
}

RetrievalResult evaluate_retrieval(const DenseMatrix& z_audio,
                                   const DenseMatrix& z_visual,
                                   const std::vector<int>& labels) {
  if (z_audio.rows != z_visual.rows)
    throw std::invalid_argument("evaluate_retrieval: row count mismatch");
  RetrievalResult r;
  r.a2v = rank_and_score(z_audio, z_visual, labels, labels);
  r.v2a = rank_and_score(z_visual, z_audio, labels, labels);
  r.map_a2v = r.a2v.map;
  r.map_v2a = r.v2a.map;
  r.map_avg = 0.5 * (r.map_a2v + r.map_v2a);
  return r;
}

}  // namespace ili
