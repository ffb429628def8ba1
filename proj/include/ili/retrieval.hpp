#ifndef ILI_RETRIEVAL_HPP_
#define ILI_RETRIEVAL_HPP_

#include <cstddef>
#include <vector>

#include "ili/matrix.hpp"

namespace ili {

// Zero-norm operands rank with similarity 0 instead of NaN.
double cosine_similarity(const double* a, const double* b, std::size_t n);

// Gallery indices by descending similarity to the query; exact ties keep
// ascending index order.
std::vector<int> rank_gallery(const double* query, const DenseMatrix& gallery);

// Standard average precision over a ranked gallery: mean of precision@k at
// each relevant position, divided by the number of relevant items.
double average_precision(const std::vector<int>& ranking,
                         const std::vector<bool>& relevant);

// Mean AP over queries that have at least one same-label gallery item;
// queries without any are skipped, and all-skipped is an error.
double mean_average_precision(const DenseMatrix& queries,
                              const DenseMatrix& gallery,
                              const std::vector<int>& query_labels,
                              const std::vector<int>& gallery_labels);

// One retrieval direction: the full ranking per query and its AP (NaN for
// queries with no relevant gallery item, which are excluded from the mean).
struct DirectionResult {
  std::vector<std::vector<int>> rankings;
  std::vector<double> ap;
  double map = 0.0;
};

DirectionResult rank_and_score(const DenseMatrix& queries,
                               const DenseMatrix& gallery,
                               const std::vector<int>& query_labels,
                               const std::vector<int>& gallery_labels);

struct RetrievalResult {
  DirectionResult a2v;
  DirectionResult v2a;
  double map_a2v = 0.0;
  double map_v2a = 0.0;
  double map_avg = 0.0;
};

// Full-gallery cross-modal retrieval in both directions.
RetrievalResult evaluate_retrieval(const DenseMatrix& z_audio,
                                   const DenseMatrix& z_visual,
                                   const std::vector<int>& labels);

}  // namespace ili

#endif  // ILI_RETRIEVAL_HPP_
