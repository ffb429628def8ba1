#ifndef ILI_GRASP_HPP_
#define ILI_GRASP_HPP_

#include <cstdint>
#include <string>
#include <utility>
#include <vector>

#include "ili/matrix.hpp"

namespace ili {

struct Ordering {
  std::vector<int> permutation;  // distinct node indices 0..p-1
};

struct ParentSets {
  std::vector<std::vector<int>> parents;  // per node, sorted ascending
};

struct SearchResult {
  Ordering ordering;
  ParentSets parent_sets;
  double total_score = 0.0;
  std::size_t restarts_used = 0;
};

// Gaussian BIC local score, lower is better:
//   n * ln(RSS/n) + |parents| * ln(n) * penalty_mult
// where RSS comes from the least-squares fit of column `node` on the parent
// columns (empty set -> RSS = squared norm of the column).  RSS is clamped
// at 1e-12 before the logarithm; values that small signal a
// near-deterministic relation.
double bic_node_score(const DenseMatrix& data, int node,
                      const std::vector<int>& parents,
                      double penalty_mult = 1.0);

// Two-phase greedy parent selection restricted to `predecessors`: grow by
// repeatedly adding the candidate with the largest BIC decrease, then shrink
// by repeatedly removing the parent with the largest BIC decrease.
std::vector<int> grow_shrink_parents(const DenseMatrix& data, int node,
                                     const std::vector<int>& predecessors,
                                     double penalty_mult = 1.0);

// Scores one ordering: each node's candidate parents are the nodes placed
// earlier, selected with grow_shrink_parents.  The total is the sum of the
// per-node scores accumulated in value-sorted order, so orderings that induce
// the same parent sets get bitwise-identical totals.
std::pair<double, ParentSets> score_ordering(const DenseMatrix& data,
                                             const Ordering& ordering,
                                             double penalty_mult = 1.0);

// Greedy permutation search.  Each start descends by single-node reinsertion
// moves (remove one node, reinsert it at another position), applying the best
// strictly-improving move until none exists.  Start 0 is the natural column
// order (or `initial` when given); `restarts` additional starts use seeded
// random permutations.  Ties among equally-scored moves prefer fewer total
// parents, then the lowest (source position, target position) pair.
SearchResult grasp_search(const DenseMatrix& data, std::size_t restarts,
                          std::uint64_t seed, double penalty_mult = 1.0,
                          const Ordering* initial = nullptr);

// Edge list CSV (`parent_index,child_index` rows) plus a sidecar text file
// carrying the total score and the permutation.
void write_search_result(const SearchResult& result,
                         const std::string& csv_path,
                         const std::string& sidecar_path);

}  // namespace ili

#endif  // ILI_GRASP_HPP_
