#ifndef ILI_ILI_GRAPH_HPP_
#define ILI_ILI_GRAPH_HPP_

#include <cstdint>
#include <string>
#include <vector>

#include "ili/grasp.hpp"
#include "ili/matrix.hpp"

namespace ili {

// Directed latent-interaction adjacency over 2C class nodes (audio classes
// first, then visual classes).  Entries are nonnegative, the diagonal is
// zero and the total L1 mass is 1 unless the graph is empty, in which case
// `zero` is set.
struct IliGraph {
  DenseMatrix adjacency;
  std::vector<std::string> class_names;
  bool zero = false;

  std::size_t nodes() const { return adjacency.rows; }
};

// Fraction of checkpoints at which each directed edge exceeds epsilon.
struct FrequencyMatrix {
  DenseMatrix freq;
  std::vector<std::string> class_names;
  std::size_t checkpoints = 0;
  double epsilon = 0.0;
};

// Default node labels: class_<i>_audio for the first half, class_<i>_visual
// for the second.
std::vector<std::string> default_class_names(std::size_t num_classes);

// Full inference pipeline on an N x 2C logits matrix: column-wise
// standardization, greedy permutation search for parent sets, a nodewise
// lasso on each node's parents to weight its incoming edges, diagonal
// zeroing and L1 normalization.  All-zero results come back flagged.
// `initial` overrides the search's first start (used to check permutation
// equivariance at restarts = 0).
IliGraph infer_ili(const DenseMatrix& logits,
                   const std::vector<std::string>& class_names,
                   double lambda_reg, std::size_t restarts, std::uint64_t seed,
                   const Ordering* initial = nullptr);

FrequencyMatrix edge_frequency(const std::vector<IliGraph>& graphs,
                               double epsilon);

// Drops entries of `base` whose cross-checkpoint frequency is below
// min_freq, renormalizing the survivors to unit L1 mass.
IliGraph stable_edges(const FrequencyMatrix& freq, const IliGraph& base,
                      double min_freq);

void write_adjacency_csv(const DenseMatrix& m,
                         const std::vector<std::string>& class_names,
                         const std::string& path);
IliGraph read_adjacency_csv(const std::string& path);

// Simple SVG grid, one rect per matrix cell, intensity scaled to the
// largest entry.
void write_heatmap_svg(const DenseMatrix& m,
                       const std::vector<std::string>& class_names,
                       const std::string& path);

}  // namespace ili

#endif  // ILI_ILI_GRAPH_HPP_
