#ifndef ILI_LOSSES_HPP_
#define ILI_LOSSES_HPP_

#include <string>
#include <vector>

#include "ili/ili_graph.hpp"
#include "ili/matrix.hpp"
#include "ili/net.hpp"
#include "ili/rng.hpp"

namespace ili {

enum class MetricVariant { kTriplet, kHardTriplet, kContrastive, kNPair };

MetricVariant metric_variant_from_string(const std::string& name);
std::string metric_variant_to_string(MetricVariant v);

// Pairwise weights by (source modality, target modality); first index 0 =
// audio, 1 = visual.
struct ModalityWeights {
  double w[2][2] = {{0.1, 0.4}, {0.4, 0.1}};
  double at(int from_visual, int to_visual) const {
    return w[from_visual][to_visual];
  }
};

struct LossConfig {
  double margin = 1.2;
  double gamma = 0.005;
  double tau = 0.5;
  ModalityWeights weights;
  MetricVariant variant = MetricVariant::kTriplet;
};

// Mean squared gap between soft assignments and one-hot targets, summed over
// both modalities and averaged over the batch.
double av_sal(const DenseMatrix& soft_audio, const DenseMatrix& soft_visual,
              const DenseMatrix& targets);

// Adds d(av_sal)/d(logits) for both branches (chain rule through sigmoid).
void av_sal_grad(const DenseMatrix& soft_audio, const DenseMatrix& soft_visual,
                 const DenseMatrix& targets, DenseMatrix* d_logits_audio,
                 DenseMatrix* d_logits_visual);

// Mean hinge over rows of ||a - p||^2 - ||a - n||^2 + margin.
double proxy_triplet(const DenseMatrix& anchors, const DenseMatrix& positives,
                     const DenseMatrix& negatives, double margin);

// Batch-level metric loss on the cross-attention proxies.  Row i of
// proxy_audio anchors against proxy_visual row i (positive) and, for the
// plain triplet, proxy_visual row neg_index[i] (negative; -1 skips the row).
double metric_loss(MetricVariant variant, const DenseMatrix& proxy_audio,
                   const DenseMatrix& proxy_visual,
                   const std::vector<int>& labels,
                   const std::vector<int>& neg_index, double margin);

void metric_loss_grad(MetricVariant variant, const DenseMatrix& proxy_audio,
                      const DenseMatrix& proxy_visual,
                      const std::vector<int>& labels,
                      const std::vector<int>& neg_index, double margin,
                      DenseMatrix* d_proxy_audio, DenseMatrix* d_proxy_visual);

// One graph entry worth of sampled instance pairs: rows of the batch whose
// soft assignment passes the threshold for the source/target class nodes.
struct EdgePairs {
  int from_node = 0;
  int to_node = 0;
  std::vector<std::pair<int, int>> pairs;
};

// Sum over graph entries of weight * edge strength * mean pair distance.
double lir(const DenseMatrix& z_audio, const DenseMatrix& z_visual,
           const IliGraph& graph, const std::vector<EdgePairs>& pairs,
           const ModalityWeights& weights);

// Adds scale * d(lir)/dz into the embedding gradients.
void lir_grad(const DenseMatrix& z_audio, const DenseMatrix& z_visual,
              const IliGraph& graph, const std::vector<EdgePairs>& pairs,
              const ModalityWeights& weights, double scale,
              DenseMatrix* d_z_audio, DenseMatrix* d_z_visual);

struct LossBreakdown {
  double total = 0.0;
  double avsal = 0.0;
  double metric = 0.0;
  double lir = 0.0;
};

// avsal + metric (first training stage).
LossBreakdown teacher_loss(const ForwardOutput& out, const DenseMatrix& targets,
                           const std::vector<int>& labels,
                           const std::vector<int>& neg_index,
                           const LossConfig& cfg);

// teacher + gamma * lir (second stage).
LossBreakdown student_loss(const ForwardOutput& out, const DenseMatrix& targets,
                           const std::vector<int>& labels,
                           const std::vector<int>& neg_index,
                           const IliGraph& graph,
                           const std::vector<EdgePairs>& pairs,
                           const LossConfig& cfg);

}  // namespace ili

#endif  // ILI_LOSSES_HPP_
