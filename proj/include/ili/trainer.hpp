#ifndef ILI_TRAINER_HPP_
#define ILI_TRAINER_HPP_

#include <cstdint>
#include <stdexcept>
#include <string>
#include <vector>

#include "ili/dataset.hpp"
#include "ili/ili_graph.hpp"
#include "ili/losses.hpp"
#include "ili/net.hpp"
#include "ili/retrieval.hpp"
#include "ili/rng.hpp"

namespace ili {

struct TrainConfig {
  std::size_t epochs_total = 1000;
  std::size_t transition_epoch = 400;  // last teacher epoch
  std::size_t batch_size = 400;
  std::size_t hidden = 1024;
  double dropout = 0.15;
  double lr = 1e-4;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double adam_eps = 1e-8;
  LossConfig loss;
  std::vector<std::size_t> checkpoint_epochs = {300, 400, 500,
                                                600, 700, 800, 900};
  std::uint64_t seed = 42;
  double lambda_reg = 0.01;
  std::size_t grasp_restarts = 8;
  double epsilon = 1e-6;
  double min_freq = 5.0 / 7.0;
  std::size_t pair_budget = 4;
};

struct LogRow {
  std::uint64_t epoch = 0;
  double loss_total = 0.0;
  double loss_avsal = 0.0;
  double loss_triplet = 0.0;
  double loss_lir = 0.0;
  bool has_map = false;
  double map_a2v = 0.0;
  double map_v2a = 0.0;
};

struct CheckpointGraph {
  std::uint64_t epoch = 0;
  IliGraph graph;
};

// Everything needed to continue a run bit-exactly.
struct TrainerState {
  ModelParams params;
  OptimizerState opt;
  std::uint64_t epoch = 0;  // last completed epoch
  std::uint64_t seed = 0;
  bool has_lir_graph = false;
  IliGraph lir_graph;
  std::vector<CheckpointGraph> checkpoint_graphs;
  std::vector<LogRow> log;
};

struct TrainResult {
  TrainerState state;
  bool has_final_eval = false;
  RetrievalResult final_eval;
};

class TrainingDivergedError : public std::runtime_error {
 public:
  TrainingDivergedError(std::uint64_t at_epoch, const std::string& msg)
      : std::runtime_error(msg), epoch(at_epoch) {}
  std::uint64_t epoch;
};

// For every nonzero graph entry (row-major order), draws up to `budget`
// distinct instance pairs without replacement from the product of batch rows
// whose soft assignment for the endpoint's class/modality clears tau.  When
// the product fits inside the budget all pairs are taken and no randomness is
// consumed; entries with an empty candidate side are skipped likewise.
std::vector<EdgePairs> sample_pairs(const DenseMatrix& soft_audio,
                                    const DenseMatrix& soft_visual,
                                    const IliGraph& graph, double tau,
                                    std::size_t budget, Rng& rng);

// Eval-mode logits over all clips, audio columns first: N x 2C.
DenseMatrix collect_logits(const ModelParams& params,
                           const std::vector<ClipRecord>& clips);

RetrievalResult evaluate_model(const ModelParams& params,
                               const std::vector<ClipRecord>& clips);

// Two-stage loop.  Writes ckpt_epoch_<E>/ directories plus log.csv under
// out_dir when it is nonempty; pass `resume` to continue a loaded state.
TrainResult run_training(const Dataset& ds, const TrainConfig& cfg,
                         const std::string& out_dir,
                         const TrainerState* resume = nullptr);

void save_checkpoint(const TrainerState& state, const std::string& dir);
TrainerState load_checkpoint(const std::string& dir);

void write_train_log_csv(const std::vector<LogRow>& rows,
                         const std::string& path);

struct SweepRow {
  std::string run;
  double map_a2v = 0.0;
  double map_v2a = 0.0;
  double map_mean = 0.0;
};

// One full run per insertion epoch plus a graph-free baseline, all sharing
// the base seed.
std::vector<SweepRow> insertion_sweep(const Dataset& ds,
                                      const TrainConfig& base,
                                      const std::vector<std::size_t>& m_values,
                                      const std::string& out_dir);

void write_sweep_csv(const std::vector<SweepRow>& rows,
                     const std::string& path);

}  // namespace ili

#endif  // ILI_TRAINER_HPP_
