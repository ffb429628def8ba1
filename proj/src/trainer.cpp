#include "ili/trainer.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>
#include <unordered_set>

namespace ili {

namespace {

// Independent seed streams per purpose; epoch/batch indices mix in so resumed
// runs regenerate the exact same randomness without replaying history.
constexpr std::uint64_t kStreamInit = 1;
constexpr std::uint64_t kStreamShuffle = 2;
constexpr std::uint64_t kStreamBatch = 3;
constexpr std::uint64_t kStreamGraph = 4;

void validate_train_config(const TrainConfig& cfg) {
  if (cfg.transition_epoch < 1 || cfg.transition_epoch >= cfg.epochs_total)
    throw std::invalid_argument(
        "transition epoch must satisfy 1 <= M < epochs_total");
  if (cfg.batch_size < 2)
    throw std::invalid_argument("batch size must be at least 2");
  if (!(cfg.dropout >= 0.0 && cfg.dropout < 1.0))
    throw std::invalid_argument("dropout must lie in [0,1)");
  if (!(cfg.lr > 0.0)) throw std::invalid_argument("lr must be positive");
  if (cfg.hidden == 0) throw std::invalid_argument("hidden width must be > 0");
  if (!(cfg.loss.gamma >= 0.0))
    throw std::invalid_argument("gamma must be >= 0");
  if (!(cfg.min_freq > 0.0 && cfg.min_freq <= 1.0))
    throw std::invalid_argument("min_freq must lie in (0,1]");
  if (cfg.pair_budget == 0)
    throw std::invalid_argument("pair budget must be >= 1");
  for (std::size_t i = 0; i < cfg.checkpoint_epochs.size(); ++i) {
    std::size_t e = cfg.checkpoint_epochs[i];
    if (e < 1 || e > cfg.epochs_total)
      throw std::invalid_argument("checkpoint epoch out of range");
    if (i > 0 && cfg.checkpoint_epochs[i] <= cfg.checkpoint_epochs[i - 1])
      throw std::invalid_argument("checkpoint epochs must strictly increase");
  }
}

void validate_dataset(const Dataset& ds) {
  if (ds.train.size() < 2)
    throw std::invalid_argument("need at least two training clips");
  if (ds.classes < 2) throw std::invalid_argument("need at least two classes");
  if (ds.dim_audio == 0 || ds.dim_visual == 0)
    throw std::invalid_argument("feature dims must be positive");
  for (const auto* split : {&ds.train, &ds.test})
    for (const ClipRecord& clip : *split) {
      if (clip.audio.size() != ds.dim_audio ||
          clip.visual.size() != ds.dim_visual)
        throw std::invalid_argument("clip feature dims do not match dataset");
      if (clip.label < 0 ||
          static_cast<std::size_t>(clip.label) >= ds.classes)
        throw std::invalid_argument("clip label outside class range");
    }
}

void fill_inputs(const std::vector<ClipRecord>& clips,
                 const std::vector<std::size_t>& rows, DenseMatrix* audio,
                 DenseMatrix* visual) {
  for (std::size_t r = 0; r < rows.size(); ++r) {
    const ClipRecord& clip = clips[rows[r]];
    std::copy(clip.audio.begin(), clip.audio.end(), audio->row_ptr(r));
    std::copy(clip.visual.begin(), clip.visual.end(), visual->row_ptr(r));
  }
}

// Uniform different-label pick per row; -1 when the batch has no candidate.
std::vector<int> draw_negatives(const std::vector<int>& labels,
                                std::size_t classes, Rng& rng) {
  const std::size_t b = labels.size();
  std::vector<std::vector<int>> buckets(classes);
  for (std::size_t i = 0; i < b; ++i)
    buckets[static_cast<std::size_t>(labels[i])].push_back(
        static_cast<int>(i));
  std::vector<int> neg(b, -1);
  for (std::size_t i = 0; i < b; ++i) {
    std::size_t own = buckets[static_cast<std::size_t>(labels[i])].size();
    std::size_t total = b - own;
    if (total == 0) continue;
    std::uint64_t r = rng.uniform_int(total);
    for (std::size_t c = 0; c < classes; ++c) {
      if (c == static_cast<std::size_t>(labels[i])) continue;
      if (r < buckets[c].size()) {
        neg[i] = buckets[c][static_cast<std::size_t>(r)];
        break;
      }
      r -= buckets[c].size();
    }
  }
  return neg;
}

void write_u64(std::ostream& out, std::uint64_t v) {
  out.write(reinterpret_cast<const char*>(&v), sizeof(v));
}

std::uint64_t read_u64(std::istream& in) {
  std::uint64_t v = 0;
  in.read(reinterpret_cast<char*>(&v), sizeof(v));
  if (!in) throw std::runtime_error("checkpoint: truncated integer");
  return v;
}

void write_u8(std::ostream& out, std::uint8_t v) {
  out.write(reinterpret_cast<const char*>(&v), sizeof(v));
}

std::uint8_t read_u8(std::istream& in) {
  std::uint8_t v = 0;
  in.read(reinterpret_cast<char*>(&v), sizeof(v));
  if (!in) throw std::runtime_error("checkpoint: truncated byte");
  return v;
}

void write_f64(std::ostream& out, double v) {
  out.write(reinterpret_cast<const char*>(&v), sizeof(v));
}

double read_f64(std::istream& in) {
  double v = 0;
  in.read(reinterpret_cast<char*>(&v), sizeof(v));
  if (!in) throw std::runtime_error("checkpoint: truncated double");
  return v;
}

void write_string(std::ostream& out, const std::string& s) {
  write_u64(out, s.size());
  out.write(s.data(), static_cast<std::streamsize>(s.size()));
}

std::string read_string(std::istream& in) {
  std::uint64_t n = read_u64(in);
  if (n > (1ULL << 20)) throw std::runtime_error("checkpoint: string too long");
  std::string s(n, '\0');
  in.read(s.data(), static_cast<std::streamsize>(n));
  if (!in) throw std::runtime_error("checkpoint: truncated string");
  return s;
}

void write_graph(std::ostream& out, const IliGraph& g) {
  write_u64(out, g.nodes());
  for (const std::string& n : g.class_names) write_string(out, n);
  write_u8(out, g.zero ? 1 : 0);
  out.write(reinterpret_cast<const char*>(g.adjacency.data.data()),
            static_cast<std::streamsize>(g.adjacency.data.size() *
                                         sizeof(double)));
}

IliGraph read_graph(std::istream& in) {
  IliGraph g;
  std::uint64_t p = read_u64(in);
  if (p > 4096) throw std::runtime_error("checkpoint: graph too large");
  for (std::uint64_t i = 0; i < p; ++i)
    g.class_names.push_back(read_string(in));
  g.zero = read_u8(in) != 0;
  g.adjacency = DenseMatrix(p, p);
  in.read(reinterpret_cast<char*>(g.adjacency.data.data()),
          static_cast<std::streamsize>(p * p * sizeof(double)));
  if (!in) throw std::runtime_error("checkpoint: truncated graph");
  return g;
}

constexpr char kCkptMagic[8] = {'I', 'L', 'I', 'C', 'K', 'P', 'T', '1'};

}  // namespace

std::vector<EdgePairs> sample_pairs(const DenseMatrix& soft_audio,
                                    const DenseMatrix& soft_visual,
                                    const IliGraph& graph, double tau,
                                    std::size_t budget, Rng& rng) {
  if (!soft_audio.same_shape(soft_visual))
    throw std::invalid_argument("sample_pairs: soft matrices differ in shape");
  const std::size_t classes = soft_audio.cols;
  if (graph.nodes() != 2 * classes)
    throw std::invalid_argument("sample_pairs: graph/class size mismatch");
  if (budget == 0) throw std::invalid_argument("sample_pairs: zero budget");

  const std::size_t nodes = graph.nodes();
  std::vector<std::vector<int>> candidates(nodes);
  for (std::size_t node = 0; node < nodes; ++node) {
    const DenseMatrix& soft = node < classes ? soft_audio : soft_visual;
    const std::size_t cls = node < classes ? node : node - classes;
    for (std::size_t r = 0; r < soft.rows; ++r)
      if (soft.at(r, cls) > tau)
        candidates[node].push_back(static_cast<int>(r));
  }

  std::vector<EdgePairs> out;
  for (std::size_t i = 0; i < nodes; ++i)
    for (std::size_t j = 0; j < nodes; ++j) {
      if (graph.adjacency.at(i, j) == 0.0) continue;
      const std::vector<int>& src = candidates[i];
      const std::vector<int>& dst = candidates[j];
      if (src.empty() || dst.empty()) continue;
      EdgePairs e;
      e.from_node = static_cast<int>(i);
      e.to_node = static_cast<int>(j);
      // Uniform without replacement over the src x dst product; the whole
      // product when it fits inside the budget (no randomness consumed).
      const std::size_t product = src.size() * dst.size();
      if (product <= budget) {
        for (int n : src)
          for (int m : dst) e.pairs.emplace_back(n, m);
      } else {
        std::unordered_set<std::size_t> used;
        while (e.pairs.size() < budget) {
          std::size_t flat =
              static_cast<std::size_t>(rng.uniform_int(product));
          if (!used.insert(flat).second) continue;
          e.pairs.emplace_back(src[flat / dst.size()], dst[flat % dst.size()]);
        }
      }
      out.push_back(std::move(e));
    }
  return out;
}

DenseMatrix collect_logits(const ModelParams& params,
                           const std::vector<ClipRecord>& clips) {
  if (clips.empty())
    throw std::invalid_argument("collect_logits: no clips given");
  DenseMatrix audio(clips.size(), params.dims.dim_audio);
  DenseMatrix visual(clips.size(), params.dims.dim_visual);
  std::vector<std::size_t> rows(clips.size());
  for (std::size_t i = 0; i < rows.size(); ++i) rows[i] = i;
  fill_inputs(clips, rows, &audio, &visual);
  ForwardOutput fwd = forward(params, audio, visual, 0.0, 0, false);
  const std::size_t c = params.dims.classes;
  DenseMatrix out(clips.size(), 2 * c);
  for (std::size_t r = 0; r < out.rows; ++r) {
    const double* za = fwd.logits_audio.row_ptr(r);
    const double* zv = fwd.logits_visual.row_ptr(r);
    double* dst = out.row_ptr(r);
    for (std::size_t k = 0; k < c; ++k) dst[k] = za[k];
    for (std::size_t k = 0; k < c; ++k) dst[c + k] = zv[k];
  }
  return out;
}

RetrievalResult evaluate_model(const ModelParams& params,
                               const std::vector<ClipRecord>& clips) {
  if (clips.empty())
    throw std::invalid_argument("evaluate_model: no clips given");
  DenseMatrix audio(clips.size(), params.dims.dim_audio);
  DenseMatrix visual(clips.size(), params.dims.dim_visual);
  std::vector<std::size_t> rows(clips.size());
  for (std::size_t i = 0; i < rows.size(); ++i) rows[i] = i;
  fill_inputs(clips, rows, &audio, &visual);
  ForwardOutput fwd = forward(params, audio, visual, 0.0, 0, false);
  std::vector<int> labels(clips.size());
  for (std::size_t i = 0; i < clips.size(); ++i) labels[i] = clips[i].label;
  return evaluate_retrieval(fwd.logits_audio, fwd.logits_visual, labels);
}

TrainResult run_training(const Dataset& ds, const TrainConfig& cfg,
                         const std::string& out_dir,
                         const TrainerState* resume) {
  validate_train_config(cfg);
  validate_dataset(ds);

  NetDims dims;
  dims.dim_audio = ds.dim_audio;
  dims.dim_visual = ds.dim_visual;
  dims.hidden = cfg.hidden;
  dims.classes = ds.classes;

  TrainerState state;
  if (resume) {
    state = *resume;
    if (state.params.dims.dim_audio != dims.dim_audio ||
        state.params.dims.dim_visual != dims.dim_visual ||
        state.params.dims.classes != dims.classes)
      throw std::invalid_argument("resume state does not match dataset dims");
  } else {
    state.params = init_params(dims, derive_seed(cfg.seed, kStreamInit));
    state.opt = init_optimizer(state.params);
    state.epoch = 0;
    state.seed = cfg.seed;
  }
  const std::uint64_t seed = state.seed;

  if (!out_dir.empty()) std::filesystem::create_directories(out_dir);

  const std::size_t n = ds.train.size();
  const std::size_t classes = ds.classes;
  std::vector<int> train_labels(n);
  for (std::size_t i = 0; i < n; ++i) train_labels[i] = ds.train[i].label;
  const std::size_t batch = std::min(cfg.batch_size, n);

  for (std::uint64_t e = state.epoch + 1; e <= cfg.epochs_total; ++e) {
    std::vector<std::size_t> order(n);
    for (std::size_t i = 0; i < n; ++i) order[i] = i;
    Rng shuffle_rng(derive_seed(derive_seed(seed, kStreamShuffle), e));
    shuffle_rng.shuffle(order);

    double sum_total = 0.0, sum_avsal = 0.0, sum_metric = 0.0, sum_lir = 0.0;
    std::size_t batch_index = 0;
    for (std::size_t off = 0; off < n; off += batch, ++batch_index) {
      const std::size_t rows_n = std::min(batch, n - off);
      std::vector<std::size_t> rows(order.begin() +
                                        static_cast<std::ptrdiff_t>(off),
                                    order.begin() +
                                        static_cast<std::ptrdiff_t>(off + rows_n));
      DenseMatrix audio(rows_n, ds.dim_audio);
      DenseMatrix visual(rows_n, ds.dim_visual);
      fill_inputs(ds.train, rows, &audio, &visual);
      DenseMatrix targets(rows_n, classes);
      std::vector<int> labels(rows_n);
      for (std::size_t r = 0; r < rows_n; ++r) {
        labels[r] = ds.train[rows[r]].label;
        targets.at(r, static_cast<std::size_t>(labels[r])) = 1.0;
      }

      Rng batch_rng(derive_seed(derive_seed(seed, kStreamBatch), e,
                                batch_index));
      const std::uint64_t dropout_seed = batch_rng.next_u64();
      std::vector<int> neg_index = draw_negatives(labels, classes, batch_rng);

      ForwardCache cache;
      ForwardOutput fwd = forward(state.params, audio, visual, cfg.dropout,
                                  dropout_seed, true, &cache);

      const bool lir_active = e > cfg.transition_epoch &&
                              cfg.loss.gamma != 0.0 && state.has_lir_graph &&
                              !state.lir_graph.zero;
      std::vector<EdgePairs> pairs;
      if (lir_active)
        pairs = sample_pairs(fwd.soft_audio, fwd.soft_visual, state.lir_graph,
                             cfg.loss.tau, cfg.pair_budget, batch_rng);

      LossBreakdown breakdown =
          lir_active ? student_loss(fwd, targets, labels, neg_index,
                                    state.lir_graph, pairs, cfg.loss)
                     : teacher_loss(fwd, targets, labels, neg_index, cfg.loss);
      if (!std::isfinite(breakdown.total)) {
        if (!out_dir.empty()) {
          TrainerState dump = state;
          dump.epoch = e;
          save_checkpoint(dump, out_dir + "/diverged_epoch_" +
                                    std::to_string(e));
        }
        throw TrainingDivergedError(
            e, "non-finite loss at epoch " + std::to_string(e));
      }

      DenseMatrix d_logits_audio(rows_n, classes);
      DenseMatrix d_logits_visual(rows_n, classes);
      DenseMatrix d_proxy_audio(rows_n, classes);
      DenseMatrix d_proxy_visual(rows_n, classes);
      av_sal_grad(fwd.soft_audio, fwd.soft_visual, targets, &d_logits_audio,
                  &d_logits_visual);
      metric_loss_grad(cfg.loss.variant, fwd.proxy_audio, fwd.proxy_visual,
                       labels, neg_index, cfg.loss.margin, &d_proxy_audio,
                       &d_proxy_visual);
      if (lir_active)
        lir_grad(fwd.logits_audio, fwd.logits_visual, state.lir_graph, pairs,
                 cfg.loss.weights, cfg.loss.gamma, &d_logits_audio,
                 &d_logits_visual);

      ModelParams grads =
          backprop(state.params, cache, d_logits_audio, d_logits_visual,
                   d_proxy_audio, d_proxy_visual);
      adam_step(&state.params, grads, &state.opt, cfg.lr, cfg.beta1, cfg.beta2,
                cfg.adam_eps);

      const double w = static_cast<double>(rows_n);
      sum_total += breakdown.total * w;
      sum_avsal += breakdown.avsal * w;
      sum_metric += breakdown.metric * w;
      sum_lir += breakdown.lir * w;
    }

    LogRow row;
    row.epoch = e;
    row.loss_total = sum_total / static_cast<double>(n);
    row.loss_avsal = sum_avsal / static_cast<double>(n);
    row.loss_triplet = sum_metric / static_cast<double>(n);
    row.loss_lir = sum_lir / static_cast<double>(n);

    const bool is_ckpt =
        std::find(cfg.checkpoint_epochs.begin(), cfg.checkpoint_epochs.end(),
                  static_cast<std::size_t>(e)) != cfg.checkpoint_epochs.end();
    if (is_ckpt) {
      DenseMatrix logits = collect_logits(state.params, ds.train);
      IliGraph g = infer_ili(logits, default_class_names(classes),
                             cfg.lambda_reg, cfg.grasp_restarts,
                             derive_seed(derive_seed(seed, kStreamGraph), e));
      state.checkpoint_graphs.push_back({e, std::move(g)});
      if (!ds.test.empty()) {
        RetrievalResult r = evaluate_model(state.params, ds.test);
        row.has_map = true;
        row.map_a2v = r.map_a2v;
        row.map_v2a = r.map_v2a;
      }
    }
    state.log.push_back(row);

    if (e == cfg.transition_epoch) {
      std::size_t at_m = state.checkpoint_graphs.size();
      for (std::size_t i = 0; i < state.checkpoint_graphs.size(); ++i)
        if (state.checkpoint_graphs[i].epoch == e) at_m = i;
      if (at_m == state.checkpoint_graphs.size()) {
        DenseMatrix logits = collect_logits(state.params, ds.train);
        IliGraph g = infer_ili(logits, default_class_names(classes),
                               cfg.lambda_reg, cfg.grasp_restarts,
                               derive_seed(derive_seed(seed, kStreamGraph), e));
        state.checkpoint_graphs.push_back({e, std::move(g)});
        at_m = state.checkpoint_graphs.size() - 1;
      }
      std::vector<IliGraph> history;
      for (const CheckpointGraph& cg : state.checkpoint_graphs)
        if (cg.epoch <= e) history.push_back(cg.graph);
      if (history.size() >= 2) {
        FrequencyMatrix freq = edge_frequency(history, cfg.epsilon);
        state.lir_graph = stable_edges(
            freq, state.checkpoint_graphs[at_m].graph, cfg.min_freq);
      } else {
        state.lir_graph = state.checkpoint_graphs[at_m].graph;
      }
      state.has_lir_graph = true;
      if (state.lir_graph.zero)
        std::cerr << "warning: interaction graph at epoch " << e
                  << " is all-zero; continuing with the teacher objective\n";
    }

    state.epoch = e;
    if (is_ckpt && !out_dir.empty())
      save_checkpoint(state,
                      out_dir + "/ckpt_epoch_" + std::to_string(e));
  }

  if (!out_dir.empty()) write_train_log_csv(state.log, out_dir + "/log.csv");

  TrainResult result;
  result.state = std::move(state);
  if (!ds.test.empty()) {
    result.final_eval = evaluate_model(result.state.params, ds.test);
    result.has_final_eval = true;
  }
  return result;
}

void save_checkpoint(const TrainerState& state, const std::string& dir) {
  std::filesystem::create_directories(dir);
  {
    std::ofstream out(dir + "/model", std::ios::binary);
    if (!out) throw std::runtime_error("cannot open " + dir + "/model");
    out.write(kCkptMagic, sizeof(kCkptMagic));
    write_u64(out, state.epoch);
    write_u64(out, state.seed);
    write_params(out, state.params);
    write_params(out, state.opt.m);
    write_params(out, state.opt.v);
    write_u64(out, state.opt.step);
    write_u8(out, state.has_lir_graph ? 1 : 0);
    if (state.has_lir_graph) write_graph(out, state.lir_graph);
    write_u64(out, state.checkpoint_graphs.size());
    for (const CheckpointGraph& cg : state.checkpoint_graphs) {
      write_u64(out, cg.epoch);
      write_graph(out, cg.graph);
    }
    write_u64(out, state.log.size());
    for (const LogRow& r : state.log) {
      write_u64(out, r.epoch);
      write_f64(out, r.loss_total);
      write_f64(out, r.loss_avsal);
      write_f64(out, r.loss_triplet);
      write_f64(out, r.loss_lir);
      write_u8(out, r.has_map ? 1 : 0);
      write_f64(out, r.map_a2v);
      write_f64(out, r.map_v2a);
    }
    if (!out) throw std::runtime_error("write failed: " + dir + "/model");
  }

  const IliGraph* graph_here = nullptr;
  for (const CheckpointGraph& cg : state.checkpoint_graphs)
    if (cg.epoch == state.epoch) graph_here = &cg.graph;
  if (!graph_here && state.has_lir_graph) graph_here = &state.lir_graph;
  if (!graph_here && !state.checkpoint_graphs.empty())
    graph_here = &state.checkpoint_graphs.back().graph;
  if (graph_here)
    write_adjacency_csv(graph_here->adjacency, graph_here->class_names,
                        dir + "/graph.csv");
  write_train_log_csv(state.log, dir + "/log.csv");
}

TrainerState load_checkpoint(const std::string& dir) {
  std::ifstream in(dir + "/model", std::ios::binary);
  if (!in) throw std::runtime_error("cannot open " + dir + "/model");
  char magic[8];
  in.read(magic, sizeof(magic));
  if (!in || std::memcmp(magic, kCkptMagic, sizeof(magic)) != 0)
    throw std::runtime_error(dir + "/model: bad checkpoint magic");
  TrainerState state;
  state.epoch = read_u64(in);
  state.seed = read_u64(in);
  state.params = read_params(in);
  state.opt.m = read_params(in);
  state.opt.v = read_params(in);
  state.opt.step = read_u64(in);
  state.has_lir_graph = read_u8(in) != 0;
  if (state.has_lir_graph) state.lir_graph = read_graph(in);
  std::uint64_t n_graphs = read_u64(in);
  if (n_graphs > 100000)
    throw std::runtime_error(dir + "/model: implausible graph count");
  for (std::uint64_t i = 0; i < n_graphs; ++i) {
    CheckpointGraph cg;
    cg.epoch = read_u64(in);
    cg.graph = read_graph(in);
    state.checkpoint_graphs.push_back(std::move(cg));
  }
  std::uint64_t n_log = read_u64(in);
  if (n_log > 100000000)
    throw std::runtime_error(dir + "/model: implausible log size");
  for (std::uint64_t i = 0; i < n_log; ++i) {
    LogRow r;
    r.epoch = read_u64(in);
    r.loss_total = read_f64(in);
    r.loss_avsal = read_f64(in);
    r.loss_triplet = read_f64(in);
    r.loss_lir = read_f64(in);
    r.has_map = read_u8(in) != 0;
    r.map_a2v = read_f64(in);
    r.map_v2a = read_f64(in);
    state.log.push_back(r);
  }
  return state;
}

void write_train_log_csv(const std::vector<LogRow>& rows,
                         const std::string& path) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot open " + path + " for writing");
  out << "epoch,loss_total,loss_avsal,loss_triplet,loss_lir,map_a2v,map_v2a\n";
  for (const LogRow& r : rows) {
    out << r.epoch << "," << format_double(r.loss_total) << ","
        << format_double(r.loss_avsal) << "," << format_double(r.loss_triplet)
        << "," << format_double(r.loss_lir) << ",";
    if (r.has_map)
      out << format_double(r.map_a2v) << "," << format_double(r.map_v2a);
    else
      out << ",";
    out << "\n";
  }
  if (!out) throw std::runtime_error("write failed: " + path);
}

std::vector<SweepRow> insertion_sweep(const Dataset& ds,
                                      const TrainConfig& base,
                                      const std::vector<std::size_t>& m_values,
                                      const std::string& out_dir) {
  if (ds.test.empty())
    throw std::invalid_argument("insertion_sweep: empty test split");
  std::vector<SweepRow> rows;
  auto run_one = [&](const std::string& label, const TrainConfig& cfg) {
    std::string run_dir =
        out_dir.empty() ? std::string() : out_dir + "/" + label;
    TrainResult r = run_training(ds, cfg, run_dir);
    SweepRow row;
    row.run = label;
    row.map_a2v = r.final_eval.map_a2v;
    row.map_v2a = r.final_eval.map_v2a;
    row.map_mean = 0.5 * (row.map_a2v + row.map_v2a);
    rows.push_back(row);
  };
  TrainConfig baseline = base;
  baseline.loss.gamma = 0.0;
  run_one("baseline", baseline);
  std::vector<std::size_t> ms = m_values;
  std::sort(ms.begin(), ms.end());
  for (std::size_t m : ms) {
    TrainConfig cfg = base;
    cfg.transition_epoch = m;
    run_one("m_" + std::to_string(m), cfg);
  }
  return rows;
}

void write_sweep_csv(const std::vector<SweepRow>& rows,
                     const std::string& path) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot open " + path + " for writing");
  out << "run,map_a2v,map_v2a,map_mean\n";
  for (const SweepRow& r : rows)
    out << r.run << "," << format_double(r.map_a2v) << ","
        << format_double(r.map_v2a) << "," << format_double(r.map_mean)
        << "\n";
  if (!out) throw std::runtime_error("write failed: " + path);
}

}  // namespace ili
