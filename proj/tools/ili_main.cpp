#include <glob.h>

#include <algorithm>
#include <cmath>
#include <cstdlib>
#include <cstring>
#include <fstream>
#include <functional>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "ili/dataset.hpp"
#include "ili/ili_graph.hpp"
#include "ili/matrix.hpp"
#include "ili/retrieval.hpp"
#include "ili/trainer.hpp"

namespace {

using nlohmann::json;

// Bad user input (configs, data files, flag values): exit 2.  Everything
// else that throws during execution: exit 3.
struct InputError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

template <typename F>
auto as_input(F&& f) -> decltype(f()) {
  try {
    return f();
  } catch (const std::exception& e) {
    throw InputError(e.what());
  }
}

std::uint64_t fallback_seed() {
  const char* env = std::getenv("ILI_SEED");
  if (!env) return 42;
  try {
    std::size_t used = 0;
    std::string s(env);
    unsigned long long v = std::stoull(s, &used);
    if (used != s.size()) throw std::invalid_argument(s);
    return static_cast<std::uint64_t>(v);
  } catch (const std::exception&) {
    throw InputError("ILI_SEED must be a nonnegative integer");
  }
}

json load_json(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw InputError("cannot open config file: " + path);
  try {
    return json::parse(in);
  } catch (const std::exception& e) {
    throw InputError(path + ": " + e.what());
  }
}

void reject_unknown_keys(const json& j, const std::vector<std::string>& known,
                         const std::string& where) {
  for (const auto& item : j.items()) {
    bool ok = false;
    for (const std::string& k : known)
      if (item.key() == k) ok = true;
    if (!ok) throw InputError(where + ": unknown config key '" + item.key() + "'");
  }
}

ili::SynthConfig synth_config_from_json(const json& j) {
  reject_unknown_keys(j,
                      {"classes", "clips", "dim_audio", "dim_visual", "q",
                       "rho", "sigma", "train_fraction", "seed"},
                      "gen-data config");
  ili::SynthConfig cfg;
  if (j.contains("classes")) cfg.classes = j["classes"].get<std::size_t>();
  if (j.contains("clips")) cfg.clips = j["clips"].get<std::size_t>();
  if (j.contains("dim_audio")) cfg.dim_audio = j["dim_audio"].get<std::size_t>();
  if (j.contains("dim_visual"))
    cfg.dim_visual = j["dim_visual"].get<std::size_t>();
  if (j.contains("rho")) cfg.rho = j["rho"].get<double>();
  if (j.contains("sigma")) cfg.sigma = j["sigma"].get<double>();
  if (j.contains("train_fraction"))
    cfg.train_fraction = j["train_fraction"].get<double>();
  if (j.contains("seed")) cfg.seed = j["seed"].get<std::uint64_t>();
  if (j.contains("q")) {
    const json& q = j["q"];
    if (!q.is_array() || q.size() != cfg.classes)
      throw InputError("gen-data config: q must be a classes x classes array");
    cfg.q = ili::DenseMatrix(cfg.classes, cfg.classes);
    for (std::size_t i = 0; i < cfg.classes; ++i) {
      if (!q[i].is_array() || q[i].size() != cfg.classes)
        throw InputError("gen-data config: q must be a classes x classes array");
      for (std::size_t k = 0; k < cfg.classes; ++k)
        cfg.q.at(i, k) = q[i][k].get<double>();
    }
  }
  return cfg;
}

ili::TrainConfig train_config_from_json(const json& j) {
  reject_unknown_keys(
      j,
      {"epochs_total", "transition_epoch", "batch_size", "hidden", "dropout",
       "lr", "beta1", "beta2", "adam_eps", "margin", "gamma", "tau",
       "lir_variant", "weights", "checkpoint_epochs", "seed", "lambda_reg",
       "grasp_restarts", "epsilon", "min_freq", "pair_budget"},
      "train config");
  ili::TrainConfig cfg;
  auto get_sz = [&](const char* k, std::size_t& dst) {
    if (j.contains(k)) dst = j[k].get<std::size_t>();
  };
  auto get_f = [&](const char* k, double& dst) {
    if (j.contains(k)) dst = j[k].get<double>();
  };
  get_sz("epochs_total", cfg.epochs_total);
  get_sz("transition_epoch", cfg.transition_epoch);
  get_sz("batch_size", cfg.batch_size);
  get_sz("hidden", cfg.hidden);
  get_f("dropout", cfg.dropout);
  get_f("lr", cfg.lr);
  get_f("beta1", cfg.beta1);
  get_f("beta2", cfg.beta2);
  get_f("adam_eps", cfg.adam_eps);
  get_f("margin", cfg.loss.margin);
  get_f("gamma", cfg.loss.gamma);
  get_f("tau", cfg.loss.tau);
  if (j.contains("lir_variant"))
    cfg.loss.variant =
        ili::metric_variant_from_string(j["lir_variant"].get<std::string>());
  if (j.contains("weights")) {
    const json& w = j["weights"];
    reject_unknown_keys(w, {"aa", "vv", "av", "va"}, "train config weights");
    if (w.contains("aa")) cfg.loss.weights.w[0][0] = w["aa"].get<double>();
    if (w.contains("av")) cfg.loss.weights.w[0][1] = w["av"].get<double>();
    if (w.contains("va")) cfg.loss.weights.w[1][0] = w["va"].get<double>();
    if (w.contains("vv")) cfg.loss.weights.w[1][1] = w["vv"].get<double>();
  }
  if (j.contains("checkpoint_epochs")) {
    cfg.checkpoint_epochs.clear();
    for (const auto& e : j["checkpoint_epochs"])
      cfg.checkpoint_epochs.push_back(e.get<std::size_t>());
  }
  if (j.contains("seed")) cfg.seed = j["seed"].get<std::uint64_t>();
  get_f("lambda_reg", cfg.lambda_reg);
  get_sz("grasp_restarts", cfg.grasp_restarts);
  get_f("epsilon", cfg.epsilon);
  get_f("min_freq", cfg.min_freq);
  get_sz("pair_budget", cfg.pair_budget);
  return cfg;
}

std::vector<std::size_t> parse_size_list(const std::string& s) {
  std::vector<std::size_t> out;
  std::stringstream ss(s);
  std::string field;
  while (std::getline(ss, field, ',')) {
    try {
      std::size_t used = 0;
      out.push_back(std::stoull(field, &used));
      if (used != field.size()) throw std::invalid_argument(field);
    } catch (const std::exception&) {
      throw InputError("bad integer in list: '" + field + "'");
    }
  }
  if (out.empty()) throw InputError("empty integer list");
  return out;
}

struct GenDataArgs {
  std::string config, out;
  std::size_t classes = 0, clips = 0, dim_audio = 0, dim_visual = 0;
  double rho = -1.0, sigma = -1.0, train_fraction = -1.0;
  std::int64_t seed = -1;
  std::vector<std::string> q_entries;
};

int run_gen_data(const GenDataArgs& a, const CLI::App* cmd) {
  ili::SynthConfig cfg;
  bool json_seed = false;
  if (!a.config.empty()) {
    json j = load_json(a.config);
    cfg = as_input([&] { return synth_config_from_json(j); });
    json_seed = j.contains("seed");
  }
  if (cmd->count("--classes")) cfg.classes = a.classes;
  if (cmd->count("--clips")) cfg.clips = a.clips;
  if (cmd->count("--dim-audio")) cfg.dim_audio = a.dim_audio;
  if (cmd->count("--dim-visual")) cfg.dim_visual = a.dim_visual;
  if (cmd->count("--rho")) cfg.rho = a.rho;
  if (cmd->count("--sigma")) cfg.sigma = a.sigma;
  if (cmd->count("--train-fraction")) cfg.train_fraction = a.train_fraction;
  if (cmd->count("--seed"))
    cfg.seed = static_cast<std::uint64_t>(a.seed);
  else if (!json_seed)
    cfg.seed = fallback_seed();
  if (!a.q_entries.empty()) {
    if (cfg.q.data.empty()) cfg.q = ili::DenseMatrix(cfg.classes, cfg.classes);
    for (const std::string& entry : a.q_entries) {
      std::stringstream ss(entry);
      std::string f1, f2, f3;
      if (!std::getline(ss, f1, ',') || !std::getline(ss, f2, ',') ||
          !std::getline(ss, f3, ','))
        throw InputError("--q expects from,to,prob");
      std::size_t from = 0, to = 0;
      double p = 0.0;
      try {
        from = std::stoull(f1);
        to = std::stoull(f2);
        p = std::stod(f3);
      } catch (const std::exception&) {
        throw InputError("--q expects from,to,prob with numeric fields");
      }
      if (from >= cfg.classes || to >= cfg.classes)
        throw InputError("--q class index out of range");
      cfg.q.at(from, to) = p;
    }
  }

  ili::GeneratedData data =
      as_input([&] { return ili::generate(cfg); });
  ili::write_dataset_dir(data, a.out);
  std::cout << "wrote " << a.out << "/train.csv (" << data.train.size()
            << " clips), test.csv (" << data.test.size() << " clips), meta.json\n";
  return 0;
}

struct TrainArgs {
  std::string data, config, out, resume, checkpoints, variant;
  std::size_t epochs = 0, transition = 0, batch = 0, hidden = 0, restarts = 0,
              budget = 0;
  double dropout = -1, lr = -1, gamma = -1, margin = -1, tau = -1,
         lambda_reg = -1, epsilon = -1, min_freq = -1;
  std::int64_t seed = -1;
};

ili::TrainConfig resolve_train_config(const TrainArgs& a, const CLI::App* cmd) {
  ili::TrainConfig cfg;
  bool json_seed = false;
  if (!a.config.empty()) {
    json j = load_json(a.config);
    cfg = as_input([&] { return train_config_from_json(j); });
    json_seed = j.contains("seed");
  }
  if (cmd->count("--epochs")) cfg.epochs_total = a.epochs;
  if (cmd->count("--transition-epoch")) cfg.transition_epoch = a.transition;
  if (cmd->count("--batch-size")) cfg.batch_size = a.batch;
  if (cmd->count("--hidden")) cfg.hidden = a.hidden;
  if (cmd->count("--dropout")) cfg.dropout = a.dropout;
  if (cmd->count("--lr")) cfg.lr = a.lr;
  if (cmd->count("--gamma")) cfg.loss.gamma = a.gamma;
  if (cmd->count("--margin")) cfg.loss.margin = a.margin;
  if (cmd->count("--tau")) cfg.loss.tau = a.tau;
  if (cmd->count("--variant"))
    cfg.loss.variant = as_input([&] {
      return ili::metric_variant_from_string(a.variant);
    });
  if (cmd->count("--lambda-reg")) cfg.lambda_reg = a.lambda_reg;
  if (cmd->count("--restarts")) cfg.grasp_restarts = a.restarts;
  if (cmd->count("--epsilon")) cfg.epsilon = a.epsilon;
  if (cmd->count("--min-freq")) cfg.min_freq = a.min_freq;
  if (cmd->count("--budget")) cfg.pair_budget = a.budget;
  if (cmd->count("--checkpoints"))
    cfg.checkpoint_epochs = parse_size_list(a.checkpoints);
  if (cmd->count("--seed"))
    cfg.seed = static_cast<std::uint64_t>(a.seed);
  else if (!json_seed)
    cfg.seed = fallback_seed();
  return cfg;
}

int run_train(const TrainArgs& a, const CLI::App* cmd) {
  ili::TrainConfig cfg = resolve_train_config(a, cmd);
  ili::Dataset ds = as_input([&] { return ili::load_dataset_dir(a.data); });
  ili::TrainerState resume_state;
  bool resuming = false;
  if (!a.resume.empty()) {
    resume_state = as_input([&] { return ili::load_checkpoint(a.resume); });
    resuming = true;
  }
  ili::TrainResult res =
      ili::run_training(ds, cfg, a.out, resuming ? &resume_state : nullptr);
  std::cout << "trained " << res.state.epoch << " epochs; log at " << a.out
            << "/log.csv\n";
  if (res.has_final_eval)
    std::cout << "final test MAP  A->V " << res.final_eval.map_a2v << "  V->A "
              << res.final_eval.map_v2a << "  Avg "
              << 0.5 * (res.final_eval.map_a2v + res.final_eval.map_v2a)
              << "\n";
  return 0;
}

struct InferArgs {
  std::string logits, ckpt, data, out;
  double lambda_reg = 0.01;
  std::size_t restarts = 8;
  std::int64_t seed = -1;
};

int run_infer_graph(const InferArgs& a, const CLI::App* cmd) {
  std::uint64_t seed = cmd->count("--seed")
                           ? static_cast<std::uint64_t>(a.seed)
                           : fallback_seed();
  if (!a.logits.empty()) {
    std::vector<std::string> header;
    ili::DenseMatrix logits =
        as_input([&] { return ili::read_csv(a.logits, &header); });
    std::vector<std::string> names;
    if (header.size() == logits.cols)
      names = header;
    else if (logits.cols % 2 == 0)
      names = ili::default_class_names(logits.cols / 2);
    else
      for (std::size_t i = 0; i < logits.cols; ++i)
        names.push_back("node_" + std::to_string(i));
    as_input([&] {
      if (logits.rows <= logits.cols + 2)
        throw std::invalid_argument("too few rows for graph inference");
      return 0;
    });
    ili::IliGraph g = ili::infer_ili(logits, names, a.lambda_reg, a.restarts, seed);
    ili::write_adjacency_csv(g.adjacency, g.class_names, a.out);
    std::cout << "wrote " << a.out << (g.zero ? " (zero graph)" : "") << "\n";
    return 0;
  }
  ili::TrainerState st = as_input([&] { return ili::load_checkpoint(a.ckpt); });
  if (!a.data.empty()) {
    ili::Dataset ds = as_input([&] { return ili::load_dataset_dir(a.data); });
    ili::DenseMatrix logits = ili::collect_logits(st.params, ds.train);
    ili::IliGraph g = ili::infer_ili(logits, ili::default_class_names(ds.classes),
                                     a.lambda_reg, a.restarts, seed);
    ili::write_adjacency_csv(g.adjacency, g.class_names, a.out);
    std::cout << "wrote " << a.out << (g.zero ? " (zero graph)" : "") << "\n";
    return 0;
  }
  const ili::IliGraph* g = nullptr;
  for (const ili::CheckpointGraph& cg : st.checkpoint_graphs)
    if (cg.epoch == st.epoch) g = &cg.graph;
  if (!g && st.has_lir_graph) g = &st.lir_graph;
  if (!g) throw InputError("checkpoint stores no graph; pass --data to infer");
  ili::write_adjacency_csv(g->adjacency, g->class_names, a.out);
  std::cout << "wrote " << a.out << " (stored checkpoint graph)\n";
  return 0;
}

struct EvalArgs {
  std::string ckpt, data, out, split = "test";
  std::size_t topk = 0;
};

int run_eval(const EvalArgs& a) {
  ili::TrainerState st = as_input([&] { return ili::load_checkpoint(a.ckpt); });
  ili::Dataset ds = as_input([&] { return ili::load_dataset_dir(a.data); });
  const std::vector<ili::ClipRecord>* clips = nullptr;
  if (a.split == "test")
    clips = &ds.test;
  else if (a.split == "train")
    clips = &ds.train;
  else
    throw InputError("--split must be train or test");
  if (clips->empty()) throw InputError("selected split is empty");

  ili::RetrievalResult r = ili::evaluate_model(st.params, *clips);
  std::cout << "A->V " << r.map_a2v << "  V->A " << r.map_v2a << "  Avg "
            << r.map_avg << "\n";
  std::ofstream out(a.out);
  if (!out) throw std::runtime_error("cannot open " + a.out);
  out << "direction,query_id,ap\n";
  auto dump_dir = [&](const char* name, const ili::DirectionResult& d) {
    for (std::size_t q = 0; q < d.ap.size(); ++q)
      if (std::isfinite(d.ap[q]))
        out << name << "," << (*clips)[q].clip_id << ","
            << ili::format_double(d.ap[q]) << "\n";
    out << name << ",MAP," << ili::format_double(d.map) << "\n";
  };
  dump_dir("a2v", r.a2v);
  dump_dir("v2a", r.v2a);
  out << "avg,MAP," << ili::format_double(r.map_avg) << "\n";

  if (a.topk > 0) {
    std::string topk_path = a.out + ".topk.csv";
    std::ofstream tk(topk_path);
    if (!tk) throw std::runtime_error("cannot open " + topk_path);
    tk << "query_id,rank,gallery_id,label,correct\n";
    for (std::size_t q = 0; q < r.a2v.rankings.size(); ++q) {
      const std::vector<int>& order = r.a2v.rankings[q];
      for (std::size_t k = 0; k < std::min(a.topk, order.size()); ++k) {
        const ili::ClipRecord& g = (*clips)[static_cast<std::size_t>(order[k])];
        tk << (*clips)[q].clip_id << "," << (k + 1) << "," << g.clip_id << ","
           << g.label << "," << (g.label == (*clips)[q].label ? 1 : 0) << "\n";
      }
    }
    std::cout << "wrote " << topk_path << "\n";
  }
  return 0;
}

struct HeatmapArgs {
  std::string graphs, out;
  double epsilon = 1e-6;
};

int run_freq_heatmap(const HeatmapArgs& a) {
  glob_t gl;
  std::memset(&gl, 0, sizeof(gl));
  int rc = glob(a.graphs.c_str(), 0, nullptr, &gl);
  std::vector<std::string> paths;
  if (rc == 0)
    for (std::size_t i = 0; i < gl.gl_pathc; ++i)
      paths.emplace_back(gl.gl_pathv[i]);
  globfree(&gl);
  if (paths.empty())
    throw InputError("no graph files match glob: " + a.graphs);

  std::vector<ili::IliGraph> graphs;
  for (const std::string& p : paths)
    graphs.push_back(as_input([&] { return ili::read_adjacency_csv(p); }));
  ili::FrequencyMatrix f =
      as_input([&] { return ili::edge_frequency(graphs, a.epsilon); });
  ili::write_adjacency_csv(f.freq, f.class_names, a.out + ".csv");
  ili::write_heatmap_svg(f.freq, f.class_names, a.out + ".svg");
  std::cout << "aggregated " << graphs.size() << " graphs -> " << a.out
            << ".csv, " << a.out << ".svg\n";
  return 0;
}

struct SweepArgs {
  TrainArgs train;
  std::string m_list, out, run_dir;
};

int run_sweep(const SweepArgs& a, const CLI::App* cmd) {
  ili::TrainConfig cfg = resolve_train_config(a.train, cmd);
  ili::Dataset ds =
      as_input([&] { return ili::load_dataset_dir(a.train.data); });
  std::vector<std::size_t> ms = as_input([&] { return parse_size_list(a.m_list); });
  std::vector<ili::SweepRow> rows =
      ili::insertion_sweep(ds, cfg, ms, a.run_dir);
  ili::write_sweep_csv(rows, a.out);
  for (const ili::SweepRow& r : rows)
    std::cout << r.run << "  A->V " << r.map_a2v << "  V->A " << r.map_v2a
              << "  Avg " << r.map_mean << "\n";
  std::cout << "wrote " << a.out << "\n";
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{
      "Audio-visual embedding trainer with inferred latent-interaction "
      "graphs"};
  app.require_subcommand(1);
  std::function<int()> action;

  GenDataArgs ga;
  CLI::App* gen = app.add_subcommand("gen-data", "Generate a synthetic dataset");
  gen->add_option("--config", ga.config, "JSON config file");
  gen->add_option("--out", ga.out, "output directory")->required();
  gen->add_option("--classes", ga.classes, "number of classes")
      ->capture_default_str()->default_val(6);
  gen->add_option("--clips", ga.clips, "number of clips")
      ->capture_default_str()->default_val(1200);
  gen->add_option("--dim-audio", ga.dim_audio, "audio feature dim")
      ->capture_default_str()->default_val(16);
  gen->add_option("--dim-visual", ga.dim_visual, "visual feature dim")
      ->capture_default_str()->default_val(32);
  gen->add_option("--rho", ga.rho, "hidden-event feature strength")
      ->capture_default_str()->default_val(0.8);
  gen->add_option("--sigma", ga.sigma, "noise scale")
      ->capture_default_str()->default_val(0.3);
  gen->add_option("--train-fraction", ga.train_fraction, "train split fraction")
      ->capture_default_str()->default_val(0.8);
  gen->add_option("--seed", ga.seed, "seed (default: ILI_SEED env or 42)");
  gen->add_option("--q", ga.q_entries,
                  "hidden-event probability entry from,to,prob (repeatable)");
  gen->callback([&, gen] { action = [&, gen] { return run_gen_data(ga, gen); }; });

  TrainArgs ta;
  CLI::App* train = app.add_subcommand("train", "Run the two-stage training loop");
  auto add_train_options = [](CLI::App* c, TrainArgs& t) {
    c->add_option("--data", t.data, "dataset directory")->required();
    c->add_option("--config", t.config, "JSON training config");
    c->add_option("--epochs", t.epochs, "total epochs")
        ->capture_default_str()->default_val(1000);
    c->add_option("--transition-epoch", t.transition,
                  "last teacher epoch (M)")
        ->capture_default_str()->default_val(400);
    c->add_option("--batch-size", t.batch, "batch size")
        ->capture_default_str()->default_val(400);
    c->add_option("--hidden", t.hidden, "hidden layer width")
        ->capture_default_str()->default_val(1024);
    c->add_option("--dropout", t.dropout, "dropout rate")
        ->capture_default_str()->default_val(0.15);
    c->add_option("--lr", t.lr, "Adam learning rate")
        ->capture_default_str()->default_val(1e-4);
    c->add_option("--gamma", t.gamma, "LIR weight")
        ->capture_default_str()->default_val(0.005);
    c->add_option("--margin", t.margin, "triplet margin")
        ->capture_default_str()->default_val(1.2);
    c->add_option("--tau", t.tau, "pair-sampling soft threshold")
        ->capture_default_str()->default_val(0.5);
    c->add_option("--variant", t.variant,
                  "metric loss: triplet|hard_triplet|contrastive|n_pair")
        ->capture_default_str()->default_val("triplet");
    c->add_option("--lambda-reg", t.lambda_reg, "nodewise lasso weight")
        ->capture_default_str()->default_val(0.01);
    c->add_option("--restarts", t.restarts, "graph search restarts")
        ->capture_default_str()->default_val(8);
    c->add_option("--epsilon", t.epsilon, "edge presence threshold")
        ->capture_default_str()->default_val(1e-6);
    c->add_option("--min-freq", t.min_freq, "stable edge frequency cutoff")
        ->capture_default_str()->default_val(5.0 / 7.0);
    c->add_option("--budget", t.budget, "sampled pairs per graph entry")
        ->capture_default_str()->default_val(4);
    c->add_option("--checkpoints", t.checkpoints,
                  "comma list of checkpoint epochs (default 300..900 by 100)");
    c->add_option("--seed", t.seed, "seed (default: ILI_SEED env or 42)");
  };
  add_train_options(train, ta);
  train->add_option("--out", ta.out, "output directory")->required();
  train->add_option("--resume", ta.resume, "checkpoint directory to resume");
  train->callback([&, train] { action = [&, train] { return run_train(ta, train); }; });

  InferArgs ia;
  CLI::App* infer =
      app.add_subcommand("infer-graph", "Infer the latent-interaction graph");
  auto* opt_logits = infer->add_option("--logits", ia.logits, "logits CSV (N x 2C)");
  auto* opt_ckpt = infer->add_option("--ckpt", ia.ckpt, "checkpoint directory");
  infer->add_option("--data", ia.data,
                    "dataset directory (with --ckpt: recompute from model)");
  infer->add_option("--out", ia.out, "output adjacency CSV")->required();
  infer->add_option("--lambda-reg", ia.lambda_reg, "nodewise lasso weight")
      ->capture_default_str();
  infer->add_option("--restarts", ia.restarts, "graph search restarts")
      ->capture_default_str();
  infer->add_option("--seed", ia.seed, "seed (default: ILI_SEED env or 42)");
  opt_logits->excludes(opt_ckpt);
  infer->callback([&, infer] {
    action = [&, infer] {
      if (ia.logits.empty() && ia.ckpt.empty())
        throw InputError("infer-graph needs --logits or --ckpt");
      return run_infer_graph(ia, infer);
    };
  });

  EvalArgs ea;
  CLI::App* ev = app.add_subcommand("eval", "Cross-modal retrieval evaluation");
  ev->add_option("--ckpt", ea.ckpt, "checkpoint directory")->required();
  ev->add_option("--data", ea.data, "dataset directory")->required();
  ev->add_option("--out", ea.out, "output CSV")->required();
  ev->add_option("--split", ea.split, "train or test")->capture_default_str();
  ev->add_option("--topk", ea.topk,
                 "also dump the top-k retrieved visuals per audio query");
  ev->callback([&] { action = [&] { return run_eval(ea); }; });

  HeatmapArgs ha;
  CLI::App* hm = app.add_subcommand("freq-heatmap",
                                    "Edge frequency matrix across checkpoints");
  hm->add_option("--graphs", ha.graphs, "glob of adjacency CSVs")->required();
  hm->add_option("--epsilon", ha.epsilon, "edge presence threshold")
      ->capture_default_str();
  hm->add_option("--out", ha.out, "output prefix (.csv and .svg)")->required();
  hm->callback([&] { action = [&] { return run_freq_heatmap(ha); }; });

  SweepArgs sa;
  CLI::App* sw = app.add_subcommand(
      "sweep-insertion", "Compare insertion epochs against a graph-free baseline");
  add_train_options(sw, sa.train);
  sw->add_option("--m", sa.m_list, "comma list of insertion epochs")->required();
  sw->add_option("--out", sa.out, "output CSV table")->required();
  sw->add_option("--run-dir", sa.run_dir, "optional directory for per-run logs");
  sw->callback([&, sw] { action = [&, sw] { return run_sweep(sa, sw); }; });

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return 2;
  }

  try {
    return action ? action() : 2;
  } catch (const InputError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  } catch (const std::invalid_argument& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  } catch (const ili::TrainingDivergedError& e) {
    std::cerr << "training diverged: " << e.what() << "\n";
    return 3;
  } catch (const std::exception& e) {
    std::cerr << "failure: " << e.what() << "\n";
    return 3;
  }
}
