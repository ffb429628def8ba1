#include <doctest.h>

#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <limits>
#include <set>
#include <sstream>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "ili/trainer.hpp"

using namespace ili;

namespace {

Dataset make_dataset(std::uint64_t seed, std::size_t classes = 2,
                     std::size_t clips = 40) {
  SynthConfig cfg;
  cfg.classes = classes;
  cfg.clips = clips;
  cfg.dim_audio = 4;
  cfg.dim_visual = 5;
  cfg.rho = 0.8;
  cfg.sigma = 0.3;
  cfg.train_fraction = 0.8;
  cfg.seed = seed;
  GeneratedData g = generate(cfg);
  Dataset ds;
  ds.train = std::move(g.train);
  ds.test = std::move(g.test);
  ds.classes = classes;
  ds.dim_audio = cfg.dim_audio;
  ds.dim_visual = cfg.dim_visual;
  return ds;
}

TrainConfig small_train_config() {
  TrainConfig cfg;
  cfg.epochs_total = 6;
  cfg.transition_epoch = 3;
  cfg.batch_size = 16;
  cfg.hidden = 8;
  cfg.dropout = 0.1;
  cfg.checkpoint_epochs = {2, 3};
  cfg.seed = 21;
  cfg.grasp_restarts = 1;
  cfg.loss.gamma = 0.005;
  return cfg;
}

std::string serialize_params(const ModelParams& p) {
  std::ostringstream out;
  write_params(out, p);
  return out.str();
}

bool rows_equal(const LogRow& a, const LogRow& b) {
  return a.epoch == b.epoch && a.loss_total == b.loss_total &&
         a.loss_avsal == b.loss_avsal && a.loss_triplet == b.loss_triplet &&
         a.loss_lir == b.loss_lir && a.has_map == b.has_map &&
         a.map_a2v == b.map_a2v && a.map_v2a == b.map_v2a;
}

// Two audio classes: node 0 has candidate rows {0,1,2}, node 1 none.
// Visual node 3 (class 1) has candidate rows {1,3}, node 2 none.
struct PairFixture {
  DenseMatrix soft_audio{4, 2, 0.1};
  DenseMatrix soft_visual{4, 2, 0.1};
  IliGraph graph;

  PairFixture() {
    soft_audio.at(0, 0) = 0.9;
    soft_audio.at(1, 0) = 0.9;
    soft_audio.at(2, 0) = 0.9;
    soft_visual.at(1, 1) = 0.8;
    soft_visual.at(3, 1) = 0.8;
    graph.adjacency = DenseMatrix(4, 4);
    graph.class_names = default_class_names(2);
  }
};

}  // namespace

TEST_CASE("sample_pairs takes the whole product when it fits the budget") {
  PairFixture fx;
  fx.graph.adjacency.at(0, 3) = 0.5;
  Rng rng(7), untouched(7);
  std::vector<EdgePairs> out =
      sample_pairs(fx.soft_audio, fx.soft_visual, fx.graph, 0.5, 10, rng);
  REQUIRE(out.size() == 1);
  CHECK(out[0].from_node == 0);
  CHECK(out[0].to_node == 3);
  std::set<std::pair<int, int>> got(out[0].pairs.begin(), out[0].pairs.end());
  std::set<std::pair<int, int>> want = {{0, 1}, {0, 3}, {1, 1},
                                        {1, 3}, {2, 1}, {2, 3}};
  CHECK(got == want);
  // The full product consumes no randomness.
  CHECK(rng.next_u64() == untouched.next_u64());
}

TEST_CASE("sample_pairs draws distinct pairs when the budget binds") {
  PairFixture fx;
  fx.graph.adjacency.at(0, 3) = 0.5;
  Rng rng(7);
  std::vector<EdgePairs> out =
      sample_pairs(fx.soft_audio, fx.soft_visual, fx.graph, 0.5, 4, rng);
  REQUIRE(out.size() == 1);
  CHECK(out[0].pairs.size() == 4);
  std::set<std::pair<int, int>> got(out[0].pairs.begin(), out[0].pairs.end());
  CHECK(got.size() == 4);  // all distinct
  for (const auto& pr : got) {
    CHECK((pr.first == 0 || pr.first == 1 || pr.first == 2));
    CHECK((pr.second == 1 || pr.second == 3));
  }
  Rng rng2(7);
  std::vector<EdgePairs> again =
      sample_pairs(fx.soft_audio, fx.soft_visual, fx.graph, 0.5, 4, rng2);
  CHECK(again[0].pairs == out[0].pairs);
}

TEST_CASE("sample_pairs skips edges with an empty candidate side") {
  PairFixture fx;
  fx.graph.adjacency.at(1, 2) = 1.0;  // both endpoints empty
  Rng rng(7), untouched(7);
  std::vector<EdgePairs> out =
      sample_pairs(fx.soft_audio, fx.soft_visual, fx.graph, 0.5, 4, rng);
  CHECK(out.empty());
  CHECK(rng.next_u64() == untouched.next_u64());
}

TEST_CASE("sample_pairs with a high threshold yields nothing") {
  PairFixture fx;
  fx.graph.adjacency.at(0, 3) = 0.5;
  Rng rng(7);
  std::vector<EdgePairs> out =
      sample_pairs(fx.soft_audio, fx.soft_visual, fx.graph, 0.999, 4, rng);
  CHECK(out.empty());
}

TEST_CASE("sample_pairs covers a one-by-one candidate product exactly once") {
  PairFixture fx;
  fx.graph.adjacency.at(3, 3) = 0.0;  // keep others clear
  fx.graph.adjacency.at(3, 0) = 0.2;  // visual node 3 -> audio node 0
  // Shrink node 0's candidates to one row and node 3's to one row.
  fx.soft_audio.at(1, 0) = 0.1;
  fx.soft_audio.at(2, 0) = 0.1;
  fx.soft_visual.at(1, 1) = 0.1;
  Rng rng(7);
  std::vector<EdgePairs> out =
      sample_pairs(fx.soft_audio, fx.soft_visual, fx.graph, 0.5, 100, rng);
  REQUIRE(out.size() == 1);
  REQUIRE(out[0].pairs.size() == 1);
  CHECK(out[0].pairs[0] == std::pair<int, int>(3, 0));
}

TEST_CASE("sample_pairs walks nonzero entries in row-major order") {
  PairFixture fx;
  fx.graph.adjacency.at(0, 3) = 0.5;
  fx.graph.adjacency.at(3, 0) = 0.5;
  Rng rng(7);
  std::vector<EdgePairs> out =
      sample_pairs(fx.soft_audio, fx.soft_visual, fx.graph, 0.5, 10, rng);
  REQUIRE(out.size() == 2);
  CHECK(out[0].from_node == 0);
  CHECK(out[0].to_node == 3);
  CHECK(out[1].from_node == 3);
  CHECK(out[1].to_node == 0);
}

TEST_CASE("sample_pairs validates its arguments") {
  PairFixture fx;
  Rng rng(7);
  DenseMatrix wrong(3, 2, 0.1);
  CHECK_THROWS_AS(sample_pairs(wrong, fx.soft_visual, fx.graph, 0.5, 4, rng),
                  std::invalid_argument);
  IliGraph small;
  small.adjacency = DenseMatrix(2, 2);
  CHECK_THROWS_AS(
      sample_pairs(fx.soft_audio, fx.soft_visual, small, 0.5, 4, rng),
      std::invalid_argument);
  CHECK_THROWS_AS(
      sample_pairs(fx.soft_audio, fx.soft_visual, fx.graph, 0.5, 0, rng),
      std::invalid_argument);
}

TEST_CASE("collect_logits lays eval logits out audio-first") {
  Dataset ds = make_dataset(5);
  NetDims dims;
  dims.dim_audio = ds.dim_audio;
  dims.dim_visual = ds.dim_visual;
  dims.hidden = 8;
  dims.classes = ds.classes;
  ModelParams params = init_params(dims, 77);
  DenseMatrix logits = collect_logits(params, ds.test);
  REQUIRE(logits.rows == ds.test.size());
  REQUIRE(logits.cols == 2 * ds.classes);

  DenseMatrix audio(ds.test.size(), ds.dim_audio);
  DenseMatrix visual(ds.test.size(), ds.dim_visual);
  for (std::size_t r = 0; r < ds.test.size(); ++r) {
    for (std::size_t d = 0; d < ds.dim_audio; ++d)
      audio.at(r, d) = ds.test[r].audio[d];
    for (std::size_t d = 0; d < ds.dim_visual; ++d)
      visual.at(r, d) = ds.test[r].visual[d];
  }
  ForwardOutput fwd = forward(params, audio, visual, 0.0, 0, false);
  for (std::size_t r = 0; r < logits.rows; ++r)
    for (std::size_t c = 0; c < ds.classes; ++c) {
      CHECK(logits.at(r, c) == fwd.logits_audio.at(r, c));
      CHECK(logits.at(r, ds.classes + c) == fwd.logits_visual.at(r, c));
    }
}

TEST_CASE("training is bit-reproducible for a fixed config and seed") {
  Dataset ds = make_dataset(5);
  TrainConfig cfg = small_train_config();
  TrainResult a = run_training(ds, cfg, "");
  TrainResult b = run_training(ds, cfg, "");
  REQUIRE(a.state.log.size() == cfg.epochs_total);
  REQUIRE(b.state.log.size() == cfg.epochs_total);
  for (std::size_t i = 0; i < a.state.log.size(); ++i)
    CHECK(rows_equal(a.state.log[i], b.state.log[i]));
  CHECK(serialize_params(a.state.params) == serialize_params(b.state.params));

  TrainConfig other = cfg;
  other.seed = 22;
  TrainResult c = run_training(ds, other, "");
  CHECK(serialize_params(a.state.params) != serialize_params(c.state.params));
}

TEST_CASE("interaction loss stays zero through the transition epoch") {
  Dataset ds = make_dataset(5);
  TrainConfig cfg = small_train_config();
  TrainResult r = run_training(ds, cfg, "");
  for (const LogRow& row : r.state.log)
    if (row.epoch <= cfg.transition_epoch) CHECK(row.loss_lir == 0.0);
  CHECK(r.state.has_lir_graph);
  CHECK(r.state.lir_graph.nodes() == 2 * ds.classes);
  std::vector<std::uint64_t> ckpt_epochs;
  for (const CheckpointGraph& g : r.state.checkpoint_graphs)
    ckpt_epochs.push_back(g.epoch);
  CHECK(ckpt_epochs == std::vector<std::uint64_t>{2, 3});
}

TEST_CASE("a zero interaction weight matches the teacher phase bit for bit") {
  Dataset ds = make_dataset(5);
  TrainConfig with = small_train_config();
  TrainConfig without = with;
  without.loss.gamma = 0.0;
  TrainResult a = run_training(ds, with, "");
  TrainResult b = run_training(ds, without, "");
  for (std::size_t i = 0; i < with.transition_epoch; ++i)
    CHECK(rows_equal(a.state.log[i], b.state.log[i]));
  for (const LogRow& row : b.state.log) CHECK(row.loss_lir == 0.0);
}

TEST_CASE("logged losses satisfy the objective identity") {
  Dataset ds = make_dataset(5);
  TrainConfig cfg = small_train_config();
  TrainResult r = run_training(ds, cfg, "");
  for (const LogRow& row : r.state.log) {
    double expect =
        row.loss_avsal + row.loss_triplet + cfg.loss.gamma * row.loss_lir;
    CHECK(row.loss_total == doctest::Approx(expect).epsilon(1e-9));
    CHECK(std::isfinite(row.loss_total));
  }
}

TEST_CASE("checkpoint rows carry retrieval scores, others do not") {
  Dataset ds = make_dataset(5);
  TrainConfig cfg = small_train_config();
  TrainResult r = run_training(ds, cfg, "");
  for (const LogRow& row : r.state.log) {
    bool is_ckpt = row.epoch == 2 || row.epoch == 3;
    CHECK(row.has_map == is_ckpt);
    if (row.has_map) {
      CHECK(row.map_a2v >= 0.0);
      CHECK(row.map_a2v <= 1.0);
      CHECK(row.map_v2a >= 0.0);
      CHECK(row.map_v2a <= 1.0);
    }
  }
  CHECK(r.has_final_eval);
  CHECK(r.final_eval.map_avg ==
        doctest::Approx(0.5 * (r.final_eval.map_a2v + r.final_eval.map_v2a)));
}

TEST_CASE("the transition epoch infers a graph even without a checkpoint") {
  Dataset ds = make_dataset(5);
  TrainConfig cfg = small_train_config();
  cfg.checkpoint_epochs = {2};
  TrainResult r = run_training(ds, cfg, "");
  std::vector<std::uint64_t> epochs;
  for (const CheckpointGraph& g : r.state.checkpoint_graphs)
    epochs.push_back(g.epoch);
  CHECK(epochs == std::vector<std::uint64_t>{2, 3});
  CHECK(r.state.has_lir_graph);
}

TEST_CASE("checkpoints round-trip and resume bit-exactly") {
  Dataset ds = make_dataset(5);
  TrainConfig cfg = small_train_config();
  std::string dir = "/tmp/ili_trainer_resume";
  std::filesystem::remove_all(dir);

  TrainResult full = run_training(ds, cfg, "");
  TrainResult first = run_training(ds, cfg, dir);
  CHECK(std::filesystem::exists(dir + "/ckpt_epoch_2/model"));
  CHECK(std::filesystem::exists(dir + "/ckpt_epoch_3/model"));
  CHECK(std::filesystem::exists(dir + "/ckpt_epoch_3/graph.csv"));
  CHECK(std::filesystem::exists(dir + "/ckpt_epoch_3/log.csv"));
  CHECK(std::filesystem::exists(dir + "/log.csv"));
  CHECK(serialize_params(full.state.params) ==
        serialize_params(first.state.params));

  TrainerState loaded = load_checkpoint(dir + "/ckpt_epoch_3");
  CHECK(loaded.epoch == 3);
  CHECK(loaded.seed == cfg.seed);
  CHECK(loaded.has_lir_graph);
  CHECK(loaded.log.size() == 3);
  REQUIRE(loaded.checkpoint_graphs.size() == 2);
  CHECK(loaded.checkpoint_graphs[1].graph.adjacency.data ==
        full.state.checkpoint_graphs[1].graph.adjacency.data);

  TrainResult resumed = run_training(ds, cfg, "", &loaded);
  CHECK(serialize_params(resumed.state.params) ==
        serialize_params(full.state.params));
  REQUIRE(resumed.state.log.size() == full.state.log.size());
  for (std::size_t i = 0; i < full.state.log.size(); ++i)
    CHECK(rows_equal(resumed.state.log[i], full.state.log[i]));
  std::filesystem::remove_all(dir);
}

TEST_CASE("checkpoint state save/load is lossless") {
  Dataset ds = make_dataset(5);
  TrainConfig cfg = small_train_config();
  std::string dir = "/tmp/ili_trainer_saveload";
  std::filesystem::remove_all(dir);
  TrainResult r = run_training(ds, cfg, "");
  save_checkpoint(r.state, dir);
  TrainerState back = load_checkpoint(dir);
  CHECK(back.epoch == r.state.epoch);
  CHECK(back.seed == r.state.seed);
  CHECK(serialize_params(back.params) == serialize_params(r.state.params));
  CHECK(serialize_params(back.opt.m) == serialize_params(r.state.opt.m));
  CHECK(serialize_params(back.opt.v) == serialize_params(r.state.opt.v));
  CHECK(back.opt.step == r.state.opt.step);
  CHECK(back.has_lir_graph == r.state.has_lir_graph);
  CHECK(back.lir_graph.adjacency.data == r.state.lir_graph.adjacency.data);
  CHECK(back.lir_graph.zero == r.state.lir_graph.zero);
  REQUIRE(back.log.size() == r.state.log.size());
  for (std::size_t i = 0; i < back.log.size(); ++i)
    CHECK(rows_equal(back.log[i], r.state.log[i]));
  std::filesystem::remove_all(dir);
  CHECK_THROWS_AS(load_checkpoint(dir), std::runtime_error);
}

TEST_CASE("a non-finite batch fails fast with a diverged dump") {
  Dataset ds = make_dataset(5);
  ds.train[0].audio[0] = std::numeric_limits<double>::quiet_NaN();
  TrainConfig cfg = small_train_config();
  std::string dir = "/tmp/ili_trainer_diverged";
  std::filesystem::remove_all(dir);
  bool threw = false;
  try {
    run_training(ds, cfg, dir);
  } catch (const TrainingDivergedError& e) {
    threw = true;
    CHECK(e.epoch == 1);
  }
  CHECK(threw);
  CHECK(std::filesystem::exists(dir + "/diverged_epoch_1/model"));
  std::filesystem::remove_all(dir);
}

TEST_CASE("config validation rejects inconsistent settings") {
  Dataset ds = make_dataset(5);
  TrainConfig cfg = small_train_config();
  cfg.transition_epoch = cfg.epochs_total;
  CHECK_THROWS_AS(run_training(ds, cfg, ""), std::invalid_argument);
  cfg = small_train_config();
  cfg.batch_size = 1;
  CHECK_THROWS_AS(run_training(ds, cfg, ""), std::invalid_argument);
  cfg = small_train_config();
  cfg.checkpoint_epochs = {3, 2};
  CHECK_THROWS_AS(run_training(ds, cfg, ""), std::invalid_argument);
  cfg = small_train_config();
  cfg.checkpoint_epochs = {7};
  CHECK_THROWS_AS(run_training(ds, cfg, ""), std::invalid_argument);
  cfg = small_train_config();
  cfg.dropout = 1.0;
  CHECK_THROWS_AS(run_training(ds, cfg, ""), std::invalid_argument);
  cfg = small_train_config();
  cfg.loss.gamma = -0.1;
  CHECK_THROWS_AS(run_training(ds, cfg, ""), std::invalid_argument);
}

TEST_CASE("the insertion sweep runs a baseline plus sorted variants") {
  Dataset ds = make_dataset(5);
  TrainConfig cfg = small_train_config();
  std::vector<SweepRow> rows = insertion_sweep(ds, cfg, {3, 2}, "");
  REQUIRE(rows.size() == 3);
  CHECK(rows[0].run == "baseline");
  CHECK(rows[1].run == "m_2");
  CHECK(rows[2].run == "m_3");
  for (const SweepRow& r : rows) {
    CHECK(r.map_mean == doctest::Approx(0.5 * (r.map_a2v + r.map_v2a)));
    CHECK(r.map_mean >= 0.0);
    CHECK(r.map_mean <= 1.0);
  }
  std::string path = "/tmp/ili_sweep_rows.csv";
  write_sweep_csv(rows, path);
  std::ifstream in(path);
  std::string header;
  std::getline(in, header);
  CHECK(header == "run,map_a2v,map_v2a,map_mean");
  std::remove(path.c_str());

  Dataset no_test = ds;
  no_test.test.clear();
  CHECK_THROWS_AS(insertion_sweep(no_test, cfg, {2}, ""),
                  std::invalid_argument);
}
