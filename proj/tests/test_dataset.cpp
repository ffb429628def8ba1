#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <map>
#include <set>
#include <stdexcept>
#include <string>
#include <vector>

#include "ili/dataset.hpp"

using namespace ili;

namespace {

SynthConfig small_config() {
  SynthConfig cfg;
  cfg.classes = 4;
  cfg.clips = 120;
  cfg.dim_audio = 5;
  cfg.dim_visual = 7;
  cfg.rho = 0.8;
  cfg.sigma = 0.3;
  cfg.train_fraction = 0.75;
  cfg.seed = 99;
  return cfg;
}

std::map<int, std::size_t> label_counts(const std::vector<ClipRecord>& clips) {
  std::map<int, std::size_t> counts;
  for (const ClipRecord& c : clips) ++counts[c.label];
  return counts;
}

}  // namespace

TEST_CASE("generation is deterministic per seed") {
  SynthConfig cfg = small_config();
  GeneratedData a = generate(cfg);
  GeneratedData b = generate(cfg);
  REQUIRE(a.train.size() == b.train.size());
  REQUIRE(a.test.size() == b.test.size());
  for (std::size_t i = 0; i < a.train.size(); ++i) {
    CHECK(a.train[i].clip_id == b.train[i].clip_id);
    CHECK(a.train[i].label == b.train[i].label);
    CHECK(a.train[i].audio == b.train[i].audio);
    CHECK(a.train[i].visual == b.train[i].visual);
    CHECK(a.train[i].hidden_events == b.train[i].hidden_events);
  }
  cfg.seed = 100;
  GeneratedData c = generate(cfg);
  CHECK(a.train[0].audio != c.train[0].audio);
}

TEST_CASE("train and test partition the clip set") {
  GeneratedData d = generate(small_config());
  CHECK(d.train.size() + d.test.size() == 120);
  std::set<std::string> ids;
  for (const ClipRecord& c : d.train) ids.insert(c.clip_id);
  for (const ClipRecord& c : d.test) ids.insert(c.clip_id);
  CHECK(ids.size() == 120);
}

TEST_CASE("labels are balanced and the split is stratified") {
  SynthConfig cfg = small_config();
  GeneratedData d = generate(cfg);
  std::map<int, std::size_t> train_counts = label_counts(d.train);
  std::map<int, std::size_t> test_counts = label_counts(d.test);
  for (int cls = 0; cls < 4; ++cls) {
    std::size_t total = train_counts[cls] + test_counts[cls];
    CHECK(total == 30);  // 120 clips over 4 classes, label = index mod C
    double expected_test = (1.0 - cfg.train_fraction) * (double)total;
    CHECK(std::abs((double)test_counts[cls] - expected_test) <= 1.0);
  }
}

TEST_CASE("zero co-occurrence keeps hidden events and edges empty") {
  SynthConfig cfg = small_config();
  GeneratedData d = generate(cfg);
  CHECK(d.ground_truth_edges.empty());
  for (const ClipRecord& c : d.train) CHECK(c.hidden_events.empty());
  for (const ClipRecord& c : d.test) CHECK(c.hidden_events.empty());
}

TEST_CASE("a planted co-occurrence entry yields events and 4 directed edges") {
  SynthConfig cfg = small_config();
  cfg.q = DenseMatrix(4, 4);
  cfg.q.fill(0.0);
  cfg.q.at(0, 1) = 1.0;  // class 0 clips always carry a class-1 event
  GeneratedData d = generate(cfg);
  CHECK(d.ground_truth_edges.size() == 4);
  std::size_t class0 = 0;
  for (const ClipRecord& c : d.train)
    if (c.label == 0) {
      ++class0;
      CHECK(c.hidden_events == std::vector<int>{1});
    } else {
      CHECK(std::find(c.hidden_events.begin(), c.hidden_events.end(),
                      c.label) == c.hidden_events.end());
    }
  CHECK(class0 > 0);
  // The label never appears among its own hidden events.
  for (const ClipRecord& c : d.train)
    CHECK(std::find(c.hidden_events.begin(), c.hidden_events.end(), c.label) ==
          c.hidden_events.end());
}

TEST_CASE("hidden events shift the feature means by rho") {
  SynthConfig cfg = small_config();
  cfg.q = DenseMatrix(4, 4);
  cfg.q.fill(0.0);
  cfg.q.at(0, 1) = 1.0;
  cfg.sigma = 0.0;  // isolate the prototype mixing
  GeneratedData with = generate(cfg);
  cfg.q.at(0, 1) = 0.0;
  GeneratedData without = generate(cfg);
  // Same seed, same prototypes: class-0 clips differ by exactly rho * proto_1.
  const ClipRecord* w = nullptr;
  const ClipRecord* o = nullptr;
  for (const ClipRecord& c : with.train)
    if (c.label == 0) {
      w = &c;
      break;
    }
  REQUIRE(w != nullptr);
  for (const ClipRecord& c : without.train)
    if (c.clip_id == w->clip_id) o = &c;
  if (!o)
    for (const ClipRecord& c : without.test)
      if (c.clip_id == w->clip_id) o = &c;
  REQUIRE(o != nullptr);
  double shift = 0.0;
  for (std::size_t k = 0; k < w->audio.size(); ++k)
    shift += (w->audio[k] - o->audio[k]) * (w->audio[k] - o->audio[k]);
  // rho * unit prototype has squared norm rho^2.
  CHECK(std::sqrt(shift) == doctest::Approx(cfg.rho).epsilon(1e-9));
}

TEST_CASE("config validation rejects degenerate settings") {
  SynthConfig cfg = small_config();
  cfg.classes = 1;
  CHECK_THROWS_AS(generate(cfg), std::invalid_argument);
  cfg = small_config();
  cfg.clips = 3;
  CHECK_THROWS_AS(generate(cfg), std::invalid_argument);
  cfg = small_config();
  cfg.train_fraction = 1.0;
  CHECK_THROWS_AS(generate(cfg), std::invalid_argument);
  cfg = small_config();
  cfg.q = DenseMatrix(2, 2);  // wrong shape
  cfg.q.fill(0.0);
  CHECK_THROWS_AS(generate(cfg), std::invalid_argument);
  cfg = small_config();
  cfg.q = DenseMatrix(4, 4);
  cfg.q.fill(0.0);
  cfg.q.at(1, 1) = 0.5;  // nonzero diagonal
  CHECK_THROWS_AS(generate(cfg), std::invalid_argument);
}

TEST_CASE("dataset directory round-trips through csv exactly") {
  SynthConfig cfg = small_config();
  cfg.q = DenseMatrix(4, 4);
  cfg.q.fill(0.0);
  cfg.q.at(0, 1) = 0.6;
  GeneratedData d = generate(cfg);
  std::string dir = "/tmp/ili_dataset_roundtrip";
  std::filesystem::remove_all(dir);
  write_dataset_dir(d, dir);
  Dataset back = load_dataset_dir(dir);
  CHECK(back.classes == 4);
  CHECK(back.dim_audio == 5);
  CHECK(back.dim_visual == 7);
  REQUIRE(back.train.size() == d.train.size());
  REQUIRE(back.test.size() == d.test.size());
  for (std::size_t i = 0; i < d.train.size(); ++i) {
    CHECK(back.train[i].clip_id == d.train[i].clip_id);
    CHECK(back.train[i].label == d.train[i].label);
    CHECK(back.train[i].audio == d.train[i].audio);
    CHECK(back.train[i].visual == d.train[i].visual);
  }
  std::filesystem::remove_all(dir);
}

TEST_CASE("features csv loader accepts wide real-feature headers") {
  std::string path = "/tmp/ili_dataset_wide.csv";
  {
    std::ofstream out(path);
    out << "clip_id,label";
    for (int i = 0; i < 128; ++i) out << ",audio_" << i;
    for (int i = 0; i < 1024; ++i) out << ",visual_" << i;
    out << "\n";
    for (int row = 0; row < 2; ++row) {
      out << "clip_" << row << "," << row;
      for (int i = 0; i < 1152; ++i) out << "," << (0.25 * (row + 1));
      out << "\n";
    }
  }
  std::size_t da = 0, dv = 0;
  std::vector<ClipRecord> clips = load_features_csv(path, &da, &dv);
  CHECK(da == 128);
  CHECK(dv == 1024);
  CHECK(clips.size() == 2);
  CHECK(clips[1].label == 1);
  std::remove(path.c_str());
}

TEST_CASE("features csv loader errors carry the line number") {
  std::string path = "/tmp/ili_dataset_bad.csv";
  std::size_t da = 0, dv = 0;
  {
    std::ofstream out(path);
    out << "clip_id,label,audio_0,visual_0\n";
    out << "clip_0,0,0.5,0.5\n";
    out << "clip_1,1,0.5\n";  // missing cell
  }
  CHECK_THROWS_WITH_AS(load_features_csv(path, &da, &dv),
                       doctest::Contains(":3:"), std::runtime_error);
  {
    std::ofstream out(path);
    out << "clip_id,label,audio_0,visual_0\n";
    out << "clip_0,0,0.5,0.5\n";
    out << "clip_0,1,0.5,0.5\n";  // duplicate id
  }
  CHECK_THROWS_WITH_AS(load_features_csv(path, &da, &dv),
                       doctest::Contains("clip_0"), std::runtime_error);
  {
    std::ofstream out(path);
    out << "clip_id,label,audio_0,visual_0\n";
    out << "clip_0,zero,0.5,0.5\n";  // non-numeric label
  }
  CHECK_THROWS_AS(load_features_csv(path, &da, &dv), std::runtime_error);
  std::remove(path.c_str());
}

TEST_CASE("prototypes are unit norm") {
  // sigma = 0 and q = 0 make every clip exactly its class prototype.
  SynthConfig cfg = small_config();
  cfg.sigma = 0.0;
  GeneratedData d = generate(cfg);
  for (const ClipRecord& c : d.train) {
    double na = 0.0, nv = 0.0;
    for (double v : c.audio) na += v * v;
    for (double v : c.visual) nv += v * v;
    CHECK(std::sqrt(na) == doctest::Approx(1.0).epsilon(1e-9));
    CHECK(std::sqrt(nv) == doctest::Approx(1.0).epsilon(1e-9));
  }
}
