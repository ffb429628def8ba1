#include "ili/dataset.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <set>
#include <sstream>
#include <stdexcept>

#include <json.hpp>

#include "ili/ili_graph.hpp"
#include "ili/rng.hpp"

namespace ili {

namespace {

void validate_config(const SynthConfig& cfg) {
  if (cfg.classes < 2)
    throw std::invalid_argument("generate: need at least 2 classes");
  if (cfg.clips < cfg.classes)
    throw std::invalid_argument("generate: need at least one clip per class");
  if (cfg.dim_audio == 0 || cfg.dim_visual == 0)
    throw std::invalid_argument("generate: feature dims must be positive");
  if (!(cfg.rho >= 0.0) || !std::isfinite(cfg.rho))
    throw std::invalid_argument("generate: rho must be finite and >= 0");
  if (!(cfg.sigma >= 0.0) || !std::isfinite(cfg.sigma))
    throw std::invalid_argument("generate: sigma must be finite and >= 0");
  if (!(cfg.train_fraction > 0.0) || !(cfg.train_fraction < 1.0))
    throw std::invalid_argument("generate: train_fraction must lie in (0,1)");
  if (cfg.q.data.empty()) return;
  if (cfg.q.rows != cfg.classes || cfg.q.cols != cfg.classes)
    throw std::invalid_argument("generate: q must be classes x classes");
  for (std::size_t i = 0; i < cfg.classes; ++i) {
    if (cfg.q.at(i, i) != 0.0)
      throw std::invalid_argument("generate: q diagonal must be zero");
    for (std::size_t j = 0; j < cfg.classes; ++j) {
      double v = cfg.q.at(i, j);
      if (!(v >= 0.0 && v <= 1.0))
        throw std::invalid_argument("generate: q entries must lie in [0,1]");
    }
  }
}

std::vector<double> unit_prototype(Rng& rng, std::size_t dim) {
  std::vector<double> v(dim);
  double norm = 0.0;
  for (double& x : v) {
    x = rng.normal();
    norm += x * x;
  }
  norm = std::sqrt(norm);
  if (norm < 1e-12) {
    std::fill(v.begin(), v.end(), 0.0);
    v[0] = 1.0;
    return v;
  }
  for (double& x : v) x /= norm;
  return v;
}

}  // namespace

GeneratedData generate(const SynthConfig& config) {
  validate_config(config);
  SynthConfig cfg = config;
  if (cfg.q.data.empty()) cfg.q = DenseMatrix(cfg.classes, cfg.classes);

  const std::size_t c_n = cfg.classes;
  Rng proto_rng(derive_seed(cfg.seed, 0));
  std::vector<std::vector<double>> mu_a(c_n), mu_v(c_n);
  for (std::size_t c = 0; c < c_n; ++c) {
    mu_a[c] = unit_prototype(proto_rng, cfg.dim_audio);
    mu_v[c] = unit_prototype(proto_rng, cfg.dim_visual);
  }

  Rng clip_rng(derive_seed(cfg.seed, 1));
  std::vector<ClipRecord> clips(cfg.clips);
  for (std::size_t k = 0; k < cfg.clips; ++k) {
    ClipRecord& clip = clips[k];
    char buf[32];
    std::snprintf(buf, sizeof(buf), "clip_%06zu", k);
    clip.clip_id = buf;
    const std::size_t label = k % c_n;
    clip.label = static_cast<int>(label);
    for (std::size_t other = 0; other < c_n; ++other) {
      if (other == label) continue;
      double p = cfg.q.at(label, other);
      if (p > 0.0 && clip_rng.uniform() < p)
        clip.hidden_events.push_back(static_cast<int>(other));
    }
    clip.audio.resize(cfg.dim_audio);
    for (std::size_t d = 0; d < cfg.dim_audio; ++d) {
      double v = mu_a[label][d];
      for (int h : clip.hidden_events)
        v += cfg.rho * mu_a[static_cast<std::size_t>(h)][d];
      clip.audio[d] = v + cfg.sigma * clip_rng.normal();
    }
    clip.visual.resize(cfg.dim_visual);
    for (std::size_t d = 0; d < cfg.dim_visual; ++d) {
      double v = mu_v[label][d];
      for (int h : clip.hidden_events)
        v += cfg.rho * mu_v[static_cast<std::size_t>(h)][d];
      clip.visual[d] = v + cfg.sigma * clip_rng.normal();
    }
  }

  // Per-class split keeps the held-out fraction balanced to the clip.
  Rng split_rng(derive_seed(cfg.seed, 2));
  std::vector<char> in_train(cfg.clips, 0);
  for (std::size_t c = 0; c < c_n; ++c) {
    std::vector<std::size_t> idx;
    for (std::size_t k = c; k < cfg.clips; k += c_n) idx.push_back(k);
    std::vector<std::size_t> order(idx.size());
    for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
    split_rng.shuffle(order);
    std::size_t n_train = static_cast<std::size_t>(std::llround(
        cfg.train_fraction * static_cast<double>(idx.size())));
    n_train = std::min(n_train, idx.size());
    for (std::size_t i = 0; i < n_train; ++i) in_train[idx[order[i]]] = 1;
  }

  GeneratedData out;
  out.config = cfg;
  for (std::size_t k = 0; k < cfg.clips; ++k) {
    if (in_train[k])
      out.train.push_back(std::move(clips[k]));
    else
      out.test.push_back(std::move(clips[k]));
  }

  const int ci = static_cast<int>(c_n);
  for (int a = 0; a < ci; ++a)
    for (int b = 0; b < ci; ++b) {
      if (a == b) continue;
      if (cfg.q.at(static_cast<std::size_t>(a), static_cast<std::size_t>(b)) <=
          0.0)
        continue;
      out.ground_truth_edges.push_back({a, b});            // audio -> audio
      out.ground_truth_edges.push_back({a, b + ci});       // audio -> visual
      out.ground_truth_edges.push_back({a + ci, b});       // visual -> audio
      out.ground_truth_edges.push_back({a + ci, b + ci});  // visual -> visual
    }
  return out;
}

void write_features_csv(const std::vector<ClipRecord>& clips,
                        std::size_t dim_audio, std::size_t dim_visual,
                        const std::string& path) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot open " + path + " for writing");
  out << "clip_id,label";
  for (std::size_t d = 0; d < dim_audio; ++d) out << ",audio_" << d;
  for (std::size_t d = 0; d < dim_visual; ++d) out << ",visual_" << d;
  out << "\n";
  for (const ClipRecord& clip : clips) {
    if (clip.audio.size() != dim_audio || clip.visual.size() != dim_visual)
      throw std::invalid_argument("clip feature dims do not match header");
    out << clip.clip_id << "," << clip.label;
    for (double v : clip.audio) out << "," << format_double(v);
    for (double v : clip.visual) out << "," << format_double(v);
    out << "\n";
  }
  if (!out) throw std::runtime_error("write failed: " + path);
}

std::vector<ClipRecord> load_features_csv(const std::string& path,
                                          std::size_t* dim_audio,
                                          std::size_t* dim_visual) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open " + path);
  std::string line;
  if (!std::getline(in, line))
    throw std::runtime_error(path + ": empty features file");
  std::vector<std::string> header;
  {
    std::stringstream ss(line);
    std::string field;
    while (std::getline(ss, field, ',')) header.push_back(field);
  }
  if (header.size() < 4 || header[0] != "clip_id" || header[1] != "label")
    throw std::runtime_error(path + ": header must start clip_id,label");
  std::size_t da = 0, dv = 0;
  for (std::size_t i = 2; i < header.size(); ++i) {
    if (header[i] == "audio_" + std::to_string(da) && dv == 0)
      ++da;
    else if (header[i] == "visual_" + std::to_string(dv))
      ++dv;
    else
      throw std::runtime_error(path + ": unexpected header column '" +
                               header[i] + "'");
  }
  if (da == 0 || dv == 0)
    throw std::runtime_error(path + ": need audio_* and visual_* columns");

  std::vector<ClipRecord> clips;
  std::set<std::string> seen;
  const std::size_t expected = 2 + da + dv;
  std::size_t lineno = 1;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty()) continue;
    std::vector<std::string> fields;
    {
      std::stringstream ss(line);
      std::string field;
      while (std::getline(ss, field, ',')) fields.push_back(field);
      if (!line.empty() && line.back() == ',') fields.push_back("");
    }
    if (fields.size() != expected)
      throw std::runtime_error(path + ":" + std::to_string(lineno) +
                               ": expected " + std::to_string(expected) +
                               " fields, got " + std::to_string(fields.size()));
    ClipRecord clip;
    clip.clip_id = fields[0];
    if (clip.clip_id.empty())
      throw std::runtime_error(path + ":" + std::to_string(lineno) +
                               ": empty clip_id");
    if (!seen.insert(clip.clip_id).second)
      throw std::runtime_error(path + ":" + std::to_string(lineno) +
                               ": duplicate clip_id '" + clip.clip_id + "'");
    try {
      std::size_t used = 0;
      long lab = std::stol(fields[1], &used);
      if (used != fields[1].size() || lab < 0)
        throw std::invalid_argument(fields[1]);
      clip.label = static_cast<int>(lab);
    } catch (const std::exception&) {
      throw std::runtime_error(path + ":" + std::to_string(lineno) +
                               ": bad label '" + fields[1] + "'");
    }
    auto parse = [&](const std::string& f) {
      try {
        std::size_t used = 0;
        double v = std::stod(f, &used);
        if (used != f.size()) throw std::invalid_argument(f);
        return v;
      } catch (const std::exception&) {
        throw std::runtime_error(path + ":" + std::to_string(lineno) +
                                 ": bad numeric field '" + f + "'");
      }
    };
    clip.audio.reserve(da);
    for (std::size_t d = 0; d < da; ++d) clip.audio.push_back(parse(fields[2 + d]));
    clip.visual.reserve(dv);
    for (std::size_t d = 0; d < dv; ++d)
      clip.visual.push_back(parse(fields[2 + da + d]));
    clips.push_back(std::move(clip));
  }
  if (dim_audio) *dim_audio = da;
  if (dim_visual) *dim_visual = dv;
  return clips;
}

void write_dataset_dir(const GeneratedData& data, const std::string& dir) {
  std::filesystem::create_directories(dir);
  const SynthConfig& cfg = data.config;
  write_features_csv(data.train, cfg.dim_audio, cfg.dim_visual,
                     dir + "/train.csv");
  write_features_csv(data.test, cfg.dim_audio, cfg.dim_visual,
                     dir + "/test.csv");

  nlohmann::json meta;
  meta["classes"] = cfg.classes;
  meta["clips"] = cfg.clips;
  meta["dim_audio"] = cfg.dim_audio;
  meta["dim_visual"] = cfg.dim_visual;
  meta["rho"] = cfg.rho;
  meta["sigma"] = cfg.sigma;
  meta["train_fraction"] = cfg.train_fraction;
  meta["seed"] = cfg.seed;
  nlohmann::json q = nlohmann::json::array();
  for (std::size_t i = 0; i < cfg.classes; ++i) {
    nlohmann::json row = nlohmann::json::array();
    for (std::size_t j = 0; j < cfg.classes; ++j)
      row.push_back(cfg.q.data.empty() ? 0.0 : cfg.q.at(i, j));
    q.push_back(row);
  }
  meta["q"] = q;
  meta["class_names"] = default_class_names(cfg.classes);
  nlohmann::json edges = nlohmann::json::array();
  for (const auto& e : data.ground_truth_edges)
    edges.push_back({e[0], e[1]});
  meta["ground_truth_edges"] = edges;

  std::ofstream out(dir + "/meta.json");
  if (!out) throw std::runtime_error("cannot open " + dir + "/meta.json");
  out << meta.dump(2) << "\n";
  if (!out) throw std::runtime_error("write failed: " + dir + "/meta.json");
}

Dataset load_dataset_dir(const std::string& dir) {
  Dataset ds;
  std::size_t da_train = 0, dv_train = 0, da_test = 0, dv_test = 0;
  ds.train = load_features_csv(dir + "/train.csv", &da_train, &dv_train);
  ds.test = load_features_csv(dir + "/test.csv", &da_test, &dv_test);
  if (da_train != da_test || dv_train != dv_test)
    throw std::runtime_error(dir + ": train/test feature dims differ");
  ds.dim_audio = da_train;
  ds.dim_visual = dv_train;

  std::ifstream meta_in(dir + "/meta.json");
  if (meta_in) {
    nlohmann::json meta = nlohmann::json::parse(meta_in);
    ds.classes = meta.at("classes").get<std::size_t>();
  } else {
    int max_label = -1;
    for (const auto* split : {&ds.train, &ds.test})
      for (const ClipRecord& clip : *split)
        max_label = std::max(max_label, clip.label);
    ds.classes = static_cast<std::size_t>(max_label + 1);
  }
  for (const auto* split : {&ds.train, &ds.test})
    for (const ClipRecord& clip : *split)
      if (static_cast<std::size_t>(clip.label) >= ds.classes)
        throw std::runtime_error(dir + ": label " +
                                 std::to_string(clip.label) +
                                 " outside declared class count");
  return ds;
}

}  // namespace ili
