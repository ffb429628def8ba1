#ifndef ILI_DATASET_HPP_
#define ILI_DATASET_HPP_

#include <array>
#include <cstdint>
#include <string>
#include <vector>

#include "ili/matrix.hpp"

namespace ili {

struct ClipRecord {
  std::string clip_id;
  int label = 0;
  std::vector<double> audio;
  std::vector<double> visual;
  std::vector<int> hidden_events;  // co-occurring classes, generation only
};

// Hidden-event co-occurrence generator settings.  q(c, c') is the chance a
// clip of class c also carries an event of class c'; the same drawn set
// perturbs both modalities.
struct SynthConfig {
  std::size_t classes = 6;
  std::size_t clips = 1200;
  std::size_t dim_audio = 16;
  std::size_t dim_visual = 32;
  DenseMatrix q;  // classes x classes, zero diagonal; empty means all-zero
  double rho = 0.8;
  double sigma = 0.3;
  double train_fraction = 0.8;
  std::uint64_t seed = 42;
};

struct GeneratedData {
  SynthConfig config;
  std::vector<ClipRecord> train;
  std::vector<ClipRecord> test;
  // Directed node pairs in 2C graph space implied by q > 0 entries.
  std::vector<std::array<int, 2>> ground_truth_edges;
};

struct Dataset {
  std::vector<ClipRecord> train;
  std::vector<ClipRecord> test;
  std::size_t classes = 0;
  std::size_t dim_audio = 0;
  std::size_t dim_visual = 0;
};

GeneratedData generate(const SynthConfig& config);

void write_features_csv(const std::vector<ClipRecord>& clips,
                        std::size_t dim_audio, std::size_t dim_visual,
                        const std::string& path);

// Parses a features CSV, validating the header, per-line field counts,
// numeric fields, nonnegative integer labels and clip id uniqueness.
std::vector<ClipRecord> load_features_csv(const std::string& path,
                                          std::size_t* dim_audio,
                                          std::size_t* dim_visual);

// Writes train.csv, test.csv and meta.json under dir (created if needed).
void write_dataset_dir(const GeneratedData& data, const std::string& dir);

// Reads the directory back; meta.json supplies the class count when present,
// otherwise it is max label + 1.
Dataset load_dataset_dir(const std::string& dir);

}  // namespace ili

#endif  // ILI_DATASET_HPP_
