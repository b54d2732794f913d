#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "microtrain/tensor.hpp"

// Synthetic angiography-like data. Negatives are smooth curvilinear vessel
// strokes (cubic Bezier centerline, Gaussian cross-section) over a
// low-frequency background; positives carry a localized stenosis, rendered
// as a smooth dip in stroke width (shape-defined, not brightness-defined).
// Training labels can be flipped with a given probability; validation and
// test labels are never touched.

namespace microtrain::data {

struct Sample {
  Tensor image;  // [1 x H x W], values in [0,1]
  int label = 0;
  std::string id;
};

enum class Difficulty { Easy, Hard };

struct DatasetSpec {
  int n_train = 512;
  int n_val = 128;
  int n_test = 120;
  double positive_fraction = 0.5;
  double label_noise = 0.0;  // train-only flip probability
  Difficulty difficulty = Difficulty::Easy;
  uint64_t seed = 42;
  int height = 32;
  int width = 32;

  void validate() const;  // throws std::invalid_argument
};

struct Dataset {
  std::vector<Sample> train, val, test;
};

/// Deterministic per spec.seed; each split draws from its own RNG stream.
Dataset generate(const DatasetSpec& spec);

struct PretextSample {
  Tensor image;        // [1 x H x W]
  int orientation = 0;  // k in {0,1,2,3}, image rotated by k*90 degrees
};

/// Class-balanced 4-way rotation pretext set (surrogate pretraining task).
std::vector<PretextSample> generate_pretext(int n, uint64_t seed, int h,
                                            int w);

/// k*90-degree counterclockwise rotation of a square [1 x H x W] image.
Tensor rot90(const Tensor& img, int k);

// 8-bit binary PGM (P5, maxval 255).
void write_pgm(const std::string& path, const Tensor& img);
Tensor read_pgm(const std::string& path);

/// Half-pixel-center bilinear resampling.
Tensor resample_bilinear(const Tensor& img, int out_h, int out_w);

/// Reads samples listed in a manifest CSV (header `id,filename,label`,
/// paths relative to dir). Images are resampled to target geometry when
/// needed. Throws ConfigError naming the offending row.
std::vector<Sample> load_directory(const std::string& dir,
                                   const std::string& manifest_path,
                                   int target_h, int target_w);

/// Writes split images + manifest into dir (used by gen-data).
void write_split(const std::string& dir, const std::string& split_name,
                 const std::vector<Sample>& samples);

}  // namespace microtrain::data
