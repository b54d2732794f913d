#pragma once

#include <vector>

#include "microtrain/rng.hpp"

// Class-imbalance-aware sampling: every sample in class c gets weight
// N / (2 * N_c), so each class carries exactly half of the total sampling
// mass regardless of its frequency. Epochs are drawn i.i.d. with
// replacement from that distribution.

namespace microtrain::sampler {

/// Per-sample weights N/(2*N_c). Throws std::runtime_error on a single-class
/// label set (callers should fall back to uniform weights).
std::vector<double> build_weights(const std::vector<int>& labels);

class WeightedSampler {
 public:
  /// Weights must all be > 0. The sampler owns its RNG stream.
  WeightedSampler(std::vector<double> weights, Rng rng);

  /// epoch_len indices drawn with replacement, proportional to weights.
  /// Deterministic given the RNG state; advances the RNG.
  std::vector<int> draw_epoch(int epoch_len);

  /// Index selection for a uniform deviate u in [0,1): binary search over
  /// the prefix-sum table. Exposed so tests can replay the same deviates
  /// through a linear-scan oracle.
  int index_for(double u01) const;

  const std::vector<double>& cumulative() const { return cumulative_; }
  double total_weight() const { return cumulative_.back(); }

 private:
  std::vector<double> cumulative_;
  Rng rng_;
};

}  // namespace microtrain::sampler
