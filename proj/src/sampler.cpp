#include "microtrain/sampler.hpp"

#include <algorithm>
#include <stdexcept>

namespace microtrain::sampler {

std::vector<double> build_weights(const std::vector<int>& labels) {
  long long n_pos = 0, n_neg = 0;
  for (int y : labels) (y == 1 ? n_pos : n_neg) += 1;
  if (n_pos == 0 || n_neg == 0)
    throw std::runtime_error(
        "sampler: single-class label set; class-balanced weights are "
        "undefined, fall back to uniform sampling");
  const double n = static_cast<double>(labels.size());
  const double w_pos = n / (2.0 * static_cast<double>(n_pos));
  const double w_neg = n / (2.0 * static_cast<double>(n_neg));
  std::vector<double> weights(labels.size());
  for (size_t i = 0; i < labels.size(); ++i)
    weights[i] = labels[i] == 1 ? w_pos : w_neg;
  return weights;
}

WeightedSampler::WeightedSampler(std::vector<double> weights, Rng rng)
    : rng_(rng) {
  if (weights.empty())
    throw std::invalid_argument("sampler: empty weight table");
  cumulative_.resize(weights.size());
  double acc = 0.0;
  for (size_t i = 0; i < weights.size(); ++i) {
    if (!(weights[i] > 0.0))
      throw std::invalid_argument("sampler: weights must be positive");
    acc += weights[i];
    cumulative_[i] = acc;
  }
}

int WeightedSampler::index_for(double u01) const {
  const double target = u01 * cumulative_.back();
  auto it = std::upper_bound(cumulative_.begin(), cumulative_.end(), target);
  if (it == cumulative_.end()) --it;
  return static_cast<int>(it - cumulative_.begin());
}

std::vector<int> WeightedSampler::draw_epoch(int epoch_len) {
  if (epoch_len < 1)
    throw std::invalid_argument("sampler: epoch_len must be >= 1");
  std::vector<int> indices(static_cast<size_t>(epoch_len));
  for (int i = 0; i < epoch_len; ++i) indices[static_cast<size_t>(i)] = index_for(rng_.u01());
  return indices;
}

}  // namespace microtrain::sampler
