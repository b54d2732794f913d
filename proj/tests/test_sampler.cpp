#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <vector>

#include "microtrain/rng.hpp"
#include "microtrain/sampler.hpp"

namespace sampler = microtrain::sampler;
using microtrain::Rng;

namespace {

std::vector<int> imbalanced_labels(int n_neg, int n_pos) {
  std::vector<int> labels;
  for (int i = 0; i < n_neg; ++i) labels.push_back(0);
  for (int i = 0; i < n_pos; ++i) labels.push_back(1);
  return labels;
}

}  // namespace

TEST_CASE("inverse-frequency weights, 90/10") {
  const auto labels = imbalanced_labels(90, 10);
  const auto w = sampler::build_weights(labels);
  CHECK(w[0] == doctest::Approx(100.0 / 180.0).epsilon(1e-15));  // 0.5556
  CHECK(w[95] == doctest::Approx(5.0).epsilon(1e-15));
  // class-level probability mass is exactly half per class
  const double neg_mass = w[0] * 90.0;
  const double pos_mass = w[95] * 10.0;
  CHECK(neg_mass / (neg_mass + pos_mass) == doctest::Approx(0.5).epsilon(1e-12));
}

TEST_CASE("balanced labels give unit weights") {
  const auto w = sampler::build_weights(imbalanced_labels(50, 50));
  for (double x : w) CHECK(x == 1.0);
  const auto w2 = sampler::build_weights(imbalanced_labels(1, 1));
  CHECK(w2[0] == 1.0);
  CHECK(w2[1] == 1.0);
}

TEST_CASE("single-class labels are a sampler error suggesting uniform") {
  try {
    sampler::build_weights(imbalanced_labels(10, 0));
    FAIL("expected throw");
  } catch (const std::runtime_error& e) {
    CHECK(std::string(e.what()).find("uniform") != std::string::npos);
  }
}

TEST_CASE("same seed gives identical draws") {
  const auto w = sampler::build_weights(imbalanced_labels(90, 10));
  sampler::WeightedSampler a(w, Rng(7, "sampler"));
  sampler::WeightedSampler b(w, Rng(7, "sampler"));
  CHECK(a.draw_epoch(1000) == b.draw_epoch(1000));
}

TEST_CASE("uniform weights: index frequencies within 4 sigma") {
  const int n = 50;
  const int draws = 100000;
  sampler::WeightedSampler s(std::vector<double>(n, 1.0), Rng(11, "sampler"));
  std::vector<int> counts(n, 0);
  for (int idx : s.draw_epoch(draws)) counts[static_cast<size_t>(idx)]++;
  const double p = 1.0 / n;
  const double sigma = std::sqrt(draws * p * (1 - p));
  for (int c : counts) CHECK(std::abs(c - draws * p) < 4.0 * sigma + 1.0);
}

TEST_CASE("90/10 imbalance with built weights: minority draw fraction ~ 0.5") {
  const auto labels = imbalanced_labels(900, 100);
  sampler::WeightedSampler s(sampler::build_weights(labels),
                             Rng(13, "sampler"));
  const int draws = 100000;
  long long minority = 0;
  for (int idx : s.draw_epoch(draws)) minority += labels[static_cast<size_t>(idx)] == 1;
  const double frac = static_cast<double>(minority) / draws;
  CHECK(frac > 0.49);
  CHECK(frac < 0.51);
}

TEST_CASE("prefix-sum selection matches a linear-scan oracle") {
  Rng wrng(17);
  std::vector<double> weights(64);
  for (double& w : weights) w = 0.05 + wrng.u01();
  sampler::WeightedSampler s(weights, Rng(17, "sampler"));

  // replay identical deviates through an independent linear scan
  Rng replay(19);
  for (int i = 0; i < 1000; ++i) {
    const double u = replay.u01();
    const int got = s.index_for(u);
    const double target = u * s.total_weight();
    double acc = 0.0;
    int want = static_cast<int>(weights.size()) - 1;
    for (size_t j = 0; j < weights.size(); ++j) {
      acc += weights[j];
      if (target < acc) {
        want = static_cast<int>(j);
        break;
      }
    }
    CHECK(got == want);
  }
}

TEST_CASE("weight table validation") {
  CHECK_THROWS_AS(sampler::WeightedSampler({}, Rng(1, "sampler")),
                  std::invalid_argument);
  CHECK_THROWS_AS(sampler::WeightedSampler({1.0, 0.0}, Rng(1, "sampler")),
                  std::invalid_argument);
  sampler::WeightedSampler ok({1.0, 2.0}, Rng(1, "sampler"));
  CHECK_THROWS_AS(ok.draw_epoch(0), std::invalid_argument);
}
