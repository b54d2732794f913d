#pragma once

#include <optional>
#include <string>
#include <vector>

// Binary-classification evaluation: confusion matrix, the derived ratio
// metrics, and ROC-AUC via the rank (Mann-Whitney) statistic with midrank
// tie handling.

namespace microtrain::metrics {

struct ConfusionMatrix {
  long long tp = 0, tn = 0, fp = 0, fn = 0;
  long long total() const { return tp + tn + fp + fn; }
};

/// Ratio fields are empty when their denominator is zero (undefined, not 0).
struct EvalReport {
  std::optional<double> accuracy;
  std::optional<double> sensitivity;  // recall, tp/(tp+fn)
  std::optional<double> specificity;  // tn/(tn+fp)
  std::optional<double> ppv;          // precision, tp/(tp+fp)
  std::optional<double> npv;          // tn/(tn+fn)
  std::optional<double> f1;           // 2tp/(2tp+fp+fn)
  std::optional<double> auc;
  ConfusionMatrix cm;
  double threshold = 0.5;
};

/// Predict positive iff prob >= threshold.
ConfusionMatrix confusion(const std::vector<int>& labels,
                          const std::vector<double>& probs, double threshold);

/// All ratio metrics from the matrix (auc left empty).
EvalReport derive(const ConfusionMatrix& cm);

/// Probability that a random positive outranks a random negative, ties
/// counted half. O(n log n) via sorting with midranks. Throws
/// std::invalid_argument when a class is missing.
double auc_roc(const std::vector<int>& labels,
               const std::vector<double>& probs);

/// Monotone ROC staircase from (0,0) to (1,1) over distinct score
/// thresholds, descending.
std::vector<std::pair<double, double>> roc_points(
    const std::vector<int>& labels, const std::vector<double>& probs);

/// Trapezoidal area under a staircase from roc_points.
double roc_area(const std::vector<std::pair<double, double>>& points);

/// Full evaluation at a threshold, including AUC.
EvalReport evaluate(const std::vector<int>& labels,
                    const std::vector<double>& probs, double threshold);

// Presentation helpers.
std::string report_kv(const EvalReport& r);        // flat key = value text
std::string confusion_csv(const ConfusionMatrix& cm);
std::string report_csv(const EvalReport& r);
std::string roc_svg(const std::vector<std::pair<double, double>>& points);

}  // namespace microtrain::metrics
