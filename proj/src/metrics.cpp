#include "microtrain/metrics.hpp"

#include <algorithm>
#include <cstdio>
#include <numeric>
#include <sstream>
#include <stdexcept>

namespace microtrain::metrics {

namespace {

void require_paired(const std::vector<int>& labels,
                    const std::vector<double>& probs) {
  if (labels.empty())
    throw std::invalid_argument("metrics: empty input");
  if (labels.size() != probs.size())
    throw std::invalid_argument(
        "metrics: label count " + std::to_string(labels.size()) +
        " != prob count " + std::to_string(probs.size()));
}

std::string fmt(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

std::string fmt_opt(const std::optional<double>& v) {
  return v ? fmt(*v) : std::string("undefined");
}

}  // namespace

ConfusionMatrix confusion(const std::vector<int>& labels,
                          const std::vector<double>& probs, double threshold) {
  require_paired(labels, probs);
  if (!(threshold > 0.0 && threshold < 1.0))
    throw std::invalid_argument("metrics: threshold must be in (0,1)");
  ConfusionMatrix cm;
  for (size_t i = 0; i < labels.size(); ++i) {
    const bool pred = probs[i] >= threshold;
    if (labels[i] == 1)
      (pred ? cm.tp : cm.fn) += 1;
    else
      (pred ? cm.fp : cm.tn) += 1;
  }
  return cm;
}

EvalReport derive(const ConfusionMatrix& cm) {
  EvalReport r;
  r.cm = cm;
  auto ratio = [](long long num, long long den) -> std::optional<double> {
    if (den == 0) return std::nullopt;
    return static_cast<double>(num) / static_cast<double>(den);
  };
  r.accuracy = ratio(cm.tp + cm.tn, cm.total());
  r.sensitivity = ratio(cm.tp, cm.tp + cm.fn);
  r.specificity = ratio(cm.tn, cm.tn + cm.fp);
  r.ppv = ratio(cm.tp, cm.tp + cm.fp);
  r.npv = ratio(cm.tn, cm.tn + cm.fn);
  r.f1 = ratio(2 * cm.tp, 2 * cm.tp + cm.fp + cm.fn);
  return r;
}

double auc_roc(const std::vector<int>& labels,
               const std::vector<double>& probs) {
  require_paired(labels, probs);
  const size_t n = labels.size();
  long long n_pos = 0;
  for (int y : labels) n_pos += (y == 1);
  const long long n_neg = static_cast<long long>(n) - n_pos;
  if (n_pos == 0 || n_neg == 0)
    throw std::invalid_argument(
        "metrics: AUC undefined on single-class input");

  std::vector<size_t> order(n);
  std::iota(order.begin(), order.end(), size_t{0});
  std::sort(order.begin(), order.end(),
            [&probs](size_t a, size_t b) { return probs[a] < probs[b]; });

  // Midranks over tie groups; sum the ranks of the positives.
  double rank_sum_pos = 0.0;
  size_t i = 0;
  while (i < n) {
    size_t j = i;
    while (j + 1 < n && probs[order[j + 1]] == probs[order[i]]) ++j;
    // ranks i+1 .. j+1 share the midrank
    const double midrank = 0.5 * (static_cast<double>(i + 1) +
                                  static_cast<double>(j + 1));
    for (size_t t = i; t <= j; ++t)
      if (labels[order[t]] == 1) rank_sum_pos += midrank;
    i = j + 1;
  }
  const double u = rank_sum_pos - 0.5 * static_cast<double>(n_pos) *
                                      static_cast<double>(n_pos + 1);
  return u / (static_cast<double>(n_pos) * static_cast<double>(n_neg));
}

std::vector<std::pair<double, double>> roc_points(
    const std::vector<int>& labels, const std::vector<double>& probs) {
  require_paired(labels, probs);
  long long n_pos = 0;
  for (int y : labels) n_pos += (y == 1);
  const long long n_neg = static_cast<long long>(labels.size()) - n_pos;
  if (n_pos == 0 || n_neg == 0)
    throw std::invalid_argument(
        "metrics: ROC undefined on single-class input");

  std::vector<size_t> order(labels.size());
  std::iota(order.begin(), order.end(), size_t{0});
  std::sort(order.begin(), order.end(),
            [&probs](size_t a, size_t b) { return probs[a] > probs[b]; });

  std::vector<std::pair<double, double>> pts;
  pts.emplace_back(0.0, 0.0);
  long long tp = 0, fp = 0;
  size_t i = 0;
  while (i < order.size()) {
    size_t j = i;
    while (j + 1 < order.size() &&
           probs[order[j + 1]] == probs[order[i]])
      ++j;
    for (size_t t = i; t <= j; ++t) {
      if (labels[order[t]] == 1)
        ++tp;
      else
        ++fp;
    }
    pts.emplace_back(static_cast<double>(fp) / static_cast<double>(n_neg),
                     static_cast<double>(tp) / static_cast<double>(n_pos));
    i = j + 1;
  }
  return pts;
}

double roc_area(const std::vector<std::pair<double, double>>& points) {
  double area = 0.0;
  for (size_t i = 1; i < points.size(); ++i) {
    const double dx = points[i].first - points[i - 1].first;
    area += dx * 0.5 * (points[i].second + points[i - 1].second);
  }
  return area;
}

EvalReport evaluate(const std::vector<int>& labels,
                    const std::vector<double>& probs, double threshold) {
  EvalReport r = derive(confusion(labels, probs, threshold));
  r.threshold = threshold;
  r.auc = auc_roc(labels, probs);
  return r;
}

std::string report_kv(const EvalReport& r) {
  std::ostringstream os;
  os << "threshold = " << fmt(r.threshold) << "\n";
  os << "tp = " << r.cm.tp << "\n";
  os << "tn = " << r.cm.tn << "\n";
  os << "fp = " << r.cm.fp << "\n";
  os << "fn = " << r.cm.fn << "\n";
  os << "accuracy = " << fmt_opt(r.accuracy) << "\n";
  os << "sensitivity = " << fmt_opt(r.sensitivity) << "\n";
  os << "specificity = " << fmt_opt(r.specificity) << "\n";
  os << "ppv = " << fmt_opt(r.ppv) << "\n";
  os << "npv = " << fmt_opt(r.npv) << "\n";
  os << "f1 = " << fmt_opt(r.f1) << "\n";
  os << "auc = " << fmt_opt(r.auc) << "\n";
  return os.str();
}

std::string confusion_csv(const ConfusionMatrix& cm) {
  std::ostringstream os;
  os << "tn,fp,fn,tp\n";
  os << cm.tn << "," << cm.fp << "," << cm.fn << "," << cm.tp << "\n";
  return os.str();
}

std::string report_csv(const EvalReport& r) {
  std::ostringstream os;
  os << "threshold,tp,tn,fp,fn,accuracy,sensitivity,specificity,ppv,npv,f1,"
        "auc\n";
  os << fmt(r.threshold) << "," << r.cm.tp << "," << r.cm.tn << "," << r.cm.fp
     << "," << r.cm.fn << "," << fmt_opt(r.accuracy) << ","
     << fmt_opt(r.sensitivity) << "," << fmt_opt(r.specificity) << ","
     << fmt_opt(r.ppv) << "," << fmt_opt(r.npv) << "," << fmt_opt(r.f1) << ","
     << fmt_opt(r.auc) << "\n";
  return os.str();
}

std::string roc_svg(const std::vector<std::pair<double, double>>& points) {
  // 640x480 canvas, 40px margins, y axis flipped to screen coordinates.
  const double x0 = 40, y0 = 440, x1 = 600, y1 = 40;
  auto sx = [&](double v) { return x0 + v * (x1 - x0); };
  auto sy = [&](double v) { return y0 + v * (y1 - y0); };
  std::ostringstream os;
  os << "<svg xmlns=\"http://www.w3.org/2000/svg\" viewBox=\"0 0 640 480\">\n";
  os << "  <rect width=\"640\" height=\"480\" fill=\"white\"/>\n";
  os << "  <line x1=\"" << x0 << "\" y1=\"" << y0 << "\" x2=\"" << x1
     << "\" y2=\"" << y0 << "\" stroke=\"black\"/>\n";
  os << "  <line x1=\"" << x0 << "\" y1=\"" << y0 << "\" x2=\"" << x0
     << "\" y2=\"" << y1 << "\" stroke=\"black\"/>\n";
  os << "  <line x1=\"" << sx(0) << "\" y1=\"" << sy(0) << "\" x2=\"" << sx(1)
     << "\" y2=\"" << sy(1) << "\" stroke=\"#bbbbbb\" stroke-dasharray=\"4\"/>\n";
  os << "  <text x=\"300\" y=\"470\" font-size=\"14\">FPR</text>\n";
  os << "  <text x=\"8\" y=\"240\" font-size=\"14\">TPR</text>\n";
  os << "  <polyline fill=\"none\" stroke=\"#c0392b\" stroke-width=\"2\" "
        "points=\"";
  char buf[64];
  for (size_t i = 0; i < points.size(); ++i) {
    std::snprintf(buf, sizeof buf, "%.2f,%.2f ", sx(points[i].first),
                  sy(points[i].second));
    os << buf;
  }
  os << "\"/>\n</svg>\n";
  return os.str();
}

}  // namespace microtrain::metrics
