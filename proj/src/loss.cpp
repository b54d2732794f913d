#include "microtrain/loss.hpp"

#include <cmath>
#include <stdexcept>
#include <string>

namespace microtrain::loss {

void LossConfig::validate() const {
  if (!(alpha > 0.0 && alpha < 1.0))
    throw std::invalid_argument("loss: alpha must be in (0,1), got " +
                                std::to_string(alpha));
  if (!(gamma >= 0.0))
    throw std::invalid_argument("loss: gamma must be >= 0, got " +
                                std::to_string(gamma));
  if (!(epsilon >= 0.0 && epsilon <= 1.0))
    throw std::invalid_argument("loss: epsilon must be in [0,1], got " +
                                std::to_string(epsilon));
  if (!(prob_floor > 0.0 && prob_floor < 0.5))
    throw std::invalid_argument("loss: prob_floor must be in (0,0.5), got " +
                                std::to_string(prob_floor));
}

double clamp_prob(double yhat, const LossConfig& cfg) {
  if (yhat < cfg.prob_floor) return cfg.prob_floor;
  if (yhat > 1.0 - cfg.prob_floor) return 1.0 - cfg.prob_floor;
  return yhat;
}

double bce(int y, double yhat, const LossConfig& cfg) {
  const double q = clamp_prob(yhat, cfg);
  return y == 1 ? -std::log(q) : -std::log(1.0 - q);
}

double p_t(int y, double yhat) { return y == 1 ? yhat : 1.0 - yhat; }

double focal(int y, double yhat, const LossConfig& cfg) {
  const double q = clamp_prob(yhat, cfg);
  const double pt = p_t(y, q);
  return -cfg.alpha * std::pow(1.0 - pt, cfg.gamma) * std::log(pt);
}

double smooth_label(int y, double epsilon) {
  return static_cast<double>(y) * (1.0 - epsilon) + epsilon / 2.0;
}

LossGrad joint_loss(int y, double yhat, const LossConfig& cfg) {
  const double q = clamp_prob(yhat, cfg);
  const bool inside = yhat > cfg.prob_floor && yhat < 1.0 - cfg.prob_floor;
  const double yp = smooth_label(y, cfg.epsilon);
  const double g = cfg.gamma;
  const double a = cfg.alpha;

  const double log_q = std::log(q);
  const double log_1q = std::log(1.0 - q);
  const double pow_1q = std::pow(1.0 - q, g);  // (1-q)^gamma
  const double pow_q = std::pow(q, g);         // q^gamma

  LossGrad out;
  out.value = -(yp * a * pow_1q * log_q + (1.0 - yp) * (1.0 - a) * pow_q * log_1q);

  // d/dq of the positive and negative terms; the gamma-weighted pieces
  // vanish identically at gamma = 0 and are skipped to avoid 0 * inf.
  double dpos = yp * a * (pow_1q / q);
  double dneg = (1.0 - yp) * (1.0 - a) * (-pow_q / (1.0 - q));
  if (g != 0.0) {
    dpos += yp * a * (-g * std::pow(1.0 - q, g - 1.0) * log_q);
    dneg += (1.0 - yp) * (1.0 - a) * (g * std::pow(q, g - 1.0) * log_1q);
  }
  const double d_q = -(dpos + dneg);

  // Outside the clamp interval the loss is constant in yhat.
  out.d_yhat = inside ? d_q : 0.0;
  out.d_logit = out.d_yhat * q * (1.0 - q);
  return out;
}

LossGrad bce_loss(int y, double yhat, const LossConfig& cfg) {
  const double q = clamp_prob(yhat, cfg);
  const bool inside = yhat > cfg.prob_floor && yhat < 1.0 - cfg.prob_floor;
  LossGrad out;
  out.value = bce(y, yhat, cfg);
  const double d_q = y == 1 ? -1.0 / q : 1.0 / (1.0 - q);
  out.d_yhat = inside ? d_q : 0.0;
  out.d_logit = out.d_yhat * q * (1.0 - q);
  return out;
}

namespace {

template <typename PerSample>
BatchLoss reduce(const std::vector<int>& ys, const std::vector<double>& yhats,
                 PerSample per_sample) {
  if (ys.empty())
    throw std::invalid_argument("batch_loss: empty batch");
  if (ys.size() != yhats.size())
    throw std::invalid_argument(
        "batch_loss: label count " + std::to_string(ys.size()) +
        " != prediction count " + std::to_string(yhats.size()));
  const double inv_n = 1.0 / static_cast<double>(ys.size());
  BatchLoss out;
  out.d_yhat.resize(ys.size());
  out.d_logit.resize(ys.size());
  double sum = 0.0;
  for (size_t i = 0; i < ys.size(); ++i) {
    const LossGrad lg = per_sample(ys[i], yhats[i]);
    sum += lg.value;
    out.d_yhat[i] = lg.d_yhat * inv_n;
    out.d_logit[i] = lg.d_logit * inv_n;
  }
  out.mean = sum * inv_n;
  return out;
}

}  // namespace

BatchLoss batch_loss(const std::vector<int>& ys,
                     const std::vector<double>& yhats, const LossConfig& cfg) {
  return reduce(ys, yhats,
                [&cfg](int y, double p) { return joint_loss(y, p, cfg); });
}

BatchLoss batch_bce_loss(const std::vector<int>& ys,
                         const std::vector<double>& yhats,
                         const LossConfig& cfg) {
  return reduce(ys, yhats,
                [&cfg](int y, double p) { return bce_loss(y, p, cfg); });
}

}  // namespace microtrain::loss
