#pragma once

#include <vector>

// The training objective: binary cross-entropy, focal reweighting with the
// true-class probability p_t, label smoothing, and their composition into
// the joint loss used by the trainer.
//
// Joint loss with smoothed target y' = y*(1-eps) + eps/2:
//
//   L = -[ y' * alpha * (1-q)^gamma * ln(q)
//        + (1-y') * (1-alpha) * q^gamma * ln(1-q) ],   q = clamp(yhat)
//
// This is the soft-target focal form: at eps=0, y=1 it collapses exactly to
// the hard focal loss -alpha*(1-q)^gamma*ln(q), and at gamma=0, eps=0,
// alpha=0.5 it equals 0.5 * BCE for both classes. alpha weights the positive
// term, 1-alpha the negative term.
//
// Probabilities are clamped to [prob_floor, 1-prob_floor] before any log.

namespace microtrain::loss {

struct LossConfig {
  double alpha = 0.5;        // class-balance factor, in (0,1)
  double gamma = 2.0;        // focusing exponent, >= 0
  double epsilon = 0.1;      // label-smoothing coefficient, in [0,1]
  double prob_floor = 1e-7;  // clamp for log arguments, in (0, 0.5)

  void validate() const;  // throws std::invalid_argument
};

double clamp_prob(double yhat, const LossConfig& cfg);

/// Eq. form: -[y*ln(q) + (1-y)*ln(1-q)] after clamping.
double bce(int y, double yhat, const LossConfig& cfg);

/// Probability assigned to the true class: yhat when y=1, 1-yhat when y=0.
double p_t(int y, double yhat);

/// Hard-target focal loss: -alpha * (1 - p_t)^gamma * ln(p_t).
double focal(int y, double yhat, const LossConfig& cfg);

/// y' = y*(1-eps) + eps/2.
double smooth_label(int y, double epsilon);

struct LossGrad {
  double value;        // L
  double d_yhat;       // dL/dyhat (zero outside the clamp interval)
  double d_logit;      // dL/dlogit through yhat = sigmoid(logit)
};

/// Smoothed focal joint loss with analytic gradients.
LossGrad joint_loss(int y, double yhat, const LossConfig& cfg);

struct BatchLoss {
  double mean;                  // mean of per-sample losses
  std::vector<double> d_yhat;   // per-sample dL/dyhat, scaled by 1/N
  std::vector<double> d_logit;  // per-sample dL/dlogit, scaled by 1/N
};

/// Mean reduction over the batch; throws std::invalid_argument when empty
/// or mismatched.
BatchLoss batch_loss(const std::vector<int>& ys,
                     const std::vector<double>& yhats, const LossConfig& cfg);

/// Plain BCE counterpart of joint_loss (ablation baseline objective).
LossGrad bce_loss(int y, double yhat, const LossConfig& cfg);
BatchLoss batch_bce_loss(const std::vector<int>& ys,
                         const std::vector<double>& yhats,
                         const LossConfig& cfg);

}  // namespace microtrain::loss
