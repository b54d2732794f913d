#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include "microtrain/data.hpp"
#include "microtrain/loss.hpp"
#include "microtrain/model.hpp"
#include "microtrain/schedule.hpp"
#include "microtrain/tensor.hpp"

// Two-stage selective-plasticity training:
//   Warmup            low + high blocks frozen, only the head learns
//   SelectiveFineTune low blocks stay frozen, high blocks + head learn
// The transition fires when validation loss stalls (patience epochs with
// improvement < min_delta) or when warmup_max_epochs is exhausted.
// Momentum buffers of a group are reset when the group is unfrozen.

namespace microtrain::train {

enum class Stage { Warmup, SelectiveFineTune, Single };

const char* stage_name(Stage s);
Stage stage_from_name(const std::string& name);

struct StagePlan {
  int warmup_max_epochs = 5;
  int patience = 2;
  double min_delta = 1e-3;
  int finetune_epochs = 10;

  void validate() const;
};

struct TrainLogRow {
  int epoch = 0;
  Stage stage = Stage::Warmup;
  double train_acc = 0.0;
  double val_acc = 0.0;
  double val_auc = 0.0;
  double lr = 0.0;
  double loss = 0.0;  // epoch-mean validation loss
  std::vector<std::pair<std::string, uint64_t>> checksums;  // per group
};

/// Warmup freezes {low, high}; SelectiveFineTune freezes {low}; Single
/// unfreezes everything (ablation mode).
void apply_stage(model::HybridModel& m, Stage stage);

/// True iff validation loss improved by < min_delta for `patience`
/// consecutive epochs, or warmup_max_epochs have elapsed. History must be
/// non-empty and all-warmup.
bool should_transition(const std::vector<TrainLogRow>& history,
                       const StagePlan& plan);

/// SGD with momentum: v <- mu*v + g + wd*theta; theta <- theta - lr*v.
/// Grads are zeroed after the step. Velocity buffers are lazily created
/// per parameter and can be dropped (fresh plasticity on unfreeze).
class SgdOptimizer {
 public:
  SgdOptimizer(double momentum, double weight_decay)
      : momentum_(momentum), weight_decay_(weight_decay) {}

  void step(const std::vector<GradPair*>& params, double lr);
  void reset(const GradPair* p) { velocity_.erase(p); }
  /// nullptr when the parameter has no buffer yet (treated as zero).
  const Tensor* velocity(const GradPair* p) const;

 private:
  double momentum_;
  double weight_decay_;
  std::map<const GradPair*, Tensor> velocity_;
};

struct TrainOptions {
  loss::LossConfig loss_cfg;
  bool joint_objective = true;   // false: plain BCE (ablation)
  bool weighted_sampling = true;  // false: uniform with replacement
  StagePlan plan;
  bool staged = true;  // false: single stage, all groups trainable

  schedule::Kind sched_kind = schedule::Kind::OneCycle;
  double max_lr = 0.05;
  double pct_start = 0.3;
  double div_factor = 25.0;
  double final_div_factor = 1e4;
  double eta_min = 1e-5;     // cosine restarts
  int t0_epochs = 4;         // cosine restarts, first cycle in epochs
  double t_mult = 2.0;
  double constant_lr = 0.01;

  int batch_size = 32;
  double momentum = 0.9;
  double weight_decay = 1e-4;
  uint64_t seed = 42;
  int epoch_cap = -1;  // >= 0 caps total epochs; 0 skips training entirely
  std::string checkpoint_path;  // best-val-AUC checkpoint ("" = off)
};

struct TrainResult {
  std::vector<TrainLogRow> rows;
  int best_epoch = 0;
  double best_val_auc = 0.0;
  double wall_seconds = 0.0;
};

/// Full staged run. Deterministic given seed + options. Throws NumericError
/// naming the first batch whose loss is non-finite.
TrainResult train(model::HybridModel& m, const data::Dataset& ds,
                  const TrainOptions& opt);

struct PretrainOptions {
  int epochs = 3;
  int batch_size = 32;
  double lr = 0.02;
  double momentum = 0.9;
  double weight_decay = 1e-4;
  uint64_t seed = 42;
};

/// Surrogate pretraining: 4-way rotation classification with a throwaway
/// softmax head on top of the backbone. Trains every backbone group (the
/// binary head is untouched) and returns accuracy on the holdout set.
/// epochs = 0 leaves the backbone bit-exactly at its initial state.
double pretrain_backbone(model::HybridModel& m,
                         const std::vector<data::PretextSample>& train_set,
                         const std::vector<data::PretextSample>& holdout,
                         const PretrainOptions& opt);

/// Stacks samples[idx[i]] images into a [count x C x H x W] batch.
Tensor batch_tensor(const std::vector<data::Sample>& samples, const int* idx,
                    int count);

/// Mini-batched inference over a whole split.
std::vector<double> predict_probs(model::HybridModel& m,
                                  const std::vector<data::Sample>& samples,
                                  int batch_size);

// Run-log CSV: header
//   epoch,stage,train_acc,val_acc,val_auc,lr,loss,cksum_<group>...
// with 6-decimal fixed-point reals and 16-hex-digit checksums.
std::string log_csv(const std::vector<TrainLogRow>& rows);
std::vector<TrainLogRow> parse_log_csv(const std::string& text);

}  // namespace microtrain::train
