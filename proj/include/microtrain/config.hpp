#pragma once

#include <cstdint>
#include <string>

#include "microtrain/data.hpp"
#include "microtrain/model.hpp"
#include "microtrain/trainer.hpp"

// Flat-key run configuration: one `key = value` per line, `#` comments.
// Unknown keys are rejected with their line number. serialize() materializes
// every key, defaults included, so a persisted copy fully describes a run.

namespace microtrain::config {

struct RunConfig {
  uint64_t seed = 42;
  std::string out_dir = "run";
  std::string data_dir;

  // data
  int n_train = 512;
  int n_val = 128;
  int n_test = 120;
  double positive_fraction = 0.5;
  double label_noise = 0.0;
  std::string difficulty = "easy";  // easy|hard

  // model
  model::ModelConfig model_cfg = model::ModelConfig::defaults();

  // loss
  std::string loss_kind = "joint";  // joint|bce
  bool alpha_auto = true;           // alpha = N_neg / N from training labels
  double alpha = 0.5;               // used when alpha_auto is false
  double gamma = 2.0;
  double epsilon = 0.1;
  double prob_floor = 1e-7;

  // schedule
  std::string sched_kind = "onecycle";  // onecycle|cosine_restarts|constant
  double max_lr = 0.05;
  double pct_start = 0.3;
  double div_factor = 25.0;
  double final_div_factor = 1e4;
  double eta_min = 1e-5;
  int t0_epochs = 4;
  double t_mult = 2.0;
  double constant_lr = 0.01;

  // optimizer
  int batch_size = 32;
  double momentum = 0.9;
  double weight_decay = 1e-4;

  // stages
  std::string stage_mode = "staged";  // staged|single
  int warmup_max_epochs = 5;
  int patience = 2;
  double min_delta = 1e-3;
  int finetune_epochs = 10;

  // sampler
  std::string sampler_mode = "weighted";  // weighted|uniform

  // pretraining
  bool pretrain_enabled = true;
  int pretrain_epochs = 3;
  int pretrain_n = 1024;
  double pretrain_lr = 0.02;
  int pretrain_batch_size = 32;

  // train extras
  int epoch_cap = -1;
  std::string init_checkpoint;

  void validate() const;  // throws ConfigError on semantic problems

  data::DatasetSpec dataset_spec() const;
  train::TrainOptions train_options() const;
  train::PretrainOptions pretrain_options() const;
};

/// Throws ConfigError naming the offending line.
RunConfig parse_config_text(const std::string& text);
RunConfig parse_config_file(const std::string& path);

/// Canonical key order, all defaults materialized; parse(serialize(c)) == c.
std::string serialize(const RunConfig& cfg);

}  // namespace microtrain::config
