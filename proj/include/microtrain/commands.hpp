#pragma once

#include <functional>
#include <string>

#include "microtrain/config.hpp"

// Command implementations behind the CLI verbs. They throw on failure;
// invoke() maps exceptions to the exit-code contract:
//   0 success, 2 config/input problems, 3 numeric abort, 1 anything else.

namespace microtrain::cli {

int invoke(const std::function<void()>& fn);

/// Writes PGM images + per-split manifests + the resolved config into
/// cfg.data_dir (falling back to cfg.out_dir). Byte-identical across reruns
/// with the same config.
void cmd_gen_data(const config::RunConfig& cfg);

/// Pretext pretraining only; saves <out>/pretrained.mtck.
void cmd_pretrain(const config::RunConfig& cfg);

struct TrainSummary {
  int epochs = 0;
  int best_epoch = 0;
  double best_val_auc = 0.0;
  double pretext_acc = -1.0;  // -1 when pretraining was skipped
  double wall_seconds = 0.0;
};

/// Full pipeline: optional pretraining, staged training, log + best
/// checkpoint + resolved config into cfg.out_dir.
TrainSummary cmd_train(const config::RunConfig& cfg, bool no_pretrain = false);

/// Evaluates a checkpoint on one dataset split; writes report.txt,
/// report.csv, confusion.csv and roc.svg into out_dir.
void cmd_eval(const std::string& checkpoint_path, const std::string& data_dir,
              const std::string& split, const std::string& out_dir);

/// Epoch-curve SVG + text summary from a run directory's log.csv.
void cmd_report(const std::string& run_dir);

// Small file helpers shared by commands and tests.
std::string read_text_file(const std::string& path);
void write_text_file(const std::string& path, const std::string& content);

}  // namespace microtrain::cli
