#include "microtrain/trainer.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstring>
#include <sstream>
#include <stdexcept>

#include "microtrain/errors.hpp"
#include "microtrain/kernels.hpp"
#include "microtrain/metrics.hpp"
#include "microtrain/ops.hpp"
#include "microtrain/sampler.hpp"

namespace microtrain::train {

using model::HybridModel;
using model::ParamLevel;
using model::ParameterGroup;

const char* stage_name(Stage s) {
  switch (s) {
    case Stage::Warmup:
      return "Warmup";
    case Stage::SelectiveFineTune:
      return "SelectiveFineTune";
    case Stage::Single:
      return "Single";
  }
  return "?";
}

Stage stage_from_name(const std::string& name) {
  if (name == "Warmup") return Stage::Warmup;
  if (name == "SelectiveFineTune") return Stage::SelectiveFineTune;
  if (name == "Single") return Stage::Single;
  throw std::invalid_argument("unknown stage name '" + name + "'");
}

void StagePlan::validate() const {
  if (warmup_max_epochs < 1)
    throw std::invalid_argument("stage: warmup_max_epochs must be >= 1");
  if (patience < 1) throw std::invalid_argument("stage: patience must be >= 1");
  if (min_delta < 0.0)
    throw std::invalid_argument("stage: min_delta must be >= 0");
  if (finetune_epochs < 1)
    throw std::invalid_argument("stage: finetune_epochs must be >= 1");
}

void apply_stage(HybridModel& m, Stage stage) {
  for (ParameterGroup& g : m.groups()) {
    switch (stage) {
      case Stage::Warmup:
        g.frozen = g.level != ParamLevel::Head;
        break;
      case Stage::SelectiveFineTune:
        g.frozen = g.level == ParamLevel::LowLevel;
        break;
      case Stage::Single:
        g.frozen = false;
        break;
    }
  }
}

bool should_transition(const std::vector<TrainLogRow>& history,
                       const StagePlan& plan) {
  if (history.empty())
    throw std::invalid_argument("should_transition: empty history");
  for (const TrainLogRow& r : history)
    if (r.stage != Stage::Warmup)
      throw std::invalid_argument(
          "should_transition: history contains non-warmup rows");
  if (static_cast<int>(history.size()) >= plan.warmup_max_epochs) return true;
  // An epoch "stalls" when it improves on the best previous validation loss
  // by less than min_delta.
  int stalled_run = 0;
  double best = history.front().loss;
  for (size_t i = 1; i < history.size(); ++i) {
    const double improvement = best - history[i].loss;
    stalled_run = improvement < plan.min_delta ? stalled_run + 1 : 0;
    if (history[i].loss < best) best = history[i].loss;
  }
  return stalled_run >= plan.patience;
}

void SgdOptimizer::step(const std::vector<GradPair*>& params, double lr) {
  for (GradPair* p : params) {
    auto it = velocity_.find(p);
    if (it == velocity_.end())
      it = velocity_.emplace(p, Tensor(p->value.shape())).first;
    Tensor& v = it->second;
    kernels::momentum_update(v.data(), p->grad.data(), p->value.data(),
                             momentum_, weight_decay_, v.size());
    kernels::axpy(-lr, v.data(), p->value.data(), v.size());
    p->zero_grad();
  }
}

const Tensor* SgdOptimizer::velocity(const GradPair* p) const {
  auto it = velocity_.find(p);
  return it == velocity_.end() ? nullptr : &it->second;
}

Tensor batch_tensor(const std::vector<data::Sample>& samples, const int* idx,
                    int count) {
  const Tensor& first = samples[static_cast<size_t>(idx[0])].image;
  const int c = first.extent(0), h = first.extent(1), w = first.extent(2);
  Tensor out({count, c, h, w});
  const long long sz = first.size();
  for (int i = 0; i < count; ++i) {
    const Tensor& img = samples[static_cast<size_t>(idx[i])].image;
    std::memcpy(out.data() + i * sz, img.data(),
                static_cast<size_t>(sz) * sizeof(double));
  }
  return out;
}

std::vector<double> predict_probs(HybridModel& m,
                                  const std::vector<data::Sample>& samples,
                                  int batch_size) {
  std::vector<double> probs;
  probs.reserve(samples.size());
  std::vector<int> idx(static_cast<size_t>(batch_size));
  for (size_t start = 0; start < samples.size();
       start += static_cast<size_t>(batch_size)) {
    const int count = static_cast<int>(
        std::min(static_cast<size_t>(batch_size), samples.size() - start));
    for (int i = 0; i < count; ++i)
      idx[static_cast<size_t>(i)] = static_cast<int>(start) + i;
    Tensor p = m.forward(batch_tensor(samples, idx.data(), count));
    for (int i = 0; i < count; ++i) probs.push_back(p[i]);
  }
  return probs;
}

namespace {

struct EpochStats {
  double train_acc = 0.0;
  double last_lr = 0.0;
};

// One pass over sampled indices; advances the schedule one step per batch.
EpochStats run_train_epoch(HybridModel& m, const std::vector<data::Sample>& tr,
                           const std::vector<int>& order,
                           const TrainOptions& opt, SgdOptimizer& sgd,
                           schedule::Schedule& sched, int epoch) {
  EpochStats stats;
  long long correct = 0;
  const int n = static_cast<int>(order.size());
  int batch_index = 0;
  for (int start = 0; start < n; start += opt.batch_size, ++batch_index) {
    const int count = std::min(opt.batch_size, n - start);
    Tensor batch = batch_tensor(tr, order.data() + start, count);
    std::vector<int> ys(static_cast<size_t>(count));
    for (int i = 0; i < count; ++i)
      ys[static_cast<size_t>(i)] = tr[static_cast<size_t>(order[static_cast<size_t>(start + i)])].label;

    Tensor probs = m.forward(batch);
    std::vector<double> yhat(probs.data(), probs.data() + probs.size());
    const loss::BatchLoss bl = opt.joint_objective
                                   ? loss::batch_loss(ys, yhat, opt.loss_cfg)
                                   : loss::batch_bce_loss(ys, yhat, opt.loss_cfg);
    if (!std::isfinite(bl.mean))
      throw NumericError("non-finite loss at epoch " + std::to_string(epoch) +
                         ", batch " + std::to_string(batch_index));

    Tensor dprobs({count});
    for (int i = 0; i < count; ++i) dprobs[i] = bl.d_yhat[static_cast<size_t>(i)];
    m.backward(dprobs);

    const double lr = schedule::lr_at(sched);
    sgd.step(m.trainable_parameters(), lr);
    sched = schedule::advance(sched);
    stats.last_lr = lr;

    for (int i = 0; i < count; ++i)
      correct += (yhat[static_cast<size_t>(i)] >= 0.5 ? 1 : 0) == ys[static_cast<size_t>(i)];
  }
  stats.train_acc = static_cast<double>(correct) / static_cast<double>(n);
  return stats;
}

std::vector<std::pair<std::string, uint64_t>> snapshot_checksums(
    const HybridModel& m) {
  std::vector<std::pair<std::string, uint64_t>> out;
  for (const ParameterGroup& g : m.groups())
    out.emplace_back(g.name, model::parameter_checksum(g));
  return out;
}

}  // namespace

TrainResult train(HybridModel& m, const data::Dataset& ds,
                  const TrainOptions& opt) {
  const auto t_start = std::chrono::steady_clock::now();
  opt.loss_cfg.validate();
  opt.plan.validate();
  if (ds.train.empty() || ds.val.empty())
    throw ConfigError("train: empty train or val split");
  if (opt.batch_size < 1) throw std::invalid_argument("train: bad batch_size");

  std::vector<int> train_labels;
  train_labels.reserve(ds.train.size());
  for (const data::Sample& s : ds.train) train_labels.push_back(s.label);
  std::vector<int> val_labels;
  for (const data::Sample& s : ds.val) val_labels.push_back(s.label);

  // Sampling weights: class-balanced, or uniform for the ablation. A
  // single-class training split degrades to uniform with a warning.
  std::vector<double> weights(ds.train.size(), 1.0);
  if (opt.weighted_sampling) {
    try {
      weights = sampler::build_weights(train_labels);
    } catch (const std::runtime_error&) {
      // keep uniform
    }
  }
  sampler::WeightedSampler drawer(std::move(weights), Rng(opt.seed, "sampler"));

  const int n = static_cast<int>(ds.train.size());
  const int steps_per_epoch = (n + opt.batch_size - 1) / opt.batch_size;
  const int budget_epochs =
      opt.plan.warmup_max_epochs + opt.plan.finetune_epochs;

  schedule::Schedule sched;
  switch (opt.sched_kind) {
    case schedule::Kind::OneCycle:
      sched = schedule::make_one_cycle(
          opt.max_lr,
          static_cast<long long>(steps_per_epoch) * budget_epochs,
          opt.pct_start, opt.div_factor, opt.final_div_factor);
      break;
    case schedule::Kind::CosineWarmRestarts:
      sched = schedule::make_cosine_restarts(
          opt.eta_min, opt.max_lr,
          static_cast<long long>(steps_per_epoch) * opt.t0_epochs, opt.t_mult);
      break;
    case schedule::Kind::Constant:
      sched = schedule::make_constant(opt.constant_lr);
      break;
  }

  SgdOptimizer sgd(opt.momentum, opt.weight_decay);
  Stage stage = opt.staged ? Stage::Warmup : Stage::Single;
  apply_stage(m, stage);
  if (opt.staged) {
    // Warmup trains exactly the d+1 head scalars; anything else means the
    // group table is wrong.
    const long long expect = m.feature_dim() + 1;
    if (m.trainable_scalar_count() != expect)
      throw std::logic_error("train: warmup trainable count " +
                             std::to_string(m.trainable_scalar_count()) +
                             " != d+1 = " + std::to_string(expect));
  }

  TrainResult result;
  std::vector<TrainLogRow> warmup_rows;
  int finetune_done = 0;
  int epoch = 0;
  bool saved_any = false;

  while (true) {
    if (opt.epoch_cap >= 0 && epoch >= opt.epoch_cap) break;
    if (stage == Stage::SelectiveFineTune &&
        finetune_done >= opt.plan.finetune_epochs)
      break;
    if (stage == Stage::Single && epoch >= budget_epochs) break;
    ++epoch;

    const std::vector<int> order = drawer.draw_epoch(n);
    const EpochStats stats =
        run_train_epoch(m, ds.train, order, opt, sgd, sched, epoch);

    std::vector<double> val_probs = predict_probs(m, ds.val, opt.batch_size);
    const loss::BatchLoss vl =
        opt.joint_objective ? loss::batch_loss(val_labels, val_probs, opt.loss_cfg)
                            : loss::batch_bce_loss(val_labels, val_probs, opt.loss_cfg);
    const metrics::ConfusionMatrix cm =
        metrics::confusion(val_labels, val_probs, 0.5);
    const double val_acc =
        static_cast<double>(cm.tp + cm.tn) / static_cast<double>(cm.total());
    const double val_auc = metrics::auc_roc(val_labels, val_probs);

    TrainLogRow row;
    row.epoch = epoch;
    row.stage = stage;
    row.train_acc = stats.train_acc;
    row.val_acc = val_acc;
    row.val_auc = val_auc;
    row.lr = stats.last_lr;
    row.loss = vl.mean;
    row.checksums = snapshot_checksums(m);
    result.rows.push_back(row);

    if (val_auc > result.best_val_auc || result.best_epoch == 0) {
      result.best_val_auc = val_auc;
      result.best_epoch = epoch;
      if (!opt.checkpoint_path.empty()) {
        m.save_checkpoint_file(opt.checkpoint_path);
        saved_any = true;
      }
    }

    if (stage == Stage::Warmup) {
      warmup_rows.push_back(row);
      if (should_transition(warmup_rows, opt.plan)) {
        stage = Stage::SelectiveFineTune;
        apply_stage(m, stage);
        // Fresh plasticity: newly unfrozen groups start with zero momentum.
        for (ParameterGroup& g : m.groups())
          if (g.level == ParamLevel::HighLevel)
            for (GradPair* p : g.params) sgd.reset(p);
      }
    } else if (stage == Stage::SelectiveFineTune) {
      ++finetune_done;
    }
  }

  if (!opt.checkpoint_path.empty() && !saved_any)
    m.save_checkpoint_file(opt.checkpoint_path);  // zero-epoch run: init state

  result.wall_seconds =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - t_start)
          .count();
  return result;
}

double pretrain_backbone(HybridModel& m,
                         const std::vector<data::PretextSample>& train_set,
                         const std::vector<data::PretextSample>& holdout,
                         const PretrainOptions& opt) {
  if (opt.epochs == 0) return 0.0;
  if (train_set.empty() || holdout.empty())
    throw ConfigError("pretrain: empty pretext split");

  const int d = m.feature_dim();
  Rng rng(opt.seed, "pretext-head");
  GradPair head_w{Tensor({4, d})};
  GradPair head_b{Tensor({4})};
  const double scale = std::sqrt(2.0 / static_cast<double>(d));
  for (long long i = 0; i < head_w.value.size(); ++i)
    head_w.value[i] = scale * rng.normal();

  // Whole backbone plastic; the binary head stays out of the pretext pass.
  for (ParameterGroup& g : m.groups())
    g.frozen = g.level == ParamLevel::Head;

  SgdOptimizer sgd(opt.momentum, opt.weight_decay);
  Rng shuffle_rng(opt.seed, "pretext-shuffle");
  const int n = static_cast<int>(train_set.size());
  std::vector<int> order(static_cast<size_t>(n));
  for (int i = 0; i < n; ++i) order[static_cast<size_t>(i)] = i;

  auto forward_logits = [&](const std::vector<data::PretextSample>& set,
                            const int* idx, int count, Tensor& logits) {
    Tensor batch({count, set[0].image.extent(0), set[0].image.extent(1),
                  set[0].image.extent(2)});
    const long long sz = set[0].image.size();
    for (int i = 0; i < count; ++i)
      std::memcpy(batch.data() + i * sz,
                  set[static_cast<size_t>(idx[i])].image.data(),
                  static_cast<size_t>(sz) * sizeof(double));
    Tensor z = m.forward_features(batch);
    Tensor wt({d, 4});
    kernels::transpose(head_w.value.data(), wt.data(), 4, d);
    logits = Tensor({count, 4});
    kernels::matmul(z.data(), wt.data(), logits.data(), count, d, 4);
    for (int i = 0; i < count; ++i)
      for (int c = 0; c < 4; ++c) logits[i * 4 + c] += head_b.value[c];
    return z;
  };

  for (int epoch = 1; epoch <= opt.epochs; ++epoch) {
    for (int i = n - 1; i > 0; --i) {
      const int j = shuffle_rng.uniform_int(0, i);
      std::swap(order[static_cast<size_t>(i)], order[static_cast<size_t>(j)]);
    }
    int batch_index = 0;
    for (int start = 0; start < n; start += opt.batch_size, ++batch_index) {
      const int count = std::min(opt.batch_size, n - start);
      Tensor logits;
      Tensor z = forward_logits(train_set, order.data() + start, count, logits);

      // Softmax cross-entropy; dlogits = (softmax - onehot) / count.
      Tensor dlogits({count, 4});
      double loss_sum = 0.0;
      for (int i = 0; i < count; ++i) {
        const int y = train_set[static_cast<size_t>(order[static_cast<size_t>(start + i)])].orientation;
        double mx = logits[i * 4];
        for (int c = 1; c < 4; ++c) mx = std::max(mx, logits[i * 4 + c]);
        double denom = 0.0;
        for (int c = 0; c < 4; ++c) denom += std::exp(logits[i * 4 + c] - mx);
        const double log_denom = std::log(denom);
        loss_sum += -(logits[i * 4 + y] - mx - log_denom);
        for (int c = 0; c < 4; ++c) {
          const double p = std::exp(logits[i * 4 + c] - mx) / denom;
          dlogits[i * 4 + c] =
              (p - (c == y ? 1.0 : 0.0)) / static_cast<double>(count);
        }
      }
      if (!std::isfinite(loss_sum))
        throw NumericError("non-finite pretext loss at epoch " +
                           std::to_string(epoch) + ", batch " +
                           std::to_string(batch_index));

      // Head grads, then feature grads back through the backbone.
      Tensor dlt({4, count});
      kernels::transpose(dlogits.data(), dlt.data(), count, 4);
      kernels::matmul_acc(dlt.data(), z.data(), head_w.grad.data(), 4, count,
                          d);
      for (int i = 0; i < count; ++i)
        for (int c = 0; c < 4; ++c) head_b.grad[c] += dlogits[i * 4 + c];
      Tensor dz({count, d});
      kernels::matmul(dlogits.data(), head_w.value.data(), dz.data(), count, 4,
                      d);
      m.backward_features(dz);

      std::vector<GradPair*> params = m.trainable_parameters();
      params.push_back(&head_w);
      params.push_back(&head_b);
      sgd.step(params, opt.lr);
    }
  }

  // Holdout accuracy with the throwaway head still attached.
  long long correct = 0;
  std::vector<int> idx(static_cast<size_t>(opt.batch_size));
  const int hn = static_cast<int>(holdout.size());
  for (int start = 0; start < hn; start += opt.batch_size) {
    const int count = std::min(opt.batch_size, hn - start);
    for (int i = 0; i < count; ++i) idx[static_cast<size_t>(i)] = start + i;
    Tensor logits;
    forward_logits(holdout, idx.data(), count, logits);
    for (int i = 0; i < count; ++i) {
      int arg = 0;
      for (int c = 1; c < 4; ++c)
        if (logits[i * 4 + c] > logits[i * 4 + arg]) arg = c;
      correct += arg == holdout[static_cast<size_t>(start + i)].orientation;
    }
  }
  return static_cast<double>(correct) / static_cast<double>(hn);
}

std::string log_csv(const std::vector<TrainLogRow>& rows) {
  std::ostringstream os;
  os << "epoch,stage,train_acc,val_acc,val_auc,lr,loss";
  if (!rows.empty())
    for (const auto& [name, sum] : rows.front().checksums) os << ",cksum_" << name;
  os << "\n";
  char buf[64];
  for (const TrainLogRow& r : rows) {
    os << r.epoch << "," << stage_name(r.stage);
    const double reals[5] = {r.train_acc, r.val_acc, r.val_auc, r.lr, r.loss};
    for (double v : reals) {
      std::snprintf(buf, sizeof buf, ",%.6f", v);
      os << buf;
    }
    for (const auto& [name, sum] : r.checksums) {
      std::snprintf(buf, sizeof buf, ",%016llx",
                    static_cast<unsigned long long>(sum));
      os << buf;
    }
    os << "\n";
  }
  return os.str();
}

std::vector<TrainLogRow> parse_log_csv(const std::string& text) {
  std::istringstream is(text);
  std::string line;
  if (!std::getline(is, line)) throw ConfigError("log: empty file");
  std::vector<std::string> cols;
  {
    std::istringstream hs(line);
    std::string c;
    while (std::getline(hs, c, ',')) cols.push_back(c);
  }
  const size_t fixed = 7;
  if (cols.size() < fixed || cols[0] != "epoch" || cols[1] != "stage")
    throw ConfigError("log: unexpected header '" + line + "'");
  std::vector<std::string> group_names;
  for (size_t i = fixed; i < cols.size(); ++i) {
    if (cols[i].rfind("cksum_", 0) != 0)
      throw ConfigError("log: unexpected column '" + cols[i] + "'");
    group_names.push_back(cols[i].substr(6));
  }
  std::vector<TrainLogRow> rows;
  while (std::getline(is, line)) {
    if (line.empty()) continue;
    std::istringstream ls(line);
    std::string f;
    std::vector<std::string> fields;
    while (std::getline(ls, f, ',')) fields.push_back(f);
    if (fields.size() != cols.size())
      throw ConfigError("log: malformed row '" + line + "'");
    TrainLogRow r;
    r.epoch = std::stoi(fields[0]);
    r.stage = stage_from_name(fields[1]);
    r.train_acc = std::stod(fields[2]);
    r.val_acc = std::stod(fields[3]);
    r.val_auc = std::stod(fields[4]);
    r.lr = std::stod(fields[5]);
    r.loss = std::stod(fields[6]);
    for (size_t i = 0; i < group_names.size(); ++i)
      r.checksums.emplace_back(group_names[i],
                               std::stoull(fields[fixed + i], nullptr, 16));
    rows.push_back(std::move(r));
  }
  return rows;
}

}  // namespace microtrain::train
