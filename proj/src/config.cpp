#include "microtrain/config.hpp"

#include <cstdio>
#include <fstream>
#include <functional>
#include <map>
#include <sstream>

#include "microtrain/errors.hpp"

namespace microtrain::config {

namespace {

std::string trim(const std::string& s) {
  size_t a = s.find_first_not_of(" \t\r");
  if (a == std::string::npos) return "";
  size_t b = s.find_last_not_of(" \t\r");
  return s.substr(a, b - a + 1);
}

std::string fmt_double(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

uint64_t to_u64(const std::string& v) { return std::stoull(v); }
int to_int(const std::string& v) { return std::stoi(v); }
double to_double(const std::string& v) { return std::stod(v); }

bool to_bool(const std::string& v) {
  if (v == "true" || v == "1") return true;
  if (v == "false" || v == "0") return false;
  throw std::invalid_argument("expected true/false, got '" + v + "'");
}

std::string blocks_str(const std::vector<model::ConvSpec>& blocks) {
  std::string out;
  for (size_t i = 0; i < blocks.size(); ++i)
    out += (i ? "," : "") + blocks[i].str();
  return out;
}

std::vector<model::ConvSpec> parse_blocks(const std::string& v) {
  std::vector<model::ConvSpec> out;
  std::istringstream is(v);
  std::string one;
  while (std::getline(is, one, ','))
    if (!trim(one).empty()) out.push_back(model::ConvSpec::parse(trim(one)));
  if (out.empty()) throw std::invalid_argument("empty block list");
  return out;
}

using Setter = std::function<void(RunConfig&, const std::string&)>;

const std::map<std::string, Setter>& setters() {
  static const std::map<std::string, Setter> table = {
      {"seed", [](RunConfig& c, const std::string& v) { c.seed = to_u64(v); }},
      {"out", [](RunConfig& c, const std::string& v) { c.out_dir = v; }},
      {"data.dir", [](RunConfig& c, const std::string& v) { c.data_dir = v; }},
      {"data.n_train", [](RunConfig& c, const std::string& v) { c.n_train = to_int(v); }},
      {"data.n_val", [](RunConfig& c, const std::string& v) { c.n_val = to_int(v); }},
      {"data.n_test", [](RunConfig& c, const std::string& v) { c.n_test = to_int(v); }},
      {"data.positive_fraction", [](RunConfig& c, const std::string& v) { c.positive_fraction = to_double(v); }},
      {"data.label_noise", [](RunConfig& c, const std::string& v) { c.label_noise = to_double(v); }},
      {"data.difficulty", [](RunConfig& c, const std::string& v) { c.difficulty = v; }},
      {"model.in_channels", [](RunConfig& c, const std::string& v) { c.model_cfg.in_channels = to_int(v); }},
      {"model.in_h", [](RunConfig& c, const std::string& v) { c.model_cfg.in_h = to_int(v); }},
      {"model.in_w", [](RunConfig& c, const std::string& v) { c.model_cfg.in_w = to_int(v); }},
      {"model.low_blocks", [](RunConfig& c, const std::string& v) { c.model_cfg.low_blocks = parse_blocks(v); }},
      {"model.high_blocks", [](RunConfig& c, const std::string& v) { c.model_cfg.high_blocks = parse_blocks(v); }},
      {"loss.kind", [](RunConfig& c, const std::string& v) { c.loss_kind = v; }},
      {"loss.alpha",
       [](RunConfig& c, const std::string& v) {
         if (v == "auto") {
           c.alpha_auto = true;
         } else {
           c.alpha_auto = false;
           c.alpha = to_double(v);
         }
       }},
      {"loss.gamma", [](RunConfig& c, const std::string& v) { c.gamma = to_double(v); }},
      {"loss.epsilon", [](RunConfig& c, const std::string& v) { c.epsilon = to_double(v); }},
      {"loss.prob_floor", [](RunConfig& c, const std::string& v) { c.prob_floor = to_double(v); }},
      {"schedule.kind", [](RunConfig& c, const std::string& v) { c.sched_kind = v; }},
      {"schedule.max_lr", [](RunConfig& c, const std::string& v) { c.max_lr = to_double(v); }},
      {"schedule.pct_start", [](RunConfig& c, const std::string& v) { c.pct_start = to_double(v); }},
      {"schedule.div_factor", [](RunConfig& c, const std::string& v) { c.div_factor = to_double(v); }},
      {"schedule.final_div_factor", [](RunConfig& c, const std::string& v) { c.final_div_factor = to_double(v); }},
      {"schedule.eta_min", [](RunConfig& c, const std::string& v) { c.eta_min = to_double(v); }},
      {"schedule.t0_epochs", [](RunConfig& c, const std::string& v) { c.t0_epochs = to_int(v); }},
      {"schedule.t_mult", [](RunConfig& c, const std::string& v) { c.t_mult = to_double(v); }},
      {"schedule.constant_lr", [](RunConfig& c, const std::string& v) { c.constant_lr = to_double(v); }},
      {"opt.batch_size", [](RunConfig& c, const std::string& v) { c.batch_size = to_int(v); }},
      {"opt.momentum", [](RunConfig& c, const std::string& v) { c.momentum = to_double(v); }},
      {"opt.weight_decay", [](RunConfig& c, const std::string& v) { c.weight_decay = to_double(v); }},
      {"stage.mode", [](RunConfig& c, const std::string& v) { c.stage_mode = v; }},
      {"stage.warmup_max_epochs", [](RunConfig& c, const std::string& v) { c.warmup_max_epochs = to_int(v); }},
      {"stage.patience", [](RunConfig& c, const std::string& v) { c.patience = to_int(v); }},
      {"stage.min_delta", [](RunConfig& c, const std::string& v) { c.min_delta = to_double(v); }},
      {"stage.finetune_epochs", [](RunConfig& c, const std::string& v) { c.finetune_epochs = to_int(v); }},
      {"sampler.mode", [](RunConfig& c, const std::string& v) { c.sampler_mode = v; }},
      {"pretrain.enabled", [](RunConfig& c, const std::string& v) { c.pretrain_enabled = to_bool(v); }},
      {"pretrain.epochs", [](RunConfig& c, const std::string& v) { c.pretrain_epochs = to_int(v); }},
      {"pretrain.n", [](RunConfig& c, const std::string& v) { c.pretrain_n = to_int(v); }},
      {"pretrain.lr", [](RunConfig& c, const std::string& v) { c.pretrain_lr = to_double(v); }},
      {"pretrain.batch_size", [](RunConfig& c, const std::string& v) { c.pretrain_batch_size = to_int(v); }},
      {"train.epoch_cap", [](RunConfig& c, const std::string& v) { c.epoch_cap = to_int(v); }},
      {"train.init_checkpoint", [](RunConfig& c, const std::string& v) { c.init_checkpoint = v; }},
  };
  return table;
}

}  // namespace

RunConfig parse_config_text(const std::string& text) {
  RunConfig cfg;
  std::istringstream is(text);
  std::string line;
  int lineno = 0;
  while (std::getline(is, line)) {
    ++lineno;
    const size_t hash = line.find('#');
    if (hash != std::string::npos) line = line.substr(0, hash);
    line = trim(line);
    if (line.empty()) continue;
    const size_t eq = line.find('=');
    if (eq == std::string::npos)
      throw ConfigError("config line " + std::to_string(lineno) +
                        ": expected key = value");
    const std::string key = trim(line.substr(0, eq));
    const std::string value = trim(line.substr(eq + 1));
    auto it = setters().find(key);
    if (it == setters().end())
      throw ConfigError("config line " + std::to_string(lineno) +
                        ": unknown key '" + key + "'");
    try {
      it->second(cfg, value);
    } catch (const std::exception& e) {
      throw ConfigError("config line " + std::to_string(lineno) + ": key '" +
                        key + "': " + e.what());
    }
  }
  cfg.validate();
  return cfg;
}

RunConfig parse_config_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config: " + path);
  std::ostringstream ss;
  ss << in.rdbuf();
  return parse_config_text(ss.str());
}

void RunConfig::validate() const {
  auto fail = [](const std::string& msg) { throw ConfigError("config: " + msg); };
  if (difficulty != "easy" && difficulty != "hard")
    fail("data.difficulty must be easy|hard");
  if (loss_kind != "joint" && loss_kind != "bce")
    fail("loss.kind must be joint|bce");
  if (sched_kind != "onecycle" && sched_kind != "cosine_restarts" &&
      sched_kind != "constant")
    fail("schedule.kind must be onecycle|cosine_restarts|constant");
  if (stage_mode != "staged" && stage_mode != "single")
    fail("stage.mode must be staged|single");
  if (sampler_mode != "weighted" && sampler_mode != "uniform")
    fail("sampler.mode must be weighted|uniform");
  if (batch_size < 1) fail("opt.batch_size must be >= 1");
  if (pretrain_n < 4) fail("pretrain.n must be >= 4");
  try {
    dataset_spec().validate();
    train::StagePlan plan{warmup_max_epochs, patience, min_delta,
                          finetune_epochs};
    plan.validate();
    loss::LossConfig lc{alpha_auto ? 0.5 : alpha, gamma, epsilon, prob_floor};
    lc.validate();
  } catch (const std::exception& e) {
    fail(e.what());
  }
}

data::DatasetSpec RunConfig::dataset_spec() const {
  data::DatasetSpec spec;
  spec.n_train = n_train;
  spec.n_val = n_val;
  spec.n_test = n_test;
  spec.positive_fraction = positive_fraction;
  spec.label_noise = label_noise;
  spec.difficulty =
      difficulty == "hard" ? data::Difficulty::Hard : data::Difficulty::Easy;
  spec.seed = seed;
  spec.height = model_cfg.in_h;
  spec.width = model_cfg.in_w;
  return spec;
}

train::TrainOptions RunConfig::train_options() const {
  train::TrainOptions opt;
  opt.loss_cfg = loss::LossConfig{alpha_auto ? 0.5 : alpha, gamma, epsilon,
                                  prob_floor};
  opt.joint_objective = loss_kind == "joint";
  opt.weighted_sampling = sampler_mode == "weighted";
  opt.plan =
      train::StagePlan{warmup_max_epochs, patience, min_delta, finetune_epochs};
  opt.staged = stage_mode == "staged";
  opt.sched_kind = sched_kind == "onecycle" ? schedule::Kind::OneCycle
                   : sched_kind == "cosine_restarts"
                       ? schedule::Kind::CosineWarmRestarts
                       : schedule::Kind::Constant;
  opt.max_lr = max_lr;
  opt.pct_start = pct_start;
  opt.div_factor = div_factor;
  opt.final_div_factor = final_div_factor;
  opt.eta_min = eta_min;
  opt.t0_epochs = t0_epochs;
  opt.t_mult = t_mult;
  opt.constant_lr = constant_lr;
  opt.batch_size = batch_size;
  opt.momentum = momentum;
  opt.weight_decay = weight_decay;
  opt.seed = seed;
  opt.epoch_cap = epoch_cap;
  return opt;
}

train::PretrainOptions RunConfig::pretrain_options() const {
  train::PretrainOptions opt;
  opt.epochs = pretrain_epochs;
  opt.batch_size = pretrain_batch_size;
  opt.lr = pretrain_lr;
  opt.momentum = momentum;
  opt.weight_decay = weight_decay;
  opt.seed = seed;
  return opt;
}

std::string serialize(const RunConfig& cfg) {
  std::ostringstream os;
  os << "seed = " << cfg.seed << "\n";
  os << "out = " << cfg.out_dir << "\n";
  os << "data.dir = " << cfg.data_dir << "\n";
  os << "data.n_train = " << cfg.n_train << "\n";
  os << "data.n_val = " << cfg.n_val << "\n";
  os << "data.n_test = " << cfg.n_test << "\n";
  os << "data.positive_fraction = " << fmt_double(cfg.positive_fraction) << "\n";
  os << "data.label_noise = " << fmt_double(cfg.label_noise) << "\n";
  os << "data.difficulty = " << cfg.difficulty << "\n";
  os << "model.in_channels = " << cfg.model_cfg.in_channels << "\n";
  os << "model.in_h = " << cfg.model_cfg.in_h << "\n";
  os << "model.in_w = " << cfg.model_cfg.in_w << "\n";
  os << "model.low_blocks = " << blocks_str(cfg.model_cfg.low_blocks) << "\n";
  os << "model.high_blocks = " << blocks_str(cfg.model_cfg.high_blocks) << "\n";
  os << "loss.kind = " << cfg.loss_kind << "\n";
  os << "loss.alpha = "
     << (cfg.alpha_auto ? std::string("auto") : fmt_double(cfg.alpha)) << "\n";
  os << "loss.gamma = " << fmt_double(cfg.gamma) << "\n";
  os << "loss.epsilon = " << fmt_double(cfg.epsilon) << "\n";
  os << "loss.prob_floor = " << fmt_double(cfg.prob_floor) << "\n";
  os << "schedule.kind = " << cfg.sched_kind << "\n";
  os << "schedule.max_lr = " << fmt_double(cfg.max_lr) << "\n";
  os << "schedule.pct_start = " << fmt_double(cfg.pct_start) << "\n";
  os << "schedule.div_factor = " << fmt_double(cfg.div_factor) << "\n";
  os << "schedule.final_div_factor = " << fmt_double(cfg.final_div_factor)
     << "\n";
  os << "schedule.eta_min = " << fmt_double(cfg.eta_min) << "\n";
  os << "schedule.t0_epochs = " << cfg.t0_epochs << "\n";
  os << "schedule.t_mult = " << fmt_double(cfg.t_mult) << "\n";
  os << "schedule.constant_lr = " << fmt_double(cfg.constant_lr) << "\n";
  os << "opt.batch_size = " << cfg.batch_size << "\n";
  os << "opt.momentum = " << fmt_double(cfg.momentum) << "\n";
  os << "opt.weight_decay = " << fmt_double(cfg.weight_decay) << "\n";
  os << "stage.mode = " << cfg.stage_mode << "\n";
  os << "stage.warmup_max_epochs = " << cfg.warmup_max_epochs << "\n";
  os << "stage.patience = " << cfg.patience << "\n";
  os << "stage.min_delta = " << fmt_double(cfg.min_delta) << "\n";
  os << "stage.finetune_epochs = " << cfg.finetune_epochs << "\n";
  os << "sampler.mode = " << cfg.sampler_mode << "\n";
  os << "pretrain.enabled = " << (cfg.pretrain_enabled ? "true" : "false")
     << "\n";
  os << "pretrain.epochs = " << cfg.pretrain_epochs << "\n";
  os << "pretrain.n = " << cfg.pretrain_n << "\n";
  os << "pretrain.lr = " << fmt_double(cfg.pretrain_lr) << "\n";
  os << "pretrain.batch_size = " << cfg.pretrain_batch_size << "\n";
  os << "train.epoch_cap = " << cfg.epoch_cap << "\n";
  os << "train.init_checkpoint = " << cfg.init_checkpoint << "\n";
  return os.str();
}

}  // namespace microtrain::config
