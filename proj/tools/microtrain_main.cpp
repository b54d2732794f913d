// microtrain CLI: gen-data | pretrain | train | eval | report

#include <CLI11.hpp>
#include <iostream>
#include <mutex>
#include <thread>
#include <vector>

#include "microtrain/commands.hpp"
#include "microtrain/errors.hpp"

namespace {

using microtrain::ConfigError;
using microtrain::config::RunConfig;

RunConfig load_config(const std::string& config_path, uint64_t* seed_override,
                      const std::string& out_override) {
  RunConfig cfg;
  if (!config_path.empty())
    cfg = microtrain::config::parse_config_file(config_path);
  if (seed_override) cfg.seed = *seed_override;
  if (!out_override.empty()) cfg.out_dir = out_override;
  return cfg;
}

// "--seeds a..b" fan-out: independent runs in parallel workers, one output
// subdirectory per seed.
int run_seed_range(const RunConfig& base, bool no_pretrain, uint64_t lo,
                   uint64_t hi) {
  std::vector<uint64_t> seeds;
  for (uint64_t s = lo; s <= hi; ++s) seeds.push_back(s);
  const unsigned workers =
      std::min<unsigned>(std::max(1u, std::thread::hardware_concurrency()),
                         static_cast<unsigned>(seeds.size()));
  std::mutex io_mutex;
  std::vector<int> codes(seeds.size(), 0);
  std::atomic<size_t> next{0};
  auto worker = [&] {
    for (size_t i = next.fetch_add(1); i < seeds.size();
         i = next.fetch_add(1)) {
      RunConfig cfg = base;
      cfg.seed = seeds[i];
      cfg.out_dir = base.out_dir + "/seed_" + std::to_string(seeds[i]);
      const int code = microtrain::cli::invoke(
          [&] { microtrain::cli::cmd_train(cfg, no_pretrain); });
      std::lock_guard<std::mutex> lock(io_mutex);
      std::cout << "[seed " << seeds[i] << "] exit " << code << "\n";
      codes[i] = code;
    }
  };
  std::vector<std::thread> pool;
  for (unsigned w = 0; w < workers; ++w) pool.emplace_back(worker);
  for (std::thread& t : pool) t.join();
  int worst = 0;
  for (int c : codes) worst = std::max(worst, c);
  return worst;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"desk-scale staged-plasticity training framework"};
  app.require_subcommand(1);

  std::string config_path, out_dir;
  uint64_t seed = 0;
  bool have_seed = false;
  app.add_option("--config", config_path, "flat key=value config file")
      ->expected(1);
  app.add_option_function<uint64_t>(
         "--seed", [&](uint64_t s) { seed = s; have_seed = true; },
         "override the run seed");
  app.add_option("--out", out_dir, "override the output directory");

  auto* gen = app.add_subcommand("gen-data", "generate a synthetic dataset");
  auto* pre = app.add_subcommand("pretrain", "pretext pretraining only");

  auto* tr = app.add_subcommand("train", "staged training run");
  bool no_pretrain = false;
  int epochs_override = -2;
  std::string init_checkpoint, seeds_range;
  tr->add_flag("--no-pretrain", no_pretrain, "skip backbone pretraining");
  tr->add_option("--epochs", epochs_override,
                 "cap total training epochs (0 skips training)");
  tr->add_option("--init", init_checkpoint,
                 "start from a saved checkpoint instead of pretraining");
  tr->add_option("--seeds", seeds_range,
                 "run a..b as independent parallel runs");

  auto* ev = app.add_subcommand("eval", "evaluate a checkpoint on a split");
  std::string checkpoint, data_dir, split = "test";
  ev->add_option("--checkpoint", checkpoint, "checkpoint file")->required();
  ev->add_option("--data", data_dir, "dataset directory")->required();
  ev->add_option("--split", split, "train|val|test");

  auto* rp = app.add_subcommand("report", "summarize a run directory");
  std::string run_dir;
  rp->add_option("--run", run_dir, "run directory with log.csv")->required();

  // let --config/--seed/--out appear after the subcommand
  for (CLI::App* sub : {gen, pre, tr, ev, rp}) sub->fallthrough();

  CLI11_PARSE(app, argc, argv);

  return microtrain::cli::invoke([&] {
    RunConfig cfg = load_config(config_path, have_seed ? &seed : nullptr,
                                out_dir);
    if (gen->parsed()) {
      microtrain::cli::cmd_gen_data(cfg);
    } else if (pre->parsed()) {
      microtrain::cli::cmd_pretrain(cfg);
    } else if (tr->parsed()) {
      if (epochs_override >= 0) cfg.epoch_cap = epochs_override;
      if (!init_checkpoint.empty()) cfg.init_checkpoint = init_checkpoint;
      if (!seeds_range.empty()) {
        const auto dots = seeds_range.find("..");
        if (dots == std::string::npos)
          throw ConfigError("--seeds expects a..b, got '" + seeds_range + "'");
        const uint64_t lo = std::stoull(seeds_range.substr(0, dots));
        const uint64_t hi = std::stoull(seeds_range.substr(dots + 2));
        if (hi < lo) throw ConfigError("--seeds range is empty");
        const int code = run_seed_range(cfg, no_pretrain, lo, hi);
        if (code != 0) throw std::runtime_error("a seed run failed");
        return;
      }
      microtrain::cli::cmd_train(cfg, no_pretrain);
    } else if (ev->parsed()) {
      const std::string out = out_dir.empty() ? "eval_out" : out_dir;
      microtrain::cli::cmd_eval(checkpoint, data_dir, split, out);
    } else if (rp->parsed()) {
      microtrain::cli::cmd_report(run_dir);
    }
  });
}
