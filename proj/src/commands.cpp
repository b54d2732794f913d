#include "microtrain/commands.hpp"

#include <algorithm>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>

#include "microtrain/errors.hpp"
#include "microtrain/kernels.hpp"
#include "microtrain/metrics.hpp"
#include "microtrain/trainer.hpp"

namespace microtrain::cli {

namespace fs = std::filesystem;

int invoke(const std::function<void()>& fn) {
  try {
    fn();
    return 0;
  } catch (const ConfigError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  } catch (const NumericError& e) {
    std::cerr << "numeric abort: " << e.what() << "\n";
    return 3;
  } catch (const std::invalid_argument& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  } catch (const std::runtime_error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "internal error: " << e.what() << "\n";
    return 1;
  }
}

std::string read_text_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ConfigError("cannot open: " + path);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void write_text_file(const std::string& path, const std::string& content) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw ConfigError("cannot write: " + path);
  out << content;
  if (!out) throw ConfigError("write failed: " + path);
}

void cmd_gen_data(const config::RunConfig& cfg) {
  const std::string target = cfg.data_dir.empty() ? cfg.out_dir : cfg.data_dir;
  if (target.empty()) throw ConfigError("gen-data: no output directory");
  std::error_code ec;
  fs::create_directories(target, ec);
  if (ec) throw ConfigError("gen-data: cannot create " + target + ": " + ec.message());

  const data::Dataset ds = data::generate(cfg.dataset_spec());
  data::write_split(target, "train", ds.train);
  data::write_split(target, "val", ds.val);
  data::write_split(target, "test", ds.test);

  config::RunConfig resolved = cfg;
  resolved.data_dir = target;
  write_text_file(target + "/config.resolved.cfg", config::serialize(resolved));
  std::cout << "gen-data: wrote " << ds.train.size() << "/" << ds.val.size()
            << "/" << ds.test.size() << " train/val/test samples to " << target
            << "\n";
}

namespace {

// alpha = N_neg / N from the (possibly noisy) training labels, kept away
// from the open-interval bounds.
double resolve_alpha(const config::RunConfig& cfg,
                     const std::vector<data::Sample>& train) {
  if (!cfg.alpha_auto) return cfg.alpha;
  long long n_neg = 0;
  for (const data::Sample& s : train) n_neg += s.label == 0;
  double a = static_cast<double>(n_neg) / static_cast<double>(train.size());
  return std::clamp(a, 0.01, 0.99);
}

std::unique_ptr<model::HybridModel> fresh_model(const config::RunConfig& cfg) {
  auto m = std::make_unique<model::HybridModel>(cfg.model_cfg);
  Rng init_rng(cfg.seed, "init");
  m->init_he(init_rng);
  return m;
}

double run_pretraining(model::HybridModel& m, const config::RunConfig& cfg) {
  const int holdout_n = 256;
  auto pretext = data::generate_pretext(cfg.pretrain_n + holdout_n, cfg.seed,
                                        cfg.model_cfg.in_h, cfg.model_cfg.in_w);
  std::vector<data::PretextSample> holdout(
      pretext.begin() + cfg.pretrain_n, pretext.end());
  pretext.resize(static_cast<size_t>(cfg.pretrain_n));
  return train::pretrain_backbone(m, pretext, holdout, cfg.pretrain_options());
}

}  // namespace

void cmd_pretrain(const config::RunConfig& cfg) {
  std::error_code ec;
  fs::create_directories(cfg.out_dir, ec);
  if (ec) throw ConfigError("pretrain: cannot create " + cfg.out_dir);
  auto m = fresh_model(cfg);
  const double acc = run_pretraining(*m, cfg);
  m->save_checkpoint_file(cfg.out_dir + "/pretrained.mtck");
  write_text_file(cfg.out_dir + "/config.resolved.cfg", config::serialize(cfg));
  std::cout << "pretrain: holdout orientation accuracy " << acc << ", saved "
            << cfg.out_dir << "/pretrained.mtck\n";
}

TrainSummary cmd_train(const config::RunConfig& cfg, bool no_pretrain) {
  if (cfg.data_dir.empty())
    throw ConfigError("train: data.dir is required (run gen-data first)");
  std::error_code ec;
  fs::create_directories(cfg.out_dir, ec);
  if (ec) throw ConfigError("train: cannot create " + cfg.out_dir);

  data::Dataset ds;
  ds.train = data::load_directory(cfg.data_dir,
                                  cfg.data_dir + "/manifest_train.csv",
                                  cfg.model_cfg.in_h, cfg.model_cfg.in_w);
  ds.val = data::load_directory(cfg.data_dir, cfg.data_dir + "/manifest_val.csv",
                                cfg.model_cfg.in_h, cfg.model_cfg.in_w);
  if (cfg.model_cfg.in_channels != 1)
    throw ConfigError("train: PGM datasets are single-channel but model wants " +
                      std::to_string(cfg.model_cfg.in_channels));

  std::unique_ptr<model::HybridModel> m;
  TrainSummary summary;
  if (!cfg.init_checkpoint.empty()) {
    m = model::HybridModel::load_checkpoint_file(cfg.init_checkpoint);
    if (m->config().str() != cfg.model_cfg.str())
      throw ConfigError("train: init checkpoint geometry '" +
                        m->config().str() + "' != configured '" +
                        cfg.model_cfg.str() + "'");
  } else {
    m = fresh_model(cfg);
    if (cfg.pretrain_enabled && !no_pretrain && cfg.pretrain_epochs > 0)
      summary.pretext_acc = run_pretraining(*m, cfg);
  }

  train::TrainOptions opt = cfg.train_options();
  opt.loss_cfg.alpha = resolve_alpha(cfg, ds.train);
  opt.checkpoint_path = cfg.out_dir + "/checkpoint_best.mtck";

  const train::TrainResult result = train::train(*m, ds, opt);

  write_text_file(cfg.out_dir + "/log.csv", train::log_csv(result.rows));
  write_text_file(cfg.out_dir + "/config.resolved.cfg", config::serialize(cfg));
  {
    std::ostringstream meta;
    meta << "wall_seconds = " << result.wall_seconds << "\n";
    meta << "kernel_isa = " << kernels::isa_name(kernels::active_isa()) << "\n";
    meta << "pretext_acc = " << summary.pretext_acc << "\n";
    meta << "best_epoch = " << result.best_epoch << "\n";
    meta << "best_val_auc = " << result.best_val_auc << "\n";
    write_text_file(cfg.out_dir + "/run_meta.txt", meta.str());
  }

  summary.epochs = static_cast<int>(result.rows.size());
  summary.best_epoch = result.best_epoch;
  summary.best_val_auc = result.best_val_auc;
  summary.wall_seconds = result.wall_seconds;
  std::cout << "train: " << summary.epochs << " epochs, best val AUC "
            << summary.best_val_auc << " at epoch " << summary.best_epoch
            << " (" << result.wall_seconds << " s, "
            << kernels::isa_name(kernels::active_isa()) << " kernels), run dir "
            << cfg.out_dir << "\n";
  return summary;
}

void cmd_eval(const std::string& checkpoint_path, const std::string& data_dir,
              const std::string& split, const std::string& out_dir) {
  auto m = model::HybridModel::load_checkpoint_file(checkpoint_path);
  if (m->config().in_channels != 1)
    throw ConfigError("eval: PGM datasets are single-channel but model wants " +
                      std::to_string(m->config().in_channels));
  const auto samples =
      data::load_directory(data_dir, data_dir + "/manifest_" + split + ".csv",
                           m->config().in_h, m->config().in_w);
  if (samples.empty()) throw ConfigError("eval: empty split " + split);

  std::vector<int> labels;
  for (const data::Sample& s : samples) labels.push_back(s.label);
  const std::vector<double> probs = train::predict_probs(*m, samples, 64);

  const metrics::EvalReport report = metrics::evaluate(labels, probs, 0.5);
  std::error_code ec;
  fs::create_directories(out_dir, ec);
  if (ec) throw ConfigError("eval: cannot create " + out_dir);
  write_text_file(out_dir + "/report.txt", metrics::report_kv(report));
  write_text_file(out_dir + "/report.csv", metrics::report_csv(report));
  write_text_file(out_dir + "/confusion.csv", metrics::confusion_csv(report.cm));
  write_text_file(out_dir + "/roc.svg",
                  metrics::roc_svg(metrics::roc_points(labels, probs)));
  std::cout << "eval: " << samples.size() << " samples, wrote report to "
            << out_dir << "\n"
            << metrics::report_kv(report);
}

namespace {

std::string curves_svg(const std::vector<train::TrainLogRow>& rows) {
  const double x0 = 50, y0 = 440, x1 = 600, y1 = 40;
  const int n = static_cast<int>(rows.size());
  double lr_max = 0.0;
  for (const auto& r : rows) lr_max = std::max(lr_max, r.lr);
  if (lr_max <= 0.0) lr_max = 1.0;

  auto sx = [&](int i) {
    return n == 1 ? (x0 + x1) / 2
                  : x0 + (x1 - x0) * static_cast<double>(i) / (n - 1);
  };
  auto sy = [&](double v) { return y0 + (y1 - y0) * v; };

  std::ostringstream os;
  os << "<svg xmlns=\"http://www.w3.org/2000/svg\" viewBox=\"0 0 640 480\">\n";
  os << "  <rect width=\"640\" height=\"480\" fill=\"white\"/>\n";
  os << "  <line x1=\"" << x0 << "\" y1=\"" << y0 << "\" x2=\"" << x1
     << "\" y2=\"" << y0 << "\" stroke=\"black\"/>\n";
  os << "  <line x1=\"" << x0 << "\" y1=\"" << y0 << "\" x2=\"" << x0
     << "\" y2=\"" << y1 << "\" stroke=\"black\"/>\n";
  struct Series {
    const char* label;
    const char* color;
    std::function<double(const train::TrainLogRow&)> get;
  };
  const Series series[3] = {
      {"val_acc", "#2980b9", [](const auto& r) { return r.val_acc; }},
      {"val_auc", "#27ae60", [](const auto& r) { return r.val_auc; }},
      {"lr/lr_max", "#c0392b", [&](const auto& r) { return r.lr / lr_max; }},
  };
  char buf[96];
  for (int s = 0; s < 3; ++s) {
    if (n > 1) {
      os << "  <polyline fill=\"none\" stroke=\"" << series[s].color
         << "\" stroke-width=\"2\" points=\"";
      for (int i = 0; i < n; ++i) {
        std::snprintf(buf, sizeof buf, "%.2f,%.2f ", sx(i),
                      sy(series[s].get(rows[static_cast<size_t>(i)])));
        os << buf;
      }
      os << "\"/>\n";
    }
    for (int i = 0; i < n; ++i) {
      std::snprintf(buf, sizeof buf,
                    "  <circle cx=\"%.2f\" cy=\"%.2f\" r=\"3\" fill=\"%s\"/>\n",
                    sx(i), sy(series[s].get(rows[static_cast<size_t>(i)])),
                    series[s].color);
      os << buf;
    }
    os << "  <text x=\"" << 470 + 0 * s << "\" y=\"" << 60 + 18 * s
       << "\" font-size=\"13\" fill=\"" << series[s].color << "\">"
       << series[s].label << "</text>\n";
  }
  os << "</svg>\n";
  return os.str();
}

}  // namespace

void cmd_report(const std::string& run_dir) {
  const auto rows = train::parse_log_csv(read_text_file(run_dir + "/log.csv"));
  if (rows.empty()) throw ConfigError("report: log has no rows in " + run_dir);

  int best = 0;
  for (size_t i = 1; i < rows.size(); ++i)
    if (rows[i].val_auc > rows[static_cast<size_t>(best)].val_auc)
      best = static_cast<int>(i);
  const train::TrainLogRow& b = rows[static_cast<size_t>(best)];
  const train::TrainLogRow& last = rows.back();

  std::string wall = "n/a";
  try {
    const std::string meta = read_text_file(run_dir + "/run_meta.txt");
    std::istringstream ms(meta);
    std::string line;
    while (std::getline(ms, line))
      if (line.rfind("wall_seconds = ", 0) == 0) wall = line.substr(15);
  } catch (const ConfigError&) {
  }

  std::ostringstream os;
  os << "epochs = " << rows.size() << "\n";
  os << "best_epoch = " << b.epoch << "\n";
  os << "best_val_auc = " << b.val_auc << "\n";
  os << "best_val_acc = " << b.val_acc << "\n";
  os << "final_epoch = " << last.epoch << "\n";
  os << "final_stage = " << train::stage_name(last.stage) << "\n";
  os << "final_val_auc = " << last.val_auc << "\n";
  os << "final_val_acc = " << last.val_acc << "\n";
  os << "wall_seconds = " << wall << "\n";
  write_text_file(run_dir + "/summary.txt", os.str());
  write_text_file(run_dir + "/curves.svg", curves_svg(rows));
  std::cout << "report: wrote summary.txt and curves.svg to " << run_dir
            << "\n"
            << os.str();
}

}  // namespace microtrain::cli
