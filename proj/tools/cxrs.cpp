// Command-line front end: demographic summaries, cross-validated training
// runs, single-model training, prediction, and scatter export.
#include <atomic>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>
#include <mutex>
#include <string>
#include <thread>
#include <vector>

#include "CLI11.hpp"
#include "cxrs/cxrs.hpp"

namespace fs = std::filesystem;

namespace {

using namespace cxrs;

constexpr int kExitOk = 0;
constexpr int kExitUsage = 2;
constexpr int kExitRuntime = 3;
constexpr int kExitIo = 4;

int run_guarded(const std::function<void()>& body) {
  try {
    body();
    return kExitOk;
  } catch (const IoError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitIo;
  } catch (const TrainingError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitRuntime;
  } catch (const AggregationError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitRuntime;
  } catch (const StateError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitRuntime;
  } catch (const Error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitUsage;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitRuntime;
  }
}

struct CommonOptions {
  std::string config_path;
  std::string data_dir;
  std::size_t synthetic = 0;
};

ExperimentConfig load_config(const CommonOptions& opts) {
  ExperimentConfig cfg =
      opts.config_path.empty() ? ExperimentConfig{} : load_experiment_config(opts.config_path);
  apply_env_seed(cfg);
  cfg.validate();
  return cfg;
}

std::vector<CxrRecord> load_records(const CommonOptions& opts, const ExperimentConfig& cfg) {
  if ((opts.synthetic > 0) == !opts.data_dir.empty()) {
    throw ConfigError("provide exactly one of --data or --synthetic");
  }
  if (opts.synthetic > 0) {
    return generate_synthetic(opts.synthetic, cfg.seed,
                              static_cast<std::size_t>(cfg.network.input_width),
                              static_cast<std::size_t>(cfg.network.input_height));
  }
  const fs::path dir(opts.data_dir);
  std::vector<std::string> warnings;
  auto records = load_dataset((dir / "metadata.csv").string(), (dir / "images").string(),
                              cfg.preprocess, &warnings);
  for (const auto& w : warnings) std::cerr << "warning: " << w << "\n";
  return records;
}

void cmd_summarize(const std::string& metadata_path, const std::string& json_path) {
  const auto rows = load_metadata(metadata_path);
  const auto records = group_records(rows);
  const auto summary = summarize(records);
  std::cout << summary.to_text();
  if (!json_path.empty()) {
    std::ofstream f(json_path, std::ios::trunc);
    if (!f) throw IoError("cannot open '" + json_path + "' for writing");
    f << summary.to_json().dump(2) << "\n";
    if (!f) throw IoError("short write to '" + json_path + "'");
  }
}

std::vector<TrialResult> run_all_trials(const std::vector<CxrRecord>& records,
                                        const ExperimentConfig& cfg, TargetKind kind,
                                        const SplitSpec& spec, std::size_t parallel) {
  std::vector<TrialResult> trials(spec.n_trials);
  std::atomic<std::size_t> next{0};
  std::mutex log_mutex;
  auto worker = [&]() {
    for (std::size_t t = next.fetch_add(1); t < spec.n_trials; t = next.fetch_add(1)) {
      trials[t] = run_trial(records, cfg.network, cfg.resolved_training(), kind, spec, t);
      std::lock_guard<std::mutex> lock(log_mutex);
      if (trials[t].failed) {
        std::cerr << to_string(kind) << " trial " << t << ": failed (" << trials[t].error
                  << ")\n";
      } else {
        char line[96];
        std::snprintf(line, sizeof(line), "%s trial %zu: r2=%.4f", to_string(kind), t,
                      trials[t].r2);
        std::cerr << line << "\n";
      }
    }
  };

  const std::size_t n_workers = std::max<std::size_t>(1, std::min(parallel, spec.n_trials));
  if (n_workers == 1) {
    worker();
  } else {
    std::vector<std::thread> pool;
    for (std::size_t i = 0; i < n_workers; ++i) pool.emplace_back(worker);
    for (auto& th : pool) th.join();
  }
  return trials;
}

void cmd_crossval(const CommonOptions& opts, const std::string& out_dir, std::size_t trials,
                  std::size_t parallel, const std::string& target) {
  ExperimentConfig cfg = load_config(opts);
  if (!target.empty()) cfg.target = target;
  if (trials > 0) cfg.split.n_trials = trials;
  cfg.validate();

  const auto records = load_records(opts, cfg);
  fs::create_directories(out_dir);

  nlohmann::ordered_json report_json;
  report_json["config"] = experiment_to_json(cfg);
  report_json["dataset_size"] = records.size();
  nlohmann::ordered_json targets_json;

  const SplitSpec spec = cfg.resolved_split();
  for (TargetKind kind : cfg.targets()) {
    auto trial_results = run_all_trials(records, cfg, kind, spec, parallel);
    const CvReport report = aggregate(kind, std::move(trial_results));
    targets_json[to_string(kind)] = report_to_json(report, spec);

    const fs::path csv = fs::path(out_dir) / (std::string("scatter_") + to_string(kind) + ".csv");
    const fs::path svg = fs::path(out_dir) / (std::string("scatter_") + to_string(kind) + ".svg");
    export_scatter(report, csv.string());
    export_scatter_svg(report, svg.string());

    char line[128];
    std::snprintf(line, sizeof(line), "%s: r2 = %.4f +/- %.4f (best %.4f, trial %zu)",
                  to_string(kind), report.r2_mean, report.r2_std, report.best_trial().r2,
                  report.best_trial_index);
    std::cout << line << "\n";
  }
  report_json["targets"] = std::move(targets_json);

  const fs::path report_path = fs::path(out_dir) / "report.json";
  std::ofstream f(report_path, std::ios::trunc | std::ios::binary);
  if (!f) throw IoError("cannot open '" + report_path.string() + "' for writing");
  f << report_json.dump(2) << "\n";
  if (!f) throw IoError("short write to '" + report_path.string() + "'");
  std::cout << "report written to " << report_path.string() << "\n";
}

void cmd_train(const CommonOptions& opts, const std::string& target, const std::string& out_path,
               const std::string& from_path) {
  ExperimentConfig cfg = load_config(opts);
  if (!target.empty()) cfg.target = target;
  const auto kinds = cfg.targets();
  if (kinds.size() != 1) {
    throw ConfigError("train fits one model per target; pass --target geographic or opacity");
  }
  const TargetKind kind = kinds.front();
  const auto records = load_records(opts, cfg);

  SeverityNet net(cfg.network, derive_seed(cfg.seed, 1));
  if (!from_path.empty()) {
    const Checkpoint ckpt = load_checkpoint(from_path);
    Rng init_rng(derive_seed(cfg.seed, 3));
    const TransferReport transfer = apply_checkpoint(net, ckpt, /*strict=*/false, init_rng);
    std::cout << "transfer: " << transfer.loaded.size() << " tensors loaded, "
              << transfer.initialized.size() << " freshly initialized\n";
  }

  std::vector<const CxrRecord*> refs;
  refs.reserve(records.size());
  for (const auto& rec : records) refs.push_back(&rec);
  TrainingConfig training = cfg.resolved_training();
  training.seed = derive_seed(cfg.seed, 2);
  const TrainStats stats = train_model(net, refs, kind, training);

  nlohmann::ordered_json meta;
  meta["target"] = to_string(kind);
  meta["network"] = network_to_json(cfg.network);
  meta["preprocess"] = {{"crop_fraction", cfg.preprocess.crop_fraction},
                        {"target_height", cfg.preprocess.target_height},
                        {"target_width", cfg.preprocess.target_width}};
  meta["seed"] = cfg.seed;
  meta["epochs"] = training.epochs;
  save_checkpoint(net, meta, out_path);

  char line[128];
  std::snprintf(line, sizeof(line), "trained %s model: %zu steps, final epoch loss %.6f",
                to_string(kind), stats.steps, stats.final_epoch_loss);
  std::cout << line << "\n" << "checkpoint written to " << out_path << "\n";
}

void cmd_predict(const std::string& image_path, const std::string& checkpoint_path) {
  const Checkpoint ckpt = load_checkpoint(checkpoint_path);
  if (!ckpt.metadata.contains("network") || !ckpt.metadata.contains("target")) {
    throw FormatError("checkpoint metadata lacks the network description or target kind");
  }
  const NetworkConfig net_config = network_from_json(ckpt.metadata.at("network"));
  const TargetKind kind = target_kind_from_string(ckpt.metadata.at("target").get<std::string>());

  SeverityNet net(net_config, 0);
  Rng rng(0);
  apply_checkpoint(net, ckpt, /*strict=*/true, rng);

  PreprocessConfig pre;
  pre.target_height = static_cast<int>(net_config.input_height);
  pre.target_width = static_cast<int>(net_config.input_width);
  if (ckpt.metadata.contains("preprocess")) {
    const auto& p = ckpt.metadata.at("preprocess");
    if (p.contains("crop_fraction")) pre.crop_fraction = p.at("crop_fraction").get<double>();
  }
  pre.validate();

  const Image raw_image = load_png(image_path);
  const Image input = preprocess_image(raw_image, pre);
  const double raw = net.predict(input);

  char line[96];
  std::snprintf(line, sizeof(line), "%s: raw=%.3f score=%.1f/%d", to_string(kind), raw,
                raw * max_total(kind), max_total(kind));
  std::cout << line << "\n";
}

void cmd_export_scatter(const std::string& report_path, const std::string& target,
                        const std::string& out_path, const std::string& svg_path) {
  std::ifstream f(report_path);
  if (!f) throw IoError("cannot open report '" + report_path + "'");
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(f);
  } catch (const nlohmann::json::parse_error& e) {
    throw FormatError("report is not valid JSON: " + std::string(e.what()));
  }
  const TargetKind kind = target_kind_from_string(target);
  if (!j.contains("targets") || !j.at("targets").contains(to_string(kind))) {
    throw FormatError("report has no '" + target + "' section");
  }
  const auto& section = j.at("targets").at(to_string(kind));
  if (!section.contains("best_scatter")) {
    throw FormatError("report section lacks best_scatter pairs");
  }
  std::vector<std::pair<double, double>> scatter;
  for (const auto& pair : section.at("best_scatter")) {
    if (!pair.is_array() || pair.size() != 2) {
      throw FormatError("best_scatter entries must be [predicted, radiologist] pairs");
    }
    scatter.emplace_back(pair[0].get<double>(), pair[1].get<double>());
  }
  export_scatter_pairs(scatter, kind, out_path);
  if (!svg_path.empty()) {
    export_scatter_svg_pairs(scatter, kind, section.value("best_r2", 0.0),
                             section.value("best_trial_index", std::size_t{0}), svg_path);
  }
  std::cout << "scatter written to " << out_path << "\n";
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Chest x-ray severity scoring pipeline"};
  app.require_subcommand(1);

  auto* summarize_cmd = app.add_subcommand("summarize", "Print a demographic summary table");
  std::string metadata_path, summary_json;
  summarize_cmd->add_option("--metadata", metadata_path, "Metadata CSV path")->required();
  summarize_cmd->add_option("--json", summary_json, "Also write the summary as JSON");

  CommonOptions cv_opts;
  std::string cv_out = "crossval_out", cv_target;
  std::size_t cv_trials = 0, cv_parallel = 1;
  auto* crossval_cmd =
      app.add_subcommand("crossval", "Stratified Monte Carlo cross-validated training");
  crossval_cmd->add_option("--config", cv_opts.config_path, "Experiment config JSON");
  crossval_cmd->add_option("--data", cv_opts.data_dir,
                           "Dataset directory (metadata.csv + images/)");
  crossval_cmd->add_option("--synthetic", cv_opts.synthetic,
                           "Generate N synthetic records instead of loading data");
  crossval_cmd->add_option("--out", cv_out, "Output directory for report and scatter files");
  crossval_cmd->add_option("--trials", cv_trials, "Override the number of trials");
  crossval_cmd->add_option("--parallel", cv_parallel, "Worker threads across trials");
  crossval_cmd->add_option("--target", cv_target, "geographic | opacity | both");

  CommonOptions train_opts;
  std::string train_target, train_out = "model.ckpt", train_from;
  auto* train_cmd = app.add_subcommand("train", "Train one model on the full dataset");
  train_cmd->add_option("--config", train_opts.config_path, "Experiment config JSON");
  train_cmd->add_option("--data", train_opts.data_dir,
                        "Dataset directory (metadata.csv + images/)");
  train_cmd->add_option("--synthetic", train_opts.synthetic,
                        "Generate N synthetic records instead of loading data");
  train_cmd->add_option("--target", train_target, "geographic | opacity");
  train_cmd->add_option("--out", train_out, "Checkpoint output path");
  train_cmd->add_option("--from", train_from, "Warm-start checkpoint for transfer");

  std::string predict_image, predict_ckpt;
  auto* predict_cmd = app.add_subcommand("predict", "Score one image with a trained model");
  predict_cmd->add_option("--image", predict_image, "PNG image path")->required();
  predict_cmd->add_option("--checkpoint", predict_ckpt, "Checkpoint path")->required();

  std::string exp_report, exp_target = "geographic", exp_out, exp_svg;
  auto* export_cmd =
      app.add_subcommand("export-scatter", "Re-emit scatter CSV/SVG from a report");
  export_cmd->add_option("--report", exp_report, "report.json from crossval")->required();
  export_cmd->add_option("--target", exp_target, "geographic | opacity");
  export_cmd->add_option("--out", exp_out, "CSV output path")->required();
  export_cmd->add_option("--svg", exp_svg, "Optional SVG output path");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    if (e.get_exit_code() == 0) return app.exit(e);  // --help
    app.exit(e);
    return kExitUsage;
  }

  if (summarize_cmd->parsed()) {
    return run_guarded([&] { cmd_summarize(metadata_path, summary_json); });
  }
  if (crossval_cmd->parsed()) {
    return run_guarded(
        [&] { cmd_crossval(cv_opts, cv_out, cv_trials, cv_parallel, cv_target); });
  }
  if (train_cmd->parsed()) {
    return run_guarded([&] { cmd_train(train_opts, train_target, train_out, train_from); });
  }
  if (predict_cmd->parsed()) {
    return run_guarded([&] { cmd_predict(predict_image, predict_ckpt); });
  }
  if (export_cmd->parsed()) {
    return run_guarded([&] { cmd_export_scatter(exp_report, exp_target, exp_out, exp_svg); });
  }
  return kExitUsage;
}
