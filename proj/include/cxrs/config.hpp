#pragma once

#include <cstdint>
#include <cstdlib>
#include <fstream>
#include <set>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "cxrs/augment.hpp"
#include "cxrs/dataset.hpp"
#include "cxrs/error.hpp"
#include "cxrs/eval.hpp"
#include "cxrs/nn.hpp"
#include "cxrs/train.hpp"

namespace cxrs {

namespace detail {

inline void reject_unknown_keys(const nlohmann::json& obj, const std::set<std::string>& allowed,
                                const std::string& context) {
  if (!obj.is_object()) throw ConfigError(context + " must be a JSON object");
  std::string offenders;
  for (const auto& [key, value] : obj.items()) {
    if (!allowed.count(key)) offenders += (offenders.empty() ? "" : ", ") + key;
  }
  if (!offenders.empty()) {
    throw ConfigError("unknown key(s) in " + context + ": " + offenders);
  }
}

template <typename T>
void read_field(const nlohmann::json& obj, const char* key, T& out, const std::string& context) {
  if (!obj.contains(key)) return;
  try {
    out = obj.at(key).get<T>();
  } catch (const nlohmann::json::exception&) {
    throw ConfigError(context + "." + key + " has the wrong type");
  }
}

}  // namespace detail

inline nlohmann::ordered_json network_to_json(const NetworkConfig& cfg) {
  nlohmann::ordered_json j;
  j["input_height"] = cfg.input_height;
  j["input_width"] = cfg.input_width;
  j["stem_channels"] = cfg.stem_channels;
  nlohmann::ordered_json stages = nlohmann::ordered_json::array();
  for (const auto& s : cfg.stages) {
    stages.push_back({{"blocks", s.blocks}, {"channels", s.channels},
                      {"pool_before", s.pool_before}});
  }
  j["stages"] = std::move(stages);
  nlohmann::ordered_json skips = nlohmann::ordered_json::array();
  for (const auto& [src, dst] : cfg.skip_map) skips.push_back({src, dst});
  j["skip_map"] = std::move(skips);
  j["head_hidden"] = cfg.head_hidden;
  return j;
}

inline NetworkConfig network_from_json(const nlohmann::json& j) {
  detail::reject_unknown_keys(j, {"input_height", "input_width", "stem_channels", "stages",
                                  "skip_map", "head_hidden"},
                              "network");
  NetworkConfig cfg;
  detail::read_field(j, "input_height", cfg.input_height, "network");
  detail::read_field(j, "input_width", cfg.input_width, "network");
  detail::read_field(j, "stem_channels", cfg.stem_channels, "network");
  detail::read_field(j, "head_hidden", cfg.head_hidden, "network");
  if (j.contains("stages")) {
    if (!j.at("stages").is_array()) throw ConfigError("network.stages must be an array");
    cfg.stages.clear();
    for (const auto& sj : j.at("stages")) {
      detail::reject_unknown_keys(sj, {"blocks", "channels", "pool_before"}, "network.stages[]");
      StageConfig stage;
      detail::read_field(sj, "blocks", stage.blocks, "network.stages[]");
      detail::read_field(sj, "channels", stage.channels, "network.stages[]");
      detail::read_field(sj, "pool_before", stage.pool_before, "network.stages[]");
      cfg.stages.push_back(stage);
    }
  }
  if (j.contains("skip_map")) {
    if (!j.at("skip_map").is_array()) throw ConfigError("network.skip_map must be an array");
    cfg.skip_map.clear();
    for (const auto& pair : j.at("skip_map")) {
      if (!pair.is_array() || pair.size() != 2) {
        throw ConfigError("network.skip_map entries must be [source, destination] pairs");
      }
      try {
        cfg.skip_map.emplace_back(pair[0].get<std::size_t>(), pair[1].get<std::size_t>());
      } catch (const nlohmann::json::exception&) {
        throw ConfigError("network.skip_map entries must hold block indices");
      }
    }
  }
  return cfg;
}

// One experiment file configures the whole pipeline. Every key is optional
// (module defaults apply); unknown keys are rejected rather than ignored.
struct ExperimentConfig {
  std::uint64_t seed = 7;
  std::string target = "both";  // geographic | opacity | both
  PreprocessConfig preprocess;
  AugmentConfig augment;
  NetworkConfig network;
  TrainingConfig training;
  SplitSpec split;

  ExperimentConfig() {
    // Shipped defaults run the full synthetic workflow in minutes on one
    // core; see configs/full_resolution.json for the 224x224 profile.
    network.input_height = 64;
    network.input_width = 64;
    preprocess.target_height = 64;
    preprocess.target_width = 64;
    training.epochs = 40;
    training.optimizer.lr = 1e-3;
    split.n_trials = 50;
    // Gentler perturbations than the full-resolution recipe: strong cutout
    // and intensity shifts mangle the area/brightness signal the targets
    // are defined by, which matters at this image scale.
    augment.max_translate_frac = 0.05;
    augment.max_rotate_deg = 5.0;
    augment.zoom_lo = 0.95;
    augment.zoom_hi = 1.05;
    augment.max_intensity_shift = 0.02;
    augment.cutout_frac = 0.08;
    augment.noise_sigma = 0.01;
  }

  std::vector<TargetKind> targets() const {
    if (target == "geographic") return {TargetKind::kGeographic};
    if (target == "opacity") return {TargetKind::kOpacity};
    if (target == "both") return {TargetKind::kGeographic, TargetKind::kOpacity};
    throw ConfigError("target must be geographic, opacity, or both, got '" + target + "'");
  }

  void validate() const {
    targets();
    preprocess.validate();
    augment.validate();
    infer_block_shapes(network);
    training.validate();
    split.validate();
    if (preprocess.target_height != network.input_height ||
        preprocess.target_width != network.input_width) {
      throw ConfigError("preprocess target size must equal the network input size");
    }
  }

  // Seeds resolved: the master seed drives splits and, through per-trial
  // derivation, initialization, shuffling, and augmentation.
  SplitSpec resolved_split() const {
    SplitSpec s = split;
    s.seed = seed;
    return s;
  }

  TrainingConfig resolved_training() const {
    TrainingConfig t = training;
    t.augment = augment;
    t.seed = seed;
    return t;
  }
};

inline ExperimentConfig experiment_from_json(const nlohmann::json& j) {
  detail::reject_unknown_keys(
      j, {"seed", "target", "preprocess", "augment", "network", "training", "split"},
      "config");
  ExperimentConfig cfg;
  detail::read_field(j, "seed", cfg.seed, "config");
  detail::read_field(j, "target", cfg.target, "config");

  if (j.contains("preprocess")) {
    const auto& p = j.at("preprocess");
    detail::reject_unknown_keys(p, {"crop_fraction", "target_height", "target_width"},
                                "preprocess");
    detail::read_field(p, "crop_fraction", cfg.preprocess.crop_fraction, "preprocess");
    detail::read_field(p, "target_height", cfg.preprocess.target_height, "preprocess");
    detail::read_field(p, "target_width", cfg.preprocess.target_width, "preprocess");
  }
  if (j.contains("augment")) {
    const auto& a = j.at("augment");
    detail::reject_unknown_keys(a,
                                {"max_translate_frac", "max_rotate_deg", "hflip_prob", "zoom_lo",
                                 "zoom_hi", "max_intensity_shift", "cutout_frac", "noise_sigma"},
                                "augment");
    detail::read_field(a, "max_translate_frac", cfg.augment.max_translate_frac, "augment");
    detail::read_field(a, "max_rotate_deg", cfg.augment.max_rotate_deg, "augment");
    detail::read_field(a, "hflip_prob", cfg.augment.hflip_prob, "augment");
    detail::read_field(a, "zoom_lo", cfg.augment.zoom_lo, "augment");
    detail::read_field(a, "zoom_hi", cfg.augment.zoom_hi, "augment");
    detail::read_field(a, "max_intensity_shift", cfg.augment.max_intensity_shift, "augment");
    detail::read_field(a, "cutout_frac", cfg.augment.cutout_frac, "augment");
    detail::read_field(a, "noise_sigma", cfg.augment.noise_sigma, "augment");
  }
  if (j.contains("network")) cfg.network = network_from_json(j.at("network"));
  if (j.contains("training")) {
    const auto& t = j.at("training");
    detail::reject_unknown_keys(t, {"epochs", "batch_size", "lr", "augment_enabled"},
                                "training");
    detail::read_field(t, "epochs", cfg.training.epochs, "training");
    detail::read_field(t, "batch_size", cfg.training.batch_size, "training");
    detail::read_field(t, "lr", cfg.training.optimizer.lr, "training");
    detail::read_field(t, "augment_enabled", cfg.training.augment_enabled, "training");
  }
  if (j.contains("split")) {
    const auto& s = j.at("split");
    detail::reject_unknown_keys(s, {"train_fraction", "n_trials", "strat_bins"}, "split");
    detail::read_field(s, "train_fraction", cfg.split.train_fraction, "split");
    detail::read_field(s, "n_trials", cfg.split.n_trials, "split");
    detail::read_field(s, "strat_bins", cfg.split.strat_bins, "split");
  }
  cfg.validate();
  return cfg;
}

inline nlohmann::ordered_json experiment_to_json(const ExperimentConfig& cfg) {
  nlohmann::ordered_json j;
  j["seed"] = cfg.seed;
  j["target"] = cfg.target;
  j["preprocess"] = {{"crop_fraction", cfg.preprocess.crop_fraction},
                     {"target_height", cfg.preprocess.target_height},
                     {"target_width", cfg.preprocess.target_width}};
  j["augment"] = {{"max_translate_frac", cfg.augment.max_translate_frac},
                  {"max_rotate_deg", cfg.augment.max_rotate_deg},
                  {"hflip_prob", cfg.augment.hflip_prob},
                  {"zoom_lo", cfg.augment.zoom_lo},
                  {"zoom_hi", cfg.augment.zoom_hi},
                  {"max_intensity_shift", cfg.augment.max_intensity_shift},
                  {"cutout_frac", cfg.augment.cutout_frac},
                  {"noise_sigma", cfg.augment.noise_sigma}};
  j["network"] = network_to_json(cfg.network);
  j["training"] = {{"epochs", cfg.training.epochs},
                   {"batch_size", cfg.training.batch_size},
                   {"lr", cfg.training.optimizer.lr},
                   {"augment_enabled", cfg.training.augment_enabled}};
  j["split"] = {{"train_fraction", cfg.split.train_fraction},
                {"n_trials", cfg.split.n_trials},
                {"strat_bins", cfg.split.strat_bins}};
  return j;
}

inline ExperimentConfig load_experiment_config(const std::string& path) {
  std::ifstream f(path);
  if (!f) throw IoError("cannot open config file '" + path + "'");
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(f);
  } catch (const nlohmann::json::parse_error& e) {
    throw ConfigError("config file '" + path + "' is not valid JSON: " + e.what());
  }
  return experiment_from_json(j);
}

// CXRS_SEED overrides the config seed across all commands.
inline void apply_env_seed(ExperimentConfig& cfg) {
  const char* env = std::getenv("CXRS_SEED");
  if (env == nullptr || *env == '\0') return;
  char* end = nullptr;
  const unsigned long long value = std::strtoull(env, &end, 10);
  if (end == env || *end != '\0') {
    throw ConfigError("CXRS_SEED must be an unsigned integer, got '" + std::string(env) + "'");
  }
  cfg.seed = static_cast<std::uint64_t>(value);
}

}  // namespace cxrs
