#pragma once

#include "anmf/tuning.hpp"

#include <json.hpp>

#include <filesystem>
#include <optional>
#include <string>
#include <vector>

namespace anmf {

using Json = nlohmann::json;

enum class MetricKind { psnr, sisdr };

const char* to_string(MetricKind m);
MetricKind parse_metric(const std::string& name);

struct TuningBlock {
  SearchSpace space;
  int trials = 15;
  int folds = 5;
};

/// One experiment, read from JSON. Data paths are resolved against the
/// directory of the config file.
///
///   method          nmf | enmf | anmf | dnmf | danmf | semi
///   sources         weak data, one matrix file per source
///   mixes           unlabelled mixes (adversarial data; the fitting data for semi)
///   supervised      {"components": [...], "mixes": path}
///   pretrained      semi only: frozen bases of the other sources
///   train           TrainSpec fields
///   metric          psnr | sisdr, metric_weights, peak, clip_max
///   tuning          {"trials", "folds", "space": {name: {"log_uniform"|"uniform"|"choice": [...]}}}
struct ExperimentConfig {
  std::string method = "nmf";
  std::vector<std::filesystem::path> sources;
  std::optional<std::filesystem::path> mixes;
  std::vector<std::filesystem::path> supervised;
  std::optional<std::filesystem::path> supervised_mix;
  std::vector<std::filesystem::path> pretrained;
  TrainSpec train;
  MetricKind metric = MetricKind::psnr;
  std::vector<double> metric_weights;  ///< empty = equal weights 1/S
  double peak = 1.0;
  std::optional<double> clip_max;      ///< clamp estimates to [0, clip_max] after filtering
  std::optional<TuningBlock> tuning;

  /// Method and (tau_A, tau_S) must agree: nmf and semi have both zero, anmf
  /// tau_A > 0 and tau_S = 0, dnmf tau_S = 1, enmf zero epochs; danmf accepts
  /// any pair. Also checks that the data each active term needs is listed.
  void validate() const;
};

ExperimentConfig parse_config(const Json& j, const std::filesystem::path& base_dir);
ExperimentConfig load_config(const std::filesystem::path& path);

Json spec_to_json(const TrainSpec& spec);
/// Fields missing from j keep their values from base.
TrainSpec spec_from_json(const Json& j, TrainSpec base = {});

Json weight_model_to_json(const WeightModel& wm);
WeightModel weight_model_from_json(const Json& j);

SearchSpace search_space_from_json(const Json& j);

}  // namespace anmf
