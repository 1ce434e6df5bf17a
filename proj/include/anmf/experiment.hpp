#pragma once

#include "anmf/config.hpp"
#include "anmf/io.hpp"
#include "anmf/separator.hpp"
#include "anmf/trainer.hpp"

#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <vector>

namespace anmf {

/// Trained bases plus the spec and history that produced them. Stored as a
/// directory holding manifest.json and basis_<i>.anmf matrix files.
struct ModelBundle {
  std::string method = "nmf";
  std::vector<Basis> bases;
  TrainSpec spec;
  std::vector<double> history;

  Index rows() const { return bases.empty() ? 0 : bases.front().rows(); }
  int sources() const { return static_cast<int>(bases.size()); }
};

void save_bundle(const std::filesystem::path& dir, const ModelBundle& bundle);
/// Checks that every basis file matches the dimensions in the manifest.
ModelBundle load_bundle(const std::filesystem::path& dir);

/// Reads a non-negative data matrix: IDX image files (".idx" or "-ubyte"
/// names) or matrix files.
Matrix load_data(const std::filesystem::path& path, NegativePolicy policy);

struct ExperimentData {
  std::vector<Matrix> sources;
  Matrix mixes;
  std::vector<Matrix> supervised;
  Matrix supervised_mix;
  std::vector<Basis> pretrained;
};

ExperimentData load_experiment_data(const ExperimentConfig& cfg, NegativePolicy policy);

/// Trains the configured method with the given spec. supervised_cols restricts
/// the strong-supervision set to those columns (all when empty).
ModelBundle train_model(const ExperimentConfig& cfg, const TrainSpec& spec,
                        const ExperimentData& data, std::span<const Index> supervised_cols = {});

/// Separates V with the bundle and returns the filtered estimates, clamped to
/// [0, clip_max] when given.
std::vector<Matrix> estimate_sources(const ModelBundle& bundle, const Matrix& V,
                                     std::optional<double> clip_max = std::nullopt);

/// S x N matrix of per-column scores (psnr against `peak`, or si_sdr).
Matrix score_columns(std::span<const Matrix> estimates, std::span<const Matrix> references,
                     MetricKind metric, double peak = 1.0);

/// Per-column weighted sum of capped scores; equal weights 1/S when empty.
std::vector<double> weighted_column_scores(const Matrix& scores, std::span<const double> weights);

/// Tuning objective: trains on the weak data plus the fold's supervised
/// training columns, separates the fold's validation mixes and returns the
/// median weighted score.
TrialObjective make_trial_objective(const ExperimentConfig& cfg, const ExperimentData& data);

}  // namespace anmf
