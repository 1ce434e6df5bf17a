#pragma once

#include "anmf/adversarial.hpp"
#include "anmf/common.hpp"
#include "anmf/model_core.hpp"
#include "anmf/rng.hpp"

#include <cstdint>
#include <optional>
#include <span>
#include <vector>

namespace anmf {

enum class InitMode { exemplar, random };

/// Which term is passed through completely each epoch; the others are
/// under- or oversampled to the same number of batches.
enum class SampleAnchor { true_data, adversarial, supervised };

/// Family member selected by (tau_A, tau_S).
enum class Method { nmf, anmf, dnmf, danmf };

const char* to_string(Method m);
const char* to_string(InitMode m);
const char* to_string(SampleAnchor a);

/// Classifies a (tau_A, tau_S) pair: tau_S = 1 is DNMF, tau_S = 0 is NMF or
/// ANMF depending on tau_A, anything else is D+ANMF.
Method classify(double tau_A, double tau_S);

/// Hyperparameters of one training run.
struct TrainSpec {
  std::vector<Index> d{16};  ///< per source; a single entry applies to all
  double tau_A = 0.0;
  double tau_S = 0.0;
  std::vector<double> gamma;  ///< per source weight of the supervised term; empty = 1
  SparsityParams sparsity;
  int epochs = 200;
  Index batch_size = 100;
  std::uint64_t seed = 0;
  InitMode init = InitMode::exemplar;
  std::optional<Matrix> omega;     ///< explicit adversarial weights (S x S)
  std::optional<double> omega_mix; ///< residual weight of mixes, rest by counts
  std::optional<WeightModel> weight_model;  ///< default: equal deterministic weights
  SampleAnchor sample_anchor = SampleAnchor::true_data;
  SolverOptions test_solver;       ///< test-time separation iterations

  Method method() const { return classify(tau_A, tau_S); }
  Index latent_dim(int source) const;
  double gamma_of(int source) const;
  WeightModel weights_for(int sources) const;
  void validate(int sources) const;
};

/// All datasets of one training run. Terms with zero weight may be left empty.
struct TrainData {
  std::vector<Matrix> sources;              ///< weak supervision U_i
  std::vector<AdversarialSet> adversarial;  ///< Uhat_i
  std::vector<Matrix> supervised;           ///< strong supervision components
  Matrix supervised_mix;                    ///< their mixes

  int source_count() const;
  Index rows() const;
};

/// Assembles adversarial sets (when tau_A > 0) from the weak data and the
/// unlabelled mixes, with omega and beta taken from the spec.
TrainData make_train_data(std::vector<Matrix> sources, const Matrix& mixes, const TrainSpec& spec,
                          std::vector<Matrix> supervised = {}, Matrix supervised_mix = {});

/// How many gradient parts of each kind were computed.
struct TermCounters {
  std::size_t std_parts = 0;
  std::size_t adv_parts = 0;
  std::size_t sup_parts = 0;
};

struct TrainState {
  std::vector<Basis> bases;
  std::vector<Latents> latents_true;  ///< H_i
  std::vector<Latents> latents_adv;   ///< Hhat_i
  Latents latents_sup;                ///< stacked over sources
  int epoch = 0;
  Rng rng;                            ///< shared stream (supervised shuffles)
  std::vector<Rng> source_rngs;       ///< per-source streams
  std::vector<double> history;        ///< weighted objective; [0] is at initialization
  TermCounters counters;
};

/// Positive and negative parts of a basis gradient term.
struct GradParts {
  Matrix plus;
  Matrix minus;

  bool empty() const { return plus.size() == 0; }
};

/// plus = W H H^T / n, minus = U H^T / n.
GradParts grad_parts_std(const Matrix& W, const Matrix& U, const Latents& H, Index n);

/// plus = tau_A Uhat Hhat^T / nhat, minus = tau_A W Hhat Hhat^T / nhat. The data
/// product sits on the denominator side, opposite to the standard term.
GradParts grad_parts_adv(const Matrix& W, const Matrix& Uhat, const Latents& Hhat, double tau_A,
                         Index nhat);

/// plus = W Hsup Hsup^T / n_sup, minus = Usup Hsup^T / n_sup.
GradParts grad_parts_sup(const Matrix& W, const Matrix& Usup, const Latents& Hsup, Index n_sup);

/// W .* [(1-tau_S)(minus_std + minus_adv) + tau_S minus_sup]
///   ./ [(1-tau_S)(plus_std + plus_adv) + tau_S plus_sup + mu_W + eps].
/// Empty parts count as zero.
Matrix update_basis(const Matrix& W, const GradParts& std_parts, const GradParts& adv_parts,
                    const GradParts& sup_parts, double tau_S, double mu_W, double eps = kEps);

/// Seed of source i's basis initialization.
std::uint64_t init_seed(std::uint64_t master, int source);
/// Seed of source i's shuffling stream.
std::uint64_t shuffle_seed(std::uint64_t master, int source);

/// Bases and latents before the first epoch; history holds the initial objective.
TrainState initialize(const TrainData& data, const TrainSpec& spec);

/// One epoch of the stochastic multiplicative update.
void run_epoch(TrainState& state, const TrainData& data, const TrainSpec& spec);

/// Full stochastic multiplicative training: initialize, then spec.epochs epochs.
TrainState train_smu(const TrainData& data, const TrainSpec& spec);

struct Objective {
  std::vector<double> per_source;
  double weighted = 0.0;  ///< sum_i gamma_i F_i
};

Objective objective(const TrainState& state, const TrainData& data, const TrainSpec& spec);

struct SemiResult {
  Basis basis;           ///< fitted basis of the unseen source
  Latents latents;       ///< stacked latents of all sources on V
  std::vector<double> history;
};

/// Fits the basis of the last source from mixes V with the other bases frozen.
SemiResult train_semisupervised(const Matrix& V, std::span<const Basis> pretrained,
                                const TrainSpec& spec);

}  // namespace anmf
