#include "anmf/mixing.hpp"

#include "anmf/rng.hpp"

#include <cmath>

namespace anmf {

Mixture mix_synthetic(std::span<const Matrix> sources, const WeightModel& wm,
                      std::optional<double> snr_db, std::uint64_t seed) {
  if (sources.empty()) throw Error("mix_synthetic: no sources");
  for (const auto& s : sources) {
    require_same_shape("mix_synthetic", "source", s, "first source", sources.front());
  }
  const auto S = static_cast<int>(sources.size());
  const Index m = sources.front().rows();
  const Index n = sources.front().cols();

  Mixture out;
  out.mix.kind = DataKind::mix;
  out.mix.entries = Matrix::Zero(m, n);
  out.weights.resize(S, n);
  out.ground_truth.assign(sources.size(), Matrix(m, n));

  if (snr_db) {
    if (S != 2) throw Error("mix_synthetic: SNR mixing needs exactly two sources (signal, noise)");
    for (Index c = 0; c < n; ++c) {
      const Vector signal = sources[0].col(c);
      const Vector noise = sources[1].col(c);
      const double g = snr_gain({signal.data(), static_cast<std::size_t>(m)},
                                {noise.data(), static_cast<std::size_t>(m)}, *snr_db);
      out.weights(0, c) = 1.0;
      out.weights(1, c) = g;
      out.ground_truth[0].col(c) = signal;
      out.ground_truth[1].col(c) = g * noise;
      out.mix.entries.col(c) = signal + g * noise;
    }
    return out;
  }

  wm.validate();
  if (wm.sources() != S) throw Error("mix_synthetic: weight model and source count differ");
  Rng rng(seed);
  for (Index c = 0; c < n; ++c) {
    const auto a = wm.draw(rng);
    for (int i = 0; i < S; ++i) {
      out.weights(i, c) = a[static_cast<std::size_t>(i)];
      out.ground_truth[static_cast<std::size_t>(i)].col(c) = a[static_cast<std::size_t>(i)] * sources[static_cast<std::size_t>(i)].col(c);
      out.mix.entries.col(c) += out.ground_truth[static_cast<std::size_t>(i)].col(c);
    }
  }
  return out;
}

double snr_gain(std::span<const double> signal, std::span<const double> noise, double snr_db) {
  if (signal.size() != noise.size()) throw Error("snr_gain: signal and noise differ in length");
  double es = 0.0;
  double en = 0.0;
  for (std::size_t k = 0; k < signal.size(); ++k) {
    es += signal[k] * signal[k];
    en += noise[k] * noise[k];
  }
  if (!(en > 0.0)) throw Error("snr_gain: noise has zero energy");
  return std::sqrt(es / (en * std::pow(10.0, snr_db / 10.0)));
}

std::vector<double> mix_at_snr(std::span<const double> signal, std::span<const double> noise,
                               double snr_db, std::vector<double>* scaled_noise) {
  const double g = snr_gain(signal, noise, snr_db);
  std::vector<double> out(signal.size());
  if (scaled_noise) scaled_noise->resize(signal.size());
  for (std::size_t k = 0; k < signal.size(); ++k) {
    const double nk = g * noise[k];
    out[k] = signal[k] + nk;
    if (scaled_noise) (*scaled_noise)[k] = nk;
  }
  return out;
}

}  // namespace anmf
