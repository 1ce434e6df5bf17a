#pragma once

#include "anmf/common.hpp"

#include <span>
#include <vector>

namespace anmf {

using ComplexMatrix = Eigen::MatrixXcd;

enum class WindowType { hann };

struct StftConfig {
  Index n_fft = 512;
  Index hop = 128;
  WindowType window = WindowType::hann;
  int sample_rate = 16000;

  Index bins() const { return n_fft / 2 + 1; }
  /// n_fft a power of two, hop dividing n_fft and at most n_fft / 2, which
  /// makes the periodic Hann window overlap-add to a constant.
  void validate() const;
};

/// Periodic window of length n_fft.
Vector analysis_window(const StftConfig& cfg);

/// One-sided spectrogram, (n_fft/2 + 1) x frames.
struct Spectrogram {
  Matrix magnitude;
  Matrix phase;  ///< radians in (-pi, pi]
  StftConfig config;
  Index length = 0;  ///< samples of the analysed signal

  Index bins() const { return magnitude.rows(); }
  Index frames() const { return magnitude.cols(); }
  ComplexMatrix complex() const;
  static Spectrogram from_complex(const ComplexMatrix& z, const StftConfig& cfg, Index length);
};

/// Centered STFT: the signal is reflection-padded by n_fft/2 on both sides,
/// frames every hop samples, Hann-windowed, one-sided DFT per frame.
Spectrogram stft(std::span<const double> signal, const StftConfig& cfg = {});

/// Weighted overlap-add inverse: sum of windowed frame IDFTs divided by the
/// summed squared window; returns spec.length samples.
std::vector<double> istft(const Spectrogram& spec);

/// Per-source complex spectra mask_i * mix with
/// mask_i = mag_i / sum_j mag_j (1/S where the sum is <= eps).
std::vector<Spectrogram> mask_spectra(const Spectrogram& mix, std::span<const Matrix> source_mags,
                                      double eps = kEps);

/// Masks the mixture with the source magnitudes and resynthesizes each source.
std::vector<std::vector<double>> apply_mask(const Spectrogram& mix,
                                            std::span<const Matrix> source_mags,
                                            double eps = kEps);

}  // namespace anmf
