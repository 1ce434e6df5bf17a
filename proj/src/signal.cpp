#include "anmf/signal.hpp"

#include <unsupported/Eigen/FFT>

#include <cmath>
#include <complex>
#include <numbers>

namespace anmf {

namespace {

using Complex = std::complex<double>;

double wrap_phase(double p) { return p <= -std::numbers::pi ? std::numbers::pi : p; }

Eigen::FFT<double> make_fft() {
  Eigen::FFT<double> fft;
  fft.SetFlag(Eigen::FFT<double>::HalfSpectrum);
  return fft;
}

}  // namespace

void StftConfig::validate() const {
  if (n_fft < 2 || (n_fft & (n_fft - 1)) != 0) throw Error("StftConfig: n_fft must be a power of two");
  if (hop < 1 || hop > n_fft / 2 || n_fft % hop != 0)
    throw Error("StftConfig: hop must divide n_fft and be at most n_fft / 2");
  if (sample_rate < 1) throw Error("StftConfig: sample rate must be positive");
}

Vector analysis_window(const StftConfig& cfg) {
  Vector w(cfg.n_fft);
  const double n = static_cast<double>(cfg.n_fft);
  for (Index k = 0; k < cfg.n_fft; ++k)
    w(k) = 0.5 - 0.5 * std::cos(2.0 * std::numbers::pi * static_cast<double>(k) / n);
  return w;
}

ComplexMatrix Spectrogram::complex() const {
  ComplexMatrix z(magnitude.rows(), magnitude.cols());
  for (Index j = 0; j < z.cols(); ++j)
    for (Index i = 0; i < z.rows(); ++i) z(i, j) = std::polar(magnitude(i, j), phase(i, j));
  return z;
}

Spectrogram Spectrogram::from_complex(const ComplexMatrix& z, const StftConfig& cfg, Index length) {
  Spectrogram s;
  s.config = cfg;
  s.length = length;
  s.magnitude = z.cwiseAbs();
  s.phase.resize(z.rows(), z.cols());
  for (Index j = 0; j < z.cols(); ++j)
    for (Index i = 0; i < z.rows(); ++i) s.phase(i, j) = wrap_phase(std::arg(z(i, j)));
  return s;
}

Spectrogram stft(std::span<const double> signal, const StftConfig& cfg) {
  cfg.validate();
  const auto len = static_cast<Index>(signal.size());
  if (len < cfg.n_fft) throw Error("stft: signal is shorter than one window");

  const Index pad = cfg.n_fft / 2;
  std::vector<double> padded(static_cast<std::size_t>(len + 2 * pad));
  for (Index t = 0; t < len + 2 * pad; ++t) {
    Index src = t - pad;
    if (src < 0) src = -src;
    if (src >= len) src = 2 * (len - 1) - src;
    padded[static_cast<std::size_t>(t)] = signal[static_cast<std::size_t>(src)];
  }

  const Index frames = 1 + len / cfg.hop;
  const Vector w = analysis_window(cfg);
  Spectrogram out;
  out.config = cfg;
  out.length = len;
  out.magnitude.resize(cfg.bins(), frames);
  out.phase.resize(cfg.bins(), frames);

#pragma omp parallel
  {
    auto fft = make_fft();
    std::vector<double> frame(static_cast<std::size_t>(cfg.n_fft));
    std::vector<Complex> bins;
#pragma omp for schedule(static)
    for (Index f = 0; f < frames; ++f) {
      const Index start = f * cfg.hop;
      for (Index k = 0; k < cfg.n_fft; ++k)
        frame[static_cast<std::size_t>(k)] = padded[static_cast<std::size_t>(start + k)] * w(k);
      fft.fwd(bins, frame);
      for (Index b = 0; b < cfg.bins(); ++b) {
        out.magnitude(b, f) = std::abs(bins[static_cast<std::size_t>(b)]);
        out.phase(b, f) = wrap_phase(std::arg(bins[static_cast<std::size_t>(b)]));
      }
    }
  }
  return out;
}

std::vector<double> istft(const Spectrogram& spec) {
  const StftConfig& cfg = spec.config;
  cfg.validate();
  if (spec.bins() != cfg.bins())
    throw_dimension("istft", "spectrogram", spec.bins(), spec.frames(), "config bins", cfg.bins(), 0);
  const Index frames = spec.frames();
  const Index pad = cfg.n_fft / 2;
  const Index padded_len = (frames > 0 ? (frames - 1) * cfg.hop : 0) + cfg.n_fft;
  const Vector w = analysis_window(cfg);

  std::vector<double> acc(static_cast<std::size_t>(padded_len), 0.0);
  std::vector<double> norm(static_cast<std::size_t>(padded_len), 0.0);
  auto fft = make_fft();
  std::vector<Complex> bins(static_cast<std::size_t>(cfg.bins()));
  std::vector<double> frame;
  // Sequential overlap-add keeps the summation order fixed.
  for (Index f = 0; f < frames; ++f) {
    for (Index b = 0; b < cfg.bins(); ++b)
      bins[static_cast<std::size_t>(b)] = std::polar(spec.magnitude(b, f), spec.phase(b, f));
    // The DC and Nyquist bins of a real signal are real.
    bins.front() = Complex(bins.front().real(), 0.0);
    bins.back() = Complex(bins.back().real(), 0.0);
    fft.inv(frame, bins, cfg.n_fft);
    const Index start = f * cfg.hop;
    for (Index k = 0; k < cfg.n_fft; ++k) {
      acc[static_cast<std::size_t>(start + k)] += frame[static_cast<std::size_t>(k)] * w(k);
      norm[static_cast<std::size_t>(start + k)] += w(k) * w(k);
    }
  }

  const Index length = spec.length > 0 ? spec.length : std::max<Index>(0, padded_len - 2 * pad);
  std::vector<double> out(static_cast<std::size_t>(length), 0.0);
  for (Index t = 0; t < length; ++t) {
    const auto p = static_cast<std::size_t>(t + pad);
    if (p < acc.size() && norm[p] > 1e-10) out[static_cast<std::size_t>(t)] = acc[p] / norm[p];
  }
  return out;
}

std::vector<Spectrogram> mask_spectra(const Spectrogram& mix, std::span<const Matrix> source_mags,
                                      double eps) {
  if (source_mags.empty()) throw Error("apply_mask: no source magnitudes");
  for (const auto& m : source_mags)
    require_same_shape("apply_mask", "source magnitude", m, "mix magnitude", mix.magnitude);
  Matrix denom = Matrix::Zero(mix.bins(), mix.frames());
  for (const auto& m : source_mags) denom += m;
  const auto S = static_cast<double>(source_mags.size());

  std::vector<Spectrogram> out;
  for (const auto& m : source_mags) {
    Spectrogram s;
    s.config = mix.config;
    s.length = mix.length;
    s.phase = mix.phase;
    s.magnitude.resize(mix.bins(), mix.frames());
    for (Index j = 0; j < mix.frames(); ++j)
      for (Index i = 0; i < mix.bins(); ++i) {
        const double mask = denom(i, j) > eps ? m(i, j) / denom(i, j) : 1.0 / S;
        s.magnitude(i, j) = mask * mix.magnitude(i, j);
      }
    out.push_back(std::move(s));
  }
  return out;
}

std::vector<std::vector<double>> apply_mask(const Spectrogram& mix,
                                            std::span<const Matrix> source_mags, double eps) {
  std::vector<std::vector<double>> out;
  for (const auto& s : mask_spectra(mix, source_mags, eps)) out.push_back(istft(s));
  return out;
}

}  // namespace anmf
