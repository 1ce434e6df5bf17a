#pragma once

#include "anmf/common.hpp"

#include <filesystem>
#include <vector>

namespace anmf {

// Binary matrix container: "ANMF", u32 version (1), u64 rows, u64 cols, then
// rows * cols column-major doubles. All fields little-endian.
inline constexpr std::uint32_t kMatrixFileVersion = 1;

void save_matrix(const std::filesystem::path& path, const Matrix& m);
Matrix load_matrix(const std::filesystem::path& path);

/// What to do with negative entries of ingested matrices.
enum class NegativePolicy { reject, clamp };

/// Loads a matrix that must be non-negative; negatives throw or are set to 0.
Matrix load_nonnegative(const std::filesystem::path& path, NegativePolicy policy);

/// IDX image file (magic 0x00000803): every image becomes one column,
/// flattened column by column and scaled to [0, 1].
DataMatrix load_idx_images(const std::filesystem::path& path);

/// Writes images (one column each, rows x cols pixels, values in [0, 1]) as
/// an IDX file, rounding to bytes.
void save_idx_images(const std::filesystem::path& path, const Matrix& images, std::uint32_t rows,
                     std::uint32_t cols);

struct Audio {
  std::vector<double> samples;  ///< in [-1, 1)
  int sample_rate = 16000;
};

/// PCM 16-bit mono WAV; samples are divided by 32768.
Audio load_wav(const std::filesystem::path& path);

/// Writes PCM 16-bit mono. Samples are scaled by 32768, rounded and clipped.
void save_wav(const std::filesystem::path& path, const Audio& audio);

}  // namespace anmf
