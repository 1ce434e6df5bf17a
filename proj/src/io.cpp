#include "anmf/io.hpp"

#include <algorithm>
#include <array>
#include <bit>
#include <cmath>
#include <cstring>
#include <fstream>
#include <iterator>

namespace anmf {

namespace {

std::vector<unsigned char> read_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error("cannot open " + path.string());
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

void write_file(const std::filesystem::path& path, const std::vector<unsigned char>& bytes) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error("cannot write " + path.string());
  out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
  if (!out) throw Error("write failed: " + path.string());
}

template <typename T>
void put_le(std::vector<unsigned char>& out, T value) {
  for (std::size_t b = 0; b < sizeof(T); ++b)
    out.push_back(static_cast<unsigned char>((value >> (8 * b)) & 0xFF));
}

class Reader {
 public:
  Reader(const std::vector<unsigned char>& bytes, std::string name)
      : bytes_(bytes), name_(std::move(name)) {}

  template <typename T>
  T le() {
    need(sizeof(T));
    T v = 0;
    for (std::size_t b = 0; b < sizeof(T); ++b) v |= static_cast<T>(static_cast<T>(bytes_[pos_ + b]) << (8 * b));
    pos_ += sizeof(T);
    return v;
  }

  std::uint32_t be32() {
    need(4);
    std::uint32_t v = 0;
    for (std::size_t b = 0; b < 4; ++b) v = (v << 8) | bytes_[pos_ + b];
    pos_ += 4;
    return v;
  }

  std::string tag() {
    need(4);
    std::string s(reinterpret_cast<const char*>(&bytes_[pos_]), 4);
    pos_ += 4;
    return s;
  }

  const unsigned char* take(std::size_t n) {
    need(n);
    const unsigned char* p = &bytes_[pos_];
    pos_ += n;
    return p;
  }

  void skip(std::size_t n) { take(n); }
  std::size_t remaining() const { return bytes_.size() - pos_; }

 private:
  void need(std::size_t n) const {
    if (bytes_.size() - pos_ < n) throw FormatError(name_ + ": truncated file");
  }

  const std::vector<unsigned char>& bytes_;
  std::string name_;
  std::size_t pos_ = 0;
};

}  // namespace

void save_matrix(const std::filesystem::path& path, const Matrix& m) {
  std::vector<unsigned char> out;
  out.reserve(24 + static_cast<std::size_t>(m.size()) * 8);
  for (char c : {'A', 'N', 'M', 'F'}) out.push_back(static_cast<unsigned char>(c));
  put_le<std::uint32_t>(out, kMatrixFileVersion);
  put_le<std::uint64_t>(out, static_cast<std::uint64_t>(m.rows()));
  put_le<std::uint64_t>(out, static_cast<std::uint64_t>(m.cols()));
  for (Index k = 0; k < m.size(); ++k) put_le<std::uint64_t>(out, std::bit_cast<std::uint64_t>(m.data()[k]));
  write_file(path, out);
}

Matrix load_matrix(const std::filesystem::path& path) {
  const auto bytes = read_file(path);
  Reader r(bytes, path.string());
  if (r.tag() != "ANMF") throw FormatError(path.string() + ": not a matrix file (bad magic)");
  const auto version = r.le<std::uint32_t>();
  if (version != kMatrixFileVersion)
    throw FormatError(path.string() + ": unsupported matrix file version " + std::to_string(version));
  const auto rows = r.le<std::uint64_t>();
  const auto cols = r.le<std::uint64_t>();
  if (cols != 0 && rows > r.remaining() / 8 / cols)
    throw FormatError(path.string() + ": truncated file");
  if (r.remaining() != rows * cols * 8)
    throw FormatError(path.string() + ": payload size does not match " +
                      shape_string(static_cast<Index>(rows), static_cast<Index>(cols)));
  Matrix m(static_cast<Index>(rows), static_cast<Index>(cols));
  for (Index k = 0; k < m.size(); ++k) m.data()[k] = std::bit_cast<double>(r.le<std::uint64_t>());
  return m;
}

Matrix load_nonnegative(const std::filesystem::path& path, NegativePolicy policy) {
  Matrix m = load_matrix(path);
  if (!m.allFinite()) throw FormatError(path.string() + ": non-finite entries");
  if (!is_nonnegative(m)) {
    if (policy == NegativePolicy::reject)
      throw FormatError(path.string() + ": negative entries (use --clamp-negatives to clamp them)");
    m = m.cwiseMax(0.0);
  }
  return m;
}

DataMatrix load_idx_images(const std::filesystem::path& path) {
  const auto bytes = read_file(path);
  Reader r(bytes, path.string());
  const std::uint32_t magic = r.be32();
  if (magic != 0x00000803) throw FormatError(path.string() + ": not an IDX image file (bad magic)");
  const std::uint64_t count = r.be32();
  const std::uint64_t rows = r.be32();
  const std::uint64_t cols = r.be32();
  const std::uint64_t pixels = rows * cols;
  if (r.remaining() < count * pixels) throw FormatError(path.string() + ": truncated file");

  DataMatrix out;
  out.entries.resize(static_cast<Index>(pixels), static_cast<Index>(count));
  for (std::uint64_t n = 0; n < count; ++n) {
    const unsigned char* img = r.take(pixels);
    // Stored row-major; flattened here column by column.
    for (std::uint64_t y = 0; y < rows; ++y)
      for (std::uint64_t x = 0; x < cols; ++x)
        out.entries(static_cast<Index>(x * rows + y), static_cast<Index>(n)) =
            static_cast<double>(img[y * cols + x]) / 255.0;
  }
  return out;
}

void save_idx_images(const std::filesystem::path& path, const Matrix& images, std::uint32_t rows,
                     std::uint32_t cols) {
  if (images.rows() != static_cast<Index>(rows) * cols)
    throw_dimension("save_idx_images", "images", images.rows(), images.cols(), "pixels", rows, cols);
  std::vector<unsigned char> out;
  auto be32 = [&](std::uint32_t v) {
    for (int b = 3; b >= 0; --b) out.push_back(static_cast<unsigned char>((v >> (8 * b)) & 0xFF));
  };
  be32(0x00000803);
  be32(static_cast<std::uint32_t>(images.cols()));
  be32(rows);
  be32(cols);
  for (Index n = 0; n < images.cols(); ++n)
    for (std::uint32_t y = 0; y < rows; ++y)
      for (std::uint32_t x = 0; x < cols; ++x) {
        const double v = std::clamp(images(static_cast<Index>(x * rows + y), n), 0.0, 1.0);
        out.push_back(static_cast<unsigned char>(std::lround(v * 255.0)));
      }
  write_file(path, out);
}

Audio load_wav(const std::filesystem::path& path) {
  const auto bytes = read_file(path);
  const std::string name = path.string();
  Reader r(bytes, name);
  if (r.tag() != "RIFF") throw FormatError(name + ": not a RIFF file");
  r.skip(4);
  if (r.tag() != "WAVE") throw FormatError(name + ": not a WAVE file");

  Audio audio;
  bool have_fmt = false;
  while (r.remaining() >= 8) {
    const std::string id = r.tag();
    const auto size = r.le<std::uint32_t>();
    if (id == "fmt ") {
      if (size < 16) throw FormatError(name + ": short fmt chunk");
      const auto format = r.le<std::uint16_t>();
      const auto channels = r.le<std::uint16_t>();
      const auto rate = r.le<std::uint32_t>();
      r.skip(6);  // byte rate, block align
      const auto bits = r.le<std::uint16_t>();
      r.skip(size - 16);
      if (format != 1 || bits != 16) throw FormatError(name + ": only PCM 16-bit audio is supported");
      if (channels != 1) throw FormatError(name + ": only mono audio is supported");
      audio.sample_rate = static_cast<int>(rate);
      have_fmt = true;
    } else if (id == "data") {
      if (!have_fmt) throw FormatError(name + ": data chunk before fmt chunk");
      if (size % 2 != 0) throw FormatError(name + ": odd data chunk size");
      const unsigned char* p = r.take(size);
      audio.samples.resize(size / 2);
      for (std::size_t k = 0; k < audio.samples.size(); ++k) {
        const auto raw = static_cast<std::uint16_t>(p[2 * k] | (p[2 * k + 1] << 8));
        audio.samples[k] = static_cast<double>(static_cast<std::int16_t>(raw)) / 32768.0;
      }
      return audio;
    } else {
      r.skip(size + (size & 1));
    }
  }
  throw FormatError(name + ": no data chunk");
}

void save_wav(const std::filesystem::path& path, const Audio& audio) {
  if (audio.sample_rate < 1) throw Error("save_wav: sample rate must be positive");
  const auto data_bytes = static_cast<std::uint32_t>(audio.samples.size() * 2);
  std::vector<unsigned char> out;
  auto tag = [&](const char* s) { out.insert(out.end(), s, s + 4); };
  tag("RIFF");
  put_le<std::uint32_t>(out, 36 + data_bytes);
  tag("WAVE");
  tag("fmt ");
  put_le<std::uint32_t>(out, 16);
  put_le<std::uint16_t>(out, 1);
  put_le<std::uint16_t>(out, 1);
  put_le<std::uint32_t>(out, static_cast<std::uint32_t>(audio.sample_rate));
  put_le<std::uint32_t>(out, static_cast<std::uint32_t>(audio.sample_rate) * 2);
  put_le<std::uint16_t>(out, 2);
  put_le<std::uint16_t>(out, 16);
  tag("data");
  put_le<std::uint32_t>(out, data_bytes);
  for (double s : audio.samples) {
    const double scaled = std::clamp(std::round(s * 32768.0), -32768.0, 32767.0);
    put_le<std::uint16_t>(out, static_cast<std::uint16_t>(static_cast<std::int16_t>(scaled)));
  }
  write_file(path, out);
}

}  // namespace anmf
