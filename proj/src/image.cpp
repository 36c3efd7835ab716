#include "rcpc/image.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <limits>
#include <random>
#include <sstream>
#include <stdexcept>

namespace rcpc {

ImageCube::ImageCube(int bands_, int lines_, int columns_, int bit_depth_)
    : bands(bands_), lines(lines_), columns(columns_), bit_depth(bit_depth_) {
  if (bands <= 0 || lines <= 0 || columns <= 0) {
    throw std::invalid_argument("cube dimensions must be positive");
  }
  if (bit_depth < 8 || bit_depth > 16) {
    throw std::invalid_argument("bit depth must be within [8, 16]");
  }
  samples.assign(pixel_count(), 0);
}

BlockGrid build_grid(int bands, int lines, int columns, int block_w, int block_h) {
  if (bands <= 0 || lines <= 0 || columns <= 0 || block_w <= 0 || block_h <= 0) {
    throw std::invalid_argument("grid dimensions must be positive");
  }
  BlockGrid grid;
  grid.block_w = block_w;
  grid.block_h = block_h;
  grid.columns = columns;
  grid.lines = lines;
  grid.bands = bands;
  grid.blocks_x = (columns + block_w - 1) / block_w;
  grid.blocks_y = (lines + block_h - 1) / block_h;
  return grid;
}

QualityReport quality(const ImageCube &original, const ImageCube &decoded,
                      std::uint64_t compressed_bits) {
  if (!original.same_dims(decoded)) {
    throw std::invalid_argument("quality: dimension mismatch");
  }
  QualityReport report;
  report.rate_bpp = static_cast<double>(compressed_bits) / original.pixel_count();
  report.per_band_mad.assign(original.bands, 0);

  double signal = 0.0;
  double noise = 0.0;
  for (int y = 0; y < original.lines; ++y) {
    for (int z = 0; z < original.bands; ++z) {
      for (int x = 0; x < original.columns; ++x) {
        const double v = original.at(z, y, x);
        const int diff = std::abs(static_cast<int>(original.at(z, y, x)) -
                                  static_cast<int>(decoded.at(z, y, x)));
        signal += v * v;
        noise += static_cast<double>(diff) * diff;
        report.per_band_mad[z] = std::max(report.per_band_mad[z], diff);
        report.mad = std::max(report.mad, diff);
      }
    }
  }
  if (noise == 0.0) {
    report.lossless = true;
    report.snr_db = 0.0;
  } else if (signal == 0.0) {
    report.snr_db = -std::numeric_limits<double>::infinity();
  } else {
    report.snr_db = 10.0 * std::log10(signal / noise);
  }
  return report;
}

namespace {

// Box-Muller over mt19937_64 draws; avoids std::normal_distribution so the
// output stream is pinned to this exact algorithm.
class GaussianSource {
public:
  explicit GaussianSource(std::uint64_t seed) : rng_(seed) {}

  double next() {
    if (have_spare_) {
      have_spare_ = false;
      return spare_;
    }
    double u1 = 0.0;
    do {
      u1 = uniform();
    } while (u1 <= 0.0);
    const double u2 = uniform();
    const double two_pi = 6.283185307179586476925287;
    const double mag = std::sqrt(-2.0 * std::log(u1));
    spare_ = mag * std::sin(two_pi * u2);
    have_spare_ = true;
    return mag * std::cos(two_pi * u2);
  }

private:
  double uniform() {
    return (rng_() >> 11) * (1.0 / 9007199254740992.0); // 53-bit mantissa
  }

  std::mt19937_64 rng_;
  double spare_ = 0.0;
  bool have_spare_ = false;
};

} // namespace

ImageCube generate_synthetic_cube(std::uint64_t seed, int bands, int lines, int columns,
                                  int bit_depth, double spectral_corr, double spatial_corr,
                                  double noise_sigma) {
  if (spectral_corr < 0.0 || spectral_corr >= 1.0 || spatial_corr < 0.0 ||
      spatial_corr >= 1.0) {
    throw std::invalid_argument("correlations must be within [0, 1)");
  }
  if (noise_sigma < 0.0) {
    throw std::invalid_argument("noise sigma must be non-negative");
  }
  ImageCube cube(bands, lines, columns, bit_depth);
  const int mid = 1 << (bit_depth - 1);
  if (noise_sigma == 0.0) {
    std::fill(cube.samples.begin(), cube.samples.end(), static_cast<std::uint16_t>(mid));
    return cube;
  }

  const std::size_t zc = static_cast<std::size_t>(bands);
  const std::size_t yc = static_cast<std::size_t>(lines);
  const std::size_t xc = static_cast<std::size_t>(columns);
  std::vector<double> field(zc * yc * xc);
  GaussianSource noise(seed);
  for (auto &v : field) {
    v = noise.next() * noise_sigma;
  }
  // Field layout (z, y, x) with x fastest. Variance-preserving AR(1) pass
  // along each correlated axis.
  if (spatial_corr > 0.0) {
    const double mix = std::sqrt(1.0 - spatial_corr * spatial_corr);
    for (std::size_t z = 0; z < zc; ++z) {
      for (std::size_t y = 0; y < yc; ++y) {
        double *row = &field[(z * yc + y) * xc];
        for (std::size_t x = 1; x < xc; ++x) {
          row[x] = spatial_corr * row[x - 1] + mix * row[x];
        }
      }
      for (std::size_t x = 0; x < xc; ++x) {
        double prev = field[(z * yc) * xc + x];
        for (std::size_t y = 1; y < yc; ++y) {
          double &cur = field[(z * yc + y) * xc + x];
          cur = spatial_corr * prev + mix * cur;
          prev = cur;
        }
      }
    }
  }
  if (spectral_corr > 0.0) {
    const double mix = std::sqrt(1.0 - spectral_corr * spectral_corr);
    for (std::size_t y = 0; y < yc; ++y) {
      for (std::size_t x = 0; x < xc; ++x) {
        double prev = field[y * xc + x];
        for (std::size_t z = 1; z < zc; ++z) {
          double &cur = field[(z * yc + y) * xc + x];
          cur = spectral_corr * prev + mix * cur;
          prev = cur;
        }
      }
    }
  }

  const int max_value = cube.max_value();
  for (int z = 0; z < bands; ++z) {
    for (int y = 0; y < lines; ++y) {
      for (int x = 0; x < columns; ++x) {
        const double v = field[(static_cast<std::size_t>(z) * yc + y) * xc + x];
        const long rounded = std::lround(v) + mid;
        cube.at(z, y, x) = static_cast<std::uint16_t>(std::clamp<long>(rounded, 0, max_value));
      }
    }
  }
  return cube;
}

RawHeader read_raw_header(const std::string &path) {
  std::ifstream in(path);
  if (!in) {
    throw std::runtime_error("cannot open header file: " + path);
  }
  RawHeader hdr;
  bool got[4] = {false, false, false, false};
  std::string key;
  while (in >> key) {
    if (key == "bands") {
      in >> hdr.bands;
      got[0] = true;
    } else if (key == "lines") {
      in >> hdr.lines;
      got[1] = true;
    } else if (key == "columns") {
      in >> hdr.columns;
      got[2] = true;
    } else if (key == "bit_depth") {
      in >> hdr.bit_depth;
      got[3] = true;
    } else if (key == "interleave") {
      std::string v;
      in >> v;
      if (v == "bil" || v == "BIL") {
        hdr.interleave = Interleave::BIL;
      } else if (v == "bsq" || v == "BSQ") {
        hdr.interleave = Interleave::BSQ;
      } else {
        throw std::runtime_error("unknown interleave: " + v);
      }
    } else {
      throw std::runtime_error("unknown header key: " + key);
    }
    if (!in) {
      throw std::runtime_error("malformed header value for key: " + key);
    }
  }
  if (!(got[0] && got[1] && got[2] && got[3])) {
    throw std::runtime_error("header missing required keys (bands/lines/columns/bit_depth)");
  }
  return hdr;
}

void write_raw_header(const RawHeader &hdr, const std::string &path) {
  std::ofstream out(path);
  if (!out) {
    throw std::runtime_error("cannot write header file: " + path);
  }
  out << "bands " << hdr.bands << "\n"
      << "lines " << hdr.lines << "\n"
      << "columns " << hdr.columns << "\n"
      << "bit_depth " << hdr.bit_depth << "\n"
      << "interleave " << (hdr.interleave == Interleave::BIL ? "bil" : "bsq") << "\n";
}

ImageCube load_raw_cube(const std::string &raw_path, const std::string &hdr_path) {
  const RawHeader hdr = read_raw_header(hdr_path);
  ImageCube cube(hdr.bands, hdr.lines, hdr.columns, hdr.bit_depth);

  std::ifstream in(raw_path, std::ios::binary);
  if (!in) {
    throw std::runtime_error("cannot open raw file: " + raw_path);
  }
  const std::size_t n = cube.pixel_count();
  std::vector<std::uint8_t> bytes(n * 2);
  in.read(reinterpret_cast<char *>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
  if (static_cast<std::size_t>(in.gcount()) != bytes.size()) {
    throw std::runtime_error("raw file shorter than header dimensions imply");
  }
  const int max_value = cube.max_value();
  for (std::size_t i = 0; i < n; ++i) {
    const std::uint16_t v =
        static_cast<std::uint16_t>(bytes[2 * i] | (bytes[2 * i + 1] << 8));
    if (v > max_value) {
      throw std::runtime_error("sample exceeds declared bit depth");
    }
    if (hdr.interleave == Interleave::BIL) {
      cube.samples[i] = v;
    } else {
      // BSQ linear index i = (z*lines + y)*columns + x
      const std::size_t x = i % cube.columns;
      const std::size_t y = (i / cube.columns) % cube.lines;
      const std::size_t z = i / (static_cast<std::size_t>(cube.columns) * cube.lines);
      cube.at(static_cast<int>(z), static_cast<int>(y), static_cast<int>(x)) = v;
    }
  }
  return cube;
}

void save_raw_cube(const ImageCube &cube, const std::string &raw_path,
                   const std::string &hdr_path) {
  std::ofstream out(raw_path, std::ios::binary);
  if (!out) {
    throw std::runtime_error("cannot write raw file: " + raw_path);
  }
  std::vector<std::uint8_t> bytes(cube.samples.size() * 2);
  for (std::size_t i = 0; i < cube.samples.size(); ++i) {
    bytes[2 * i] = static_cast<std::uint8_t>(cube.samples[i] & 0xFF);
    bytes[2 * i + 1] = static_cast<std::uint8_t>(cube.samples[i] >> 8);
  }
  out.write(reinterpret_cast<const char *>(bytes.data()),
            static_cast<std::streamsize>(bytes.size()));
  if (!hdr_path.empty()) {
    RawHeader hdr;
    hdr.bands = cube.bands;
    hdr.lines = cube.lines;
    hdr.columns = cube.columns;
    hdr.bit_depth = cube.bit_depth;
    hdr.interleave = Interleave::BIL;
    write_raw_header(hdr, hdr_path);
  }
}

} // namespace rcpc
