#ifndef RCPC_IMAGE_HPP
#define RCPC_IMAGE_HPP

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

namespace rcpc {

/// 3-D unsigned-integer sample cube stored in BIL order: line-major,
/// band-interleaved within each line. index(z,y,x) = (y*bands + z)*columns + x.
struct ImageCube {
  int bands = 0;
  int lines = 0;
  int columns = 0;
  int bit_depth = 0;
  std::vector<std::uint16_t> samples;

  ImageCube() = default;
  ImageCube(int bands_, int lines_, int columns_, int bit_depth_);

  std::size_t index(int z, int y, int x) const {
    return (static_cast<std::size_t>(y) * bands + z) * columns + x;
  }
  std::uint16_t at(int z, int y, int x) const { return samples[index(z, y, x)]; }
  std::uint16_t &at(int z, int y, int x) { return samples[index(z, y, x)]; }

  std::size_t pixel_count() const {
    return static_cast<std::size_t>(bands) * lines * columns;
  }
  int max_value() const { return (1 << bit_depth) - 1; }

  bool same_dims(const ImageCube &other) const {
    return bands == other.bands && lines == other.lines && columns == other.columns;
  }
};

/// Tiling of the spatial plane into block_w x block_h blocks. A slice is one
/// row of blocks across all bands; edge blocks may be partial.
struct BlockGrid {
  int block_w = 0;
  int block_h = 0;
  int blocks_x = 0;
  int blocks_y = 0;
  int columns = 0;
  int lines = 0;
  int bands = 0;

  int blocks_per_slice() const { return blocks_x * bands; } // N_B
  int block_width(int bx) const {
    return std::min(block_w, columns - bx * block_w);
  }
  int slice_rows(int sy) const {
    return std::min(block_h, lines - sy * block_h);
  }
  // Pixels in one band's block within slice sy.
  int block_pixels(int bx, int sy) const { return block_width(bx) * slice_rows(sy); }
  std::size_t slice_pixels(int sy) const {
    return static_cast<std::size_t>(slice_rows(sy)) * columns * bands;
  }
};

BlockGrid build_grid(int bands, int lines, int columns, int block_w, int block_h);

struct QualityReport {
  double rate_bpp = 0.0;
  double snr_db = 0.0;
  bool lossless = false; // perfect reconstruction; snr_db not meaningful
  int mad = 0;
  std::vector<int> per_band_mad;
};

QualityReport quality(const ImageCube &original, const ImageCube &decoded,
                      std::uint64_t compressed_bits);

/// Deterministic synthetic cube: first-order Gauss-Markov field in the two
/// spatial directions and the spectral direction, mean at mid-range, driving
/// noise of standard deviation noise_sigma, clamped to the bit depth.
ImageCube generate_synthetic_cube(std::uint64_t seed, int bands, int lines, int columns,
                                  int bit_depth, double spectral_corr, double spatial_corr,
                                  double noise_sigma);

enum class Interleave { BIL, BSQ };

struct RawHeader {
  int bands = 0;
  int lines = 0;
  int columns = 0;
  int bit_depth = 0;
  Interleave interleave = Interleave::BIL;
};

RawHeader read_raw_header(const std::string &path);
void write_raw_header(const RawHeader &hdr, const std::string &path);

/// Headerless binary of little-endian 16-bit samples plus a sidecar text
/// header. BSQ input is transposed to BIL on load.
ImageCube load_raw_cube(const std::string &raw_path, const std::string &hdr_path);
void save_raw_cube(const ImageCube &cube, const std::string &raw_path,
                   const std::string &hdr_path = "");

} // namespace rcpc

#endif
