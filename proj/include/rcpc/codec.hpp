#ifndef RCPC_CODEC_HPP
#define RCPC_CODEC_HPP

#include <cstdint>
#include <ostream>
#include <span>
#include <vector>

#include "rcpc/config.hpp"
#include "rcpc/image.hpp"

namespace rcpc {

/// Fixed 35-byte little-endian container header. q_or_target carries the
/// global quantization step in near-lossless mode and the target rate in
/// millibits per pixel in the rate-controlled modes (the decoder needs it to
/// know whether per-slice skip flags are present).
struct ContainerHeader {
  static constexpr char kMagic[4] = {'R', 'C', 'P', 'C'};
  static constexpr std::uint8_t kVersion = 1;
  static constexpr std::size_t kSize = 35;

  std::uint16_t bands = 0;
  std::uint32_t lines = 0;
  std::uint32_t columns = 0;
  std::uint8_t bit_depth = 0;
  Mode mode = Mode::Lossless;
  std::uint16_t q_or_target = 0;
  std::uint8_t block_w = 0;
  std::uint8_t block_h = 0;
  std::uint8_t pred_bands = 0;
  std::uint8_t est_lines = 0;
  std::uint16_t tau = 0;
  std::uint16_t clip = 0;

  void write(std::vector<std::uint8_t> &out) const;
  static ContainerHeader read(std::span<const std::uint8_t> bytes);

  bool skip_flags_present() const {
    return (mode == Mode::RateA || mode == Mode::RateB) && clip == 0 &&
           q_or_target <= 1000;
  }
};

struct EncodeResult {
  std::vector<std::uint8_t> bytes;
  QualityReport report;           // original vs encoder-side reconstruction
  std::vector<double> slice_bpp;  // measured rate per slice
  bool target_missed = false;     // some slice could not reach its budget
  std::uint64_t recon_hash = 0;   // FNV-1a of the reconstruction, BIL order
};

EncodeResult encode(const ImageCube &cube, const CodecConfig &config);

ImageCube decode(std::span<const std::uint8_t> bytes);

/// FNV-1a over samples in BIL traversal order; decoder-synchrony checks
/// compare this against EncodeResult::recon_hash.
std::uint64_t cube_hash(const ImageCube &cube);

struct StatsRow {
  Mode mode = Mode::RateA;
  double target_bpp = 0.0;
  double rate_bpp = 0.0;
  double snr_db = 0.0;
  int mad = 0;
  bool lossless = false;
};

/// One full encode+decode per target and mode (A and B); rows suit
/// rate-distortion curve plotting.
std::vector<StatsRow> encode_with_stats(const ImageCube &cube, const CodecConfig &base,
                                        std::span<const double> targets);

void write_stats_csv(std::ostream &out, std::span<const StatsRow> rows);

} // namespace rcpc

#endif
