#include "rcpc/codec.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <limits>
#include <optional>
#include <stdexcept>
#include <string>

#include "rcpc/allocator.hpp"
#include "rcpc/bitio.hpp"
#include "rcpc/feedback.hpp"
#include "rcpc/predictor.hpp"
#include "rcpc/quantizer.hpp"
#include "rcpc/range_coder.hpp"
#include "rcpc/rd_model.hpp"

namespace rcpc {

namespace {

void put_u16(std::vector<std::uint8_t> &out, std::uint16_t v) {
  out.push_back(static_cast<std::uint8_t>(v & 0xFF));
  out.push_back(static_cast<std::uint8_t>(v >> 8));
}

void put_u32(std::vector<std::uint8_t> &out, std::uint32_t v) {
  for (int i = 0; i < 4; ++i) {
    out.push_back(static_cast<std::uint8_t>((v >> (8 * i)) & 0xFF));
  }
}

std::uint16_t get_u16(std::span<const std::uint8_t> b, std::size_t at) {
  return static_cast<std::uint16_t>(b[at] | (b[at + 1] << 8));
}

std::uint32_t get_u32(std::span<const std::uint8_t> b, std::size_t at) {
  return static_cast<std::uint32_t>(b[at]) | (static_cast<std::uint32_t>(b[at + 1]) << 8) |
         (static_cast<std::uint32_t>(b[at + 2]) << 16) |
         (static_cast<std::uint32_t>(b[at + 3]) << 24);
}

} // namespace

void ContainerHeader::write(std::vector<std::uint8_t> &out) const {
  out.insert(out.end(), kMagic, kMagic + 4);
  out.push_back(kVersion);
  put_u16(out, bands);
  put_u32(out, lines);
  put_u32(out, columns);
  out.push_back(bit_depth);
  out.push_back(static_cast<std::uint8_t>(mode));
  put_u16(out, q_or_target);
  out.push_back(block_w);
  out.push_back(block_h);
  out.push_back(pred_bands);
  out.push_back(est_lines);
  put_u16(out, tau);
  put_u16(out, clip);
  for (int i = 0; i < 8; ++i) {
    out.push_back(0); // reserved
  }
}

ContainerHeader ContainerHeader::read(std::span<const std::uint8_t> bytes) {
  if (bytes.size() < kSize) {
    throw DecodeError("container: stream shorter than header");
  }
  if (std::memcmp(bytes.data(), kMagic, 4) != 0) {
    throw DecodeError("container: bad magic");
  }
  if (bytes[4] != kVersion) {
    throw DecodeError("container: unsupported version");
  }
  ContainerHeader h;
  h.bands = get_u16(bytes, 5);
  h.lines = get_u32(bytes, 7);
  h.columns = get_u32(bytes, 11);
  h.bit_depth = bytes[15];
  const std::uint8_t mode_raw = bytes[16];
  if (mode_raw > static_cast<std::uint8_t>(Mode::RateB)) {
    throw DecodeError("container: unknown mode");
  }
  h.mode = static_cast<Mode>(mode_raw);
  h.q_or_target = get_u16(bytes, 17);
  h.block_w = bytes[19];
  h.block_h = bytes[20];
  h.pred_bands = bytes[21];
  h.est_lines = bytes[22];
  h.tau = get_u16(bytes, 23);
  h.clip = get_u16(bytes, 25);
  if (h.bands == 0 || h.lines == 0 || h.columns == 0) {
    throw DecodeError("container: zero dimension");
  }
  if (h.bit_depth < 8 || h.bit_depth > 16) {
    throw DecodeError("container: bad bit depth");
  }
  if (h.block_w == 0 || h.block_h == 0) {
    throw DecodeError("container: zero block size");
  }
  if (h.mode == Mode::NearLossless && (h.q_or_target < 1 || h.q_or_target % 2 == 0)) {
    throw DecodeError("container: near-lossless step must be odd");
  }
  if (h.clip != 0 && (h.clip % 2 == 0 || h.clip > kQMax)) {
    throw DecodeError("container: bad clip");
  }
  return h;
}

std::uint64_t cube_hash(const ImageCube &cube) {
  std::uint64_t h = 1469598103934665603ull;
  for (int y = 0; y < cube.lines; ++y) {
    for (int z = 0; z < cube.bands; ++z) {
      for (int x = 0; x < cube.columns; ++x) {
        const std::uint16_t v = cube.at(z, y, x);
        h = (h ^ (v & 0xFF)) * 1099511628211ull;
        h = (h ^ (v >> 8)) * 1099511628211ull;
      }
    }
  }
  return h;
}

namespace {

struct QualityAccumulator {
  double signal = 0.0;
  double noise = 0.0;
  int mad = 0;
  std::vector<int> per_band_mad;
  std::uint64_t hash = 1469598103934665603ull;

  explicit QualityAccumulator(int bands) : per_band_mad(bands, 0) {}

  void add(int band, std::uint16_t original, std::uint16_t recon) {
    const double v = original;
    const int diff = std::abs(static_cast<int>(original) - static_cast<int>(recon));
    signal += v * v;
    noise += static_cast<double>(diff) * diff;
    mad = std::max(mad, diff);
    per_band_mad[band] = std::max(per_band_mad[band], diff);
    hash = (hash ^ (recon & 0xFF)) * 1099511628211ull;
    hash = (hash ^ (recon >> 8)) * 1099511628211ull;
  }

  QualityReport report(std::uint64_t compressed_bits, std::size_t pixels) const {
    QualityReport r;
    r.rate_bpp = static_cast<double>(compressed_bits) / static_cast<double>(pixels);
    r.mad = mad;
    r.per_band_mad = per_band_mad;
    if (noise == 0.0) {
      r.lossless = true;
    } else if (signal == 0.0) {
      r.snr_db = -std::numeric_limits<double>::infinity();
    } else {
      r.snr_db = 10.0 * std::log10(signal / noise);
    }
    return r;
  }
};

// Side-info step chain: delta against the previous block in the same band,
// first block against the previous slice (or 1 on slice zero); steps are odd
// so deltas are even and halved before the zigzag + Exp-Golomb code.
void encode_step_deltas(BitWriter &bw, std::span<const int> steps,
                        std::span<const int> prev_steps, int bands, int blocks_x) {
  for (int z = 0; z < bands; ++z) {
    for (int bx = 0; bx < blocks_x; ++bx) {
      const std::size_t idx = static_cast<std::size_t>(z) * blocks_x + bx;
      const int ref = bx > 0 ? steps[idx - 1]
                             : (prev_steps.empty() ? 1 : prev_steps[idx]);
      eg0_encode(bw, zigzag_encode((steps[idx] - ref) / 2));
    }
  }
}

std::vector<int> decode_step_deltas(BitReader &br, std::span<const int> prev_steps,
                                    int bands, int blocks_x, int max_step) {
  std::vector<int> steps(static_cast<std::size_t>(bands) * blocks_x);
  for (int z = 0; z < bands; ++z) {
    for (int bx = 0; bx < blocks_x; ++bx) {
      const std::size_t idx = static_cast<std::size_t>(z) * blocks_x + bx;
      const int ref = bx > 0 ? steps[idx - 1]
                             : (prev_steps.empty() ? 1 : prev_steps[idx]);
      const int q = ref + 2 * zigzag_decode(eg0_decode(br));
      if (q < 1 || q > max_step || q % 2 == 0) {
        throw DecodeError("side info: decoded step out of range");
      }
      steps[idx] = q;
    }
  }
  return steps;
}

ContainerHeader make_header(const ImageCube &cube, const CodecConfig &cfg) {
  if (cube.bands > 65535) {
    throw std::invalid_argument("too many bands for the container");
  }
  ContainerHeader h;
  h.bands = static_cast<std::uint16_t>(cube.bands);
  h.lines = static_cast<std::uint32_t>(cube.lines);
  h.columns = static_cast<std::uint32_t>(cube.columns);
  h.bit_depth = static_cast<std::uint8_t>(cube.bit_depth);
  h.mode = cfg.mode;
  if (cfg.mode == Mode::NearLossless) {
    h.q_or_target = static_cast<std::uint16_t>(cfg.q_global);
  } else if (cfg.rate_controlled()) {
    const long milli = std::lround(cfg.target_bpp * 1000.0);
    h.q_or_target = static_cast<std::uint16_t>(std::clamp(milli, 1L, 65535L));
  }
  h.block_w = static_cast<std::uint8_t>(cfg.block_w);
  h.block_h = static_cast<std::uint8_t>(cfg.block_h);
  h.pred_bands = static_cast<std::uint8_t>(cfg.pred_bands);
  h.est_lines = static_cast<std::uint8_t>(cfg.est_lines);
  h.tau = static_cast<std::uint16_t>(
      std::isfinite(cfg.tau) ? std::clamp(std::lround(cfg.tau), 0L, 65535L) : 0L);
  h.clip = static_cast<std::uint16_t>(cfg.clip);
  return h;
}

} // namespace

EncodeResult encode(const ImageCube &cube, const CodecConfig &config) {
  config.validate();
  if (cube.samples.size() != cube.pixel_count()) {
    throw std::invalid_argument("cube sample buffer does not match dimensions");
  }

  const ContainerHeader header = make_header(cube, config);
  const bool rate_mode = config.rate_controlled();
  // The decoder sees the target at millibpp resolution, so the skip-flag
  // predicate must use the same quantized value.
  const double global_target = rate_mode ? header.q_or_target / 1000.0 : 0.0;
  const bool flags_present = header.skip_flags_present();

  const BlockGrid grid =
      build_grid(cube.bands, cube.lines, cube.columns, config.block_w, config.block_h);
  const int n_blocks = grid.blocks_per_slice();
  const int smax = cube.max_value();

  Predictor predictor(cube.bands, cube.columns, cube.bit_depth, config.pred_bands);
  ResidualCoder coder(cube.bands);
  std::optional<RdTables> tables;
  if (config.use_rd_tables) {
    tables.emplace(build_tables());
  }
  const RdBackend rd = tables ? RdBackend(&*tables) : RdBackend();

  ControllerState controller(rate_mode ? global_target : 1.0, config.tau, config.policy,
                             config.window);
  const bool feedback_on = config.mode == Mode::RateB;

  EncodeResult result;
  header.write(result.bytes);
  QualityAccumulator acc(cube.bands);

  std::vector<int> prev_steps;
  std::vector<std::vector<std::int32_t>> block_residuals(
      static_cast<std::size_t>(n_blocks));

  for (int sy = 0; sy < grid.blocks_y; ++sy) {
    const int rows = grid.slice_rows(sy);
    const int y0 = sy * grid.block_h;
    std::vector<int> steps;
    std::vector<bool> skips(static_cast<std::size_t>(n_blocks), false);

    if (rate_mode) {
      const double slice_target =
          feedback_on ? controller.current_target() : global_target;
      // Estimation pass: lossless prediction over the first est_lines lines,
      // then backtrack, discarding the weight updates.
      const int est_rows = std::min(config.est_lines, rows);
      const auto snap = predictor.snapshot();
      for (auto &v : block_residuals) {
        v.clear();
      }
      for (int r = 0; r < est_rows; ++r) {
        const int y = y0 + r;
        for (int z = 0; z < cube.bands; ++z) {
          const std::size_t brow = static_cast<std::size_t>(z) * grid.blocks_x;
          for (int x = 0; x < cube.columns; ++x) {
            const auto p = predictor.predict(z, x);
            const std::int32_t s = cube.at(z, y, x);
            block_residuals[brow + x / grid.block_w].push_back(s - p.predicted);
            predictor.update(z, x, s, p);
          }
        }
        predictor.end_line();
      }
      predictor.restore(snap);

      std::vector<BlockStats> blocks(static_cast<std::size_t>(n_blocks));
      for (int z = 0; z < cube.bands; ++z) {
        for (int bx = 0; bx < grid.blocks_x; ++bx) {
          const std::size_t idx = static_cast<std::size_t>(z) * grid.blocks_x + bx;
          BlockStats &blk = blocks[idx];
          blk.band = z;
          blk.bx = bx;
          blk.pixel_count = grid.block_pixels(bx, sy);
          const auto var = estimate_variance(block_residuals[idx]);
          blk.has_estimate = var.has_value();
          blk.sigma2_raw = var.value_or(0.0);
        }
      }

      SliceAllocatorInput input;
      input.blocks_x = grid.blocks_x;
      input.full_block_pixels = grid.block_w * grid.block_h;
      input.slice_pixels = grid.slice_pixels(sy);
      input.slice_target_bpp = slice_target;
      input.global_target_bpp = global_target;
      input.clip = config.clip;
      input.lambda_init = config.lambda_init;
      input.max_outer_iters = config.max_outer_iters;
      input.max_lambda_halvings = config.max_lambda_halvings;
      const SliceAllocation alloc = allocate_slice(blocks, input, prev_steps, rd);
      steps = alloc.steps;
      skips.assign(alloc.skip_flags.begin(), alloc.skip_flags.end());
      result.target_missed = result.target_missed || alloc.infeasible;
    } else {
      steps.assign(static_cast<std::size_t>(n_blocks),
                   config.mode == Mode::NearLossless ? config.q_global : 1);
    }

    // Side info.
    std::vector<std::uint8_t> flag_bytes;
    if (flags_present) {
      BitWriter fw;
      for (int i = 0; i < n_blocks; ++i) {
        fw.put_bit(skips[static_cast<std::size_t>(i)]);
      }
      flag_bytes = fw.finish();
    }
    std::vector<std::uint8_t> delta_bytes;
    if (rate_mode) {
      BitWriter dw;
      encode_step_deltas(dw, steps, prev_steps, cube.bands, grid.blocks_x);
      delta_bytes = dw.finish();
    }

    // Encoding pass with in-loop quantization.
    RangeEncoder rc;
    for (int r = 0; r < rows; ++r) {
      const int y = y0 + r;
      for (int z = 0; z < cube.bands; ++z) {
        const std::size_t brow = static_cast<std::size_t>(z) * grid.blocks_x;
        for (int x = 0; x < cube.columns; ++x) {
          const auto p = predictor.predict(z, x);
          const std::size_t idx = brow + x / grid.block_w;
          const int q = steps[idx];
          const std::int32_t s = cube.at(z, y, x);
          std::int32_t dq = 0;
          if (skips[idx]) {
            coder.note_uncoded(z);
          } else {
            dq = quantize(s - p.predicted, q);
            const MappedBounds bounds = residual_bounds(p.predicted, smax, q);
            coder.encode(rc, z, map_residual(dq, bounds));
          }
          const std::int32_t recon =
              std::clamp(p.predicted + dq * q, 0, smax);
          acc.add(z, static_cast<std::uint16_t>(s), static_cast<std::uint16_t>(recon));
          predictor.update(z, x, recon, p);
        }
      }
      predictor.end_line();
    }
    const std::vector<std::uint8_t> rc_bytes = rc.finish();

    const std::size_t payload =
        flag_bytes.size() + delta_bytes.size() + rc_bytes.size();
    put_u32(result.bytes, static_cast<std::uint32_t>(payload));
    result.bytes.insert(result.bytes.end(), flag_bytes.begin(), flag_bytes.end());
    result.bytes.insert(result.bytes.end(), delta_bytes.begin(), delta_bytes.end());
    result.bytes.insert(result.bytes.end(), rc_bytes.begin(), rc_bytes.end());

    const double slice_bits = 8.0 * static_cast<double>(payload + 4);
    const double measured =
        slice_bits / static_cast<double>(grid.slice_pixels(sy));
    result.slice_bpp.push_back(measured);
    if (feedback_on) {
      controller.next_target(measured);
    }
    if (rate_mode) {
      prev_steps = std::move(steps);
    }
  }

  result.report = acc.report(8ull * result.bytes.size(), cube.pixel_count());
  result.recon_hash = acc.hash;
  return result;
}

ImageCube decode(std::span<const std::uint8_t> bytes) {
  const ContainerHeader h = ContainerHeader::read(bytes);
  ImageCube cube(h.bands, static_cast<int>(h.lines), static_cast<int>(h.columns),
                 h.bit_depth);
  const BlockGrid grid =
      build_grid(cube.bands, cube.lines, cube.columns, h.block_w, h.block_h);
  const int n_blocks = grid.blocks_per_slice();
  const int smax = cube.max_value();
  const bool rate_mode = h.mode == Mode::RateA || h.mode == Mode::RateB;
  const bool flags_present = h.skip_flags_present();
  const int max_step = h.clip != 0 ? h.clip : kQMax;

  Predictor predictor(cube.bands, cube.columns, cube.bit_depth, h.pred_bands);
  ResidualCoder coder(cube.bands);
  std::vector<int> prev_steps;
  std::size_t at = ContainerHeader::kSize;

  for (int sy = 0; sy < grid.blocks_y; ++sy) {
    const int rows = grid.slice_rows(sy);
    const int y0 = sy * grid.block_h;
    if (at + 4 > bytes.size()) {
      throw DecodeError("slice " + std::to_string(sy) + ": missing length field");
    }
    const std::uint32_t payload_len = get_u32(bytes, at);
    at += 4;
    if (at + payload_len > bytes.size()) {
      throw DecodeError("slice " + std::to_string(sy) + ": truncated payload");
    }
    const std::span<const std::uint8_t> payload = bytes.subspan(at, payload_len);
    at += payload_len;

    std::size_t offset = 0;
    std::vector<bool> skips(static_cast<std::size_t>(n_blocks), false);
    std::vector<int> steps;
    try {
      if (flags_present) {
        const std::size_t flag_len = (static_cast<std::size_t>(n_blocks) + 7) / 8;
        BitReader fr(payload.subspan(0, std::min(flag_len, payload.size())));
        for (int i = 0; i < n_blocks; ++i) {
          skips[static_cast<std::size_t>(i)] = fr.get_bit();
        }
        offset = flag_len;
      }
      if (rate_mode) {
        BitReader dr(payload.subspan(std::min(offset, payload.size())));
        steps = decode_step_deltas(dr, prev_steps, cube.bands, grid.blocks_x, max_step);
        offset += (dr.bits_consumed() + 7) / 8;
      } else {
        steps.assign(static_cast<std::size_t>(n_blocks),
                     h.mode == Mode::NearLossless ? h.q_or_target : 1);
      }
      if (offset > payload.size()) {
        throw DecodeError("side info overruns payload");
      }

      RangeDecoder rc(payload.subspan(offset));
      for (int r = 0; r < rows; ++r) {
        const int y = y0 + r;
        for (int z = 0; z < cube.bands; ++z) {
          const std::size_t brow = static_cast<std::size_t>(z) * grid.blocks_x;
          for (int x = 0; x < cube.columns; ++x) {
            const auto p = predictor.predict(z, x);
            const std::size_t idx = brow + x / grid.block_w;
            const int q = steps[idx];
            std::int32_t dq = 0;
            if (skips[idx]) {
              coder.note_uncoded(z);
            } else {
              const MappedBounds bounds = residual_bounds(p.predicted, smax, q);
              dq = unmap_residual(coder.decode(rc, z), bounds);
            }
            const std::int32_t recon = std::clamp(p.predicted + dq * q, 0, smax);
            cube.at(z, y, x) = static_cast<std::uint16_t>(recon);
            predictor.update(z, x, recon, p);
          }
        }
        predictor.end_line();
      }
    } catch (const DecodeError &err) {
      throw DecodeError("slice " + std::to_string(sy) + ": " + err.what());
    }
    prev_steps = std::move(steps);
  }
  return cube;
}

std::vector<StatsRow> encode_with_stats(const ImageCube &cube, const CodecConfig &base,
                                        std::span<const double> targets) {
  std::vector<StatsRow> rows;
  for (const double target : targets) {
    for (const Mode mode : {Mode::RateA, Mode::RateB}) {
      CodecConfig cfg = base;
      cfg.mode = mode;
      cfg.target_bpp = target;
      const EncodeResult enc = encode(cube, cfg);
      const ImageCube decoded = decode(enc.bytes);
      const QualityReport q = quality(cube, decoded, 8ull * enc.bytes.size());
      StatsRow row;
      row.mode = mode;
      row.target_bpp = target;
      row.rate_bpp = q.rate_bpp;
      row.snr_db = q.snr_db;
      row.mad = q.mad;
      row.lossless = q.lossless;
      rows.push_back(row);
    }
  }
  return rows;
}

void write_stats_csv(std::ostream &out, std::span<const StatsRow> rows) {
  out << "mode,target_bpp,rate_bpp,snr_db,mad,lossless\n";
  for (const auto &row : rows) {
    out << (row.mode == Mode::RateA ? "A" : "B") << ',' << row.target_bpp << ','
        << row.rate_bpp << ',';
    if (row.lossless) {
      out << ""; // SNR column intentionally empty for perfect reconstructions
    } else {
      out << row.snr_db;
    }
    out << ',' << row.mad << ',' << (row.lossless ? 1 : 0) << '\n';
  }
}

} // namespace rcpc
