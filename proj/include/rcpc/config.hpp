#ifndef RCPC_CONFIG_HPP
#define RCPC_CONFIG_HPP

#include <cstdint>
#include <stdexcept>

namespace rcpc {

enum class Mode : std::uint8_t {
  Lossless = 0,
  NearLossless = 1,
  RateA = 2,
  RateB = 3,
};

enum class MemoryPolicy : std::uint8_t {
  Memory1 = 0,
  LongMemory = 1,
  Window = 2,
};

// Largest quantization step the allocator will ever consider.
inline constexpr int kQMax = 255;

struct CodecConfig {
  Mode mode = Mode::Lossless;
  int q_global = 1;        // near-lossless step (odd)
  double target_bpp = 0.0; // rate modes
  int block_w = 16;
  int block_h = 16;
  int pred_bands = 3;      // P
  int est_lines = 2;
  double tau = 5.0;
  int clip = 0;            // 0 = unconstrained; otherwise odd max step
  double lambda_init = 50.0;
  MemoryPolicy policy = MemoryPolicy::Memory1;
  int window = 1;          // history length for MemoryPolicy::Window
  int max_outer_iters = 10;
  int max_lambda_halvings = 8;
  bool use_rd_tables = false;

  void validate() const {
    if (block_w <= 0 || block_h <= 0 || block_w > 255 || block_h > 255) {
      throw std::invalid_argument("block size must be within [1, 255]");
    }
    if (pred_bands < 0 || pred_bands > 255) {
      throw std::invalid_argument("prediction bands must be within [0, 255]");
    }
    if (est_lines < 1 || est_lines > block_h) {
      throw std::invalid_argument("est_lines must be within [1, block_h]");
    }
    if (mode == Mode::NearLossless && (q_global < 1 || q_global % 2 == 0)) {
      throw std::invalid_argument("near-lossless step must be odd and >= 1");
    }
    if ((mode == Mode::RateA || mode == Mode::RateB) && !(target_bpp > 0.0)) {
      throw std::invalid_argument("target rate must be positive");
    }
    if (clip != 0 && (clip < 1 || clip % 2 == 0 || clip > kQMax)) {
      throw std::invalid_argument("clip must be odd and within [1, 255]");
    }
    if (!(tau > 0.0)) {
      throw std::invalid_argument("tau must be positive");
    }
    if (policy == MemoryPolicy::Window && window < 1) {
      throw std::invalid_argument("window length must be >= 1");
    }
    if (max_outer_iters < 1 || max_lambda_halvings < 0) {
      throw std::invalid_argument("iteration limits out of range");
    }
  }

  int max_step() const { return clip > 0 ? clip : kQMax; }
  bool rate_controlled() const { return mode == Mode::RateA || mode == Mode::RateB; }
};

} // namespace rcpc

#endif
