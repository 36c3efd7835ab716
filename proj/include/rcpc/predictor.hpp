#ifndef RCPC_PREDICTOR_HPP
#define RCPC_PREDICTOR_HPP

#include <cstdint>
#include <vector>

#include "rcpc/bitio.hpp"

namespace rcpc {

/// Adaptive linear predictor over reconstructed samples, shared verbatim by
/// encoder and decoder. Neighbor-oriented local sums feed a weighted
/// combination of three directional terms and up to P inter-band terms;
/// weights adapt with a sign-sign update on a decaying step schedule.
///
/// Normative scaling rule of this codec:
///   sigma      = W + NW + N + NE          (edge rules below)
///   u_k        = 4*neighbor_k - sigma     (directional), or
///                4*s[z-j][x] - sigma[z-j] (inter-band)
///   d_hat      = sum_k w_k u_k            (weights in Q14 fixed point)
///   s_tilde    = clamp((d_hat + (sigma+1) << 14) >> 15, 0, 2*smax + 1)
///   predicted  = s_tilde >> 1
///
/// Edge rules: first image line uses 4*W (4*previous-band sample at x = 0,
/// mid-range on band 0); first column substitutes the north value for W and
/// NW; the last column reuses N for NE. The first sample of each band
/// predicts the previous-band sample directly (mid-range on band 0).
class Predictor {
public:
  static constexpr int kWeightFracBits = 14;

  Predictor(int bands, int columns, int bit_depth, int pred_bands);

  struct Prediction {
    std::int64_t d_hat = 0;
    std::int32_t local_sum = 0;
    std::int32_t s_tilde = 0;
    std::int32_t predicted = 0;
    int n_terms = 0;
  };

  /// Prediction for (z, current line, x). Bands must be visited in ascending
  /// order within a line, columns in ascending order within a band.
  Prediction predict(int z, int x);

  /// Stores the reconstruction and applies the sign-sign weight update for
  /// the pixel predicted by the immediately preceding predict() call.
  void update(int z, int x, std::int32_t recon, const Prediction &p);

  /// Advances to the next image line once every band finished the line.
  void end_line();

  int current_line() const { return y_; }
  std::int32_t weight(int z, int k) const {
    return weights_[static_cast<std::size_t>(z) * n_weights_ + k];
  }

  struct Snapshot {
    const Predictor *owner = nullptr;
    int y = 0;
    std::vector<std::int32_t> weights;
    std::vector<std::int32_t> prev_row;
    std::vector<std::int32_t> curr_row;
    std::vector<std::int32_t> curr_sigma;
    std::vector<std::uint32_t> t_count;
  };

  Snapshot snapshot() const;
  void restore(const Snapshot &snap);

  bool state_equals(const Predictor &other) const;

private:
  std::int32_t local_sum(int z, int x) const;
  int step_size(std::uint32_t t) const;

  int bands_;
  int columns_;
  int smax_;
  int pred_bands_;
  int n_weights_; // 3 + pred_bands_
  int y_ = 0;

  std::vector<std::int32_t> weights_;
  std::vector<std::uint32_t> t_count_;
  std::vector<std::int32_t> prev_row_;   // bands x columns
  std::vector<std::int32_t> curr_row_;   // bands x columns
  std::vector<std::int32_t> curr_sigma_; // bands x columns
  std::vector<std::int64_t> u_scratch_;
};

/// Range of the quantized residual at a given prediction: values lie in
/// [-lo, hi], both sides known to encoder and decoder.
struct MappedBounds {
  std::int32_t lo = 0;
  std::int32_t hi = 0;
};

inline MappedBounds residual_bounds(std::int32_t predicted, int smax, int q) {
  const std::int32_t h = (q - 1) / 2;
  return {(predicted + h) / q, (smax - predicted + h) / q};
}

/// Signed-to-unsigned interleave folded at the nearer range edge so the
/// mapped alphabet is exactly [0, lo + hi].
std::uint32_t map_residual(std::int32_t value, MappedBounds bounds);
std::int32_t unmap_residual(std::uint32_t mapped, MappedBounds bounds);

} // namespace rcpc

#endif
