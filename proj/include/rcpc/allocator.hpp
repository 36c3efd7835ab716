#ifndef RCPC_ALLOCATOR_HPP
#define RCPC_ALLOCATOR_HPP

#include <cstdint>
#include <span>
#include <vector>

#include "rcpc/config.hpp"
#include "rcpc/rd_model.hpp"

namespace rcpc {

enum class BlockClass : std::uint8_t { Normal, Infty, Skip };

struct BlockStats {
  int band = 0;
  int bx = 0;
  int pixel_count = 0;
  bool has_estimate = false;
  double sigma2_raw = 0.0;   // lossless-pass estimate, before augmentation
  double sigma2_tilde = 0.0; // after adding q_prev^2 / 12
  double lambda = 0.0;       // sqrt(2 / sigma2_tilde)
  BlockClass cls = BlockClass::Normal;
  int q = 1;
};

struct SliceAllocation {
  std::vector<int> steps;          // per block, odd, within [1, clip]
  std::vector<bool> skip_flags;    // per block
  double predicted_rate = 0.0;     // per-block-average units, NORMAL blocks
  double predicted_distortion = 0.0;
  double effective_target = 0.0;   // after the INFTY adjustment
  bool target_clamped = false;     // INFTY adjustment exceeded the target
  bool infeasible = false;         // even the all-clip chain stays above target
};

// Blocks with raw variance below this are INFTY: their rate is dominated by
// quantization noise the lossless estimation pass cannot see.
inline constexpr double kInftyVarianceThreshold = 0.1;

/// Fraction of blocks to skip at low target rates: (1 - T)^3 for T <= 1.
double skip_fraction(double target_bpp);

/// Marks INFTY blocks (raw variance below threshold or no estimate), then at
/// global targets <= 1 bpp turns the ceil(p_s * N_B) non-INFTY blocks of
/// largest lambda into SKIP blocks. Remaining blocks stay NORMAL.
/// When allow_skip is false (hybrid max-error mode) no block is skipped.
void classify(std::span<BlockStats> blocks, double global_target_bpp, bool allow_skip);

/// Euclidean projection of `values` onto the simplex
/// { r : sum(r) = target, r >= 0 } by sort and threshold; O(N log N).
std::vector<double> project_l1(std::span<const double> values, double target);

/// Per-block steps from projected rates: nearest-rate odd step, clamped to
/// [1, max_step].
std::vector<int> initial_steps(std::span<const double> projected_rates,
                               std::span<const double> lambdas, int max_step);

/// Resolves INFTY block steps from the nearest preceding NORMAL block in the
/// same band, else the previous slice, else 1; an INFTY block directly after
/// a SKIP block becomes SKIP itself.
void assign_infty(std::span<BlockStats> blocks, int blocks_x,
                  std::span<const int> prev_slice_steps);

struct AdjustedTarget {
  double target = 0.0;
  bool clamped = false;
};

/// Removes the expected quantization-noise rate of non-SKIP INFTY blocks from
/// the slice target: each contributes weight * R(sqrt(24/q^2), q).
AdjustedTarget infty_target_adjust(double target, std::span<const BlockStats> blocks,
                                   std::span<const double> weights,
                                   const RdBackend &rd);

struct SelectiveDietParams {
  double lambda_mult = 50.0;
  int max_iters = 10;
  int max_lambda_halvings = 8;
  int max_step = kQMax;
};

struct SelectiveDietResult {
  std::vector<int> steps;
  double rate = 0.0;
  double distortion = 0.0;
  bool infeasible = false;
};

/// Local search over the -2 / default / +2 step levels: each iteration
/// rebuilds the chain from the -2 level and promotes nodes to +2 in
/// decreasing order of J = (D(-2) - D(+2)) + lambda (R(-2) - R(+2)) until the
/// predicted rate drops back under the target. lambda halves whenever the
/// distortion stops improving; the best feasible chain seen wins.
SelectiveDietResult selective_diet(std::span<const int> steps,
                                   std::span<const double> lambdas,
                                   std::span<const double> weights, double target,
                                   const SelectiveDietParams &params,
                                   const RdBackend &rd);

struct SliceAllocatorInput {
  int blocks_x = 0;
  int full_block_pixels = 0;
  std::size_t slice_pixels = 0;
  double slice_target_bpp = 0.0;
  double global_target_bpp = 0.0;
  int clip = 0; // 0 = unconstrained
  double lambda_init = 50.0;
  int max_outer_iters = 10;
  int max_lambda_halvings = 8;
};

/// Full per-slice pipeline: augmentation, classification, projection, INFTY
/// handling, target adjustment and Selective Diet. prev_slice_steps is empty
/// on slice 0. Blocks arrive in band-major scan order with band/bx/
/// pixel_count/sigma2_raw/has_estimate filled in.
SliceAllocation allocate_slice(std::vector<BlockStats> &blocks,
                               const SliceAllocatorInput &input,
                               std::span<const int> prev_slice_steps,
                               const RdBackend &rd);

} // namespace rcpc

#endif
