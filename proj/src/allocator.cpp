#include "rcpc/allocator.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>

namespace rcpc {

double skip_fraction(double target_bpp) {
  if (!(target_bpp > 0.0)) {
    throw std::invalid_argument("skip fraction requires a positive target");
  }
  if (target_bpp > 1.0) {
    return 0.0;
  }
  const double d = 1.0 - target_bpp;
  return d * d * d;
}

void classify(std::span<BlockStats> blocks, double global_target_bpp, bool allow_skip) {
  for (auto &blk : blocks) {
    blk.cls = (!blk.has_estimate || blk.sigma2_raw < kInftyVarianceThreshold)
                  ? BlockClass::Infty
                  : BlockClass::Normal;
  }
  if (!allow_skip) {
    return;
  }
  const double p_s = skip_fraction(global_target_bpp);
  if (p_s <= 0.0) {
    return;
  }
  const std::size_t want =
      static_cast<std::size_t>(std::ceil(p_s * static_cast<double>(blocks.size())));
  std::vector<std::size_t> candidates;
  for (std::size_t i = 0; i < blocks.size(); ++i) {
    if (blocks[i].cls == BlockClass::Normal) {
      candidates.push_back(i);
    }
  }
  std::sort(candidates.begin(), candidates.end(), [&](std::size_t a, std::size_t b) {
    if (blocks[a].lambda != blocks[b].lambda) {
      return blocks[a].lambda > blocks[b].lambda;
    }
    return a < b;
  });
  const std::size_t n_skip = std::min(want, candidates.size());
  for (std::size_t k = 0; k < n_skip; ++k) {
    blocks[candidates[k]].cls = BlockClass::Skip;
  }
}

std::vector<double> project_l1(std::span<const double> values, double target) {
  if (!(target > 0.0)) {
    throw std::invalid_argument("projection target must be positive");
  }
  std::vector<double> sorted(values.begin(), values.end());
  std::sort(sorted.begin(), sorted.end(), std::greater<>());
  double prefix = 0.0;
  double theta = 0.0;
  std::size_t rho = 0;
  double rho_prefix = 0.0;
  for (std::size_t j = 0; j < sorted.size(); ++j) {
    prefix += sorted[j];
    const double candidate = (prefix - target) / static_cast<double>(j + 1);
    if (sorted[j] - candidate > 0.0) {
      rho = j + 1;
      rho_prefix = prefix;
    }
  }
  if (rho == 0) {
    throw std::invalid_argument("projection input must contain positive mass");
  }
  theta = (rho_prefix - target) / static_cast<double>(rho);
  std::vector<double> projected(values.size());
  for (std::size_t i = 0; i < values.size(); ++i) {
    projected[i] = std::max(values[i] - theta, 0.0);
  }
  return projected;
}

std::vector<int> initial_steps(std::span<const double> projected_rates,
                               std::span<const double> lambdas, int max_step) {
  if (projected_rates.size() != lambdas.size()) {
    throw std::invalid_argument("initial steps: size mismatch");
  }
  std::vector<int> steps(projected_rates.size());
  for (std::size_t i = 0; i < steps.size(); ++i) {
    steps[i] = inverse_rate(lambdas[i], projected_rates[i], max_step);
  }
  return steps;
}

void assign_infty(std::span<BlockStats> blocks, int blocks_x,
                  std::span<const int> prev_slice_steps) {
  const int bands = static_cast<int>(blocks.size()) / blocks_x;
  for (int z = 0; z < bands; ++z) {
    int last_normal_q = -1;
    for (int bx = 0; bx < blocks_x; ++bx) {
      const std::size_t idx = static_cast<std::size_t>(z) * blocks_x + bx;
      BlockStats &blk = blocks[idx];
      if (blk.cls == BlockClass::Normal) {
        last_normal_q = blk.q;
        continue;
      }
      if (blk.cls != BlockClass::Infty) {
        continue;
      }
      if (bx > 0 && blocks[idx - 1].cls == BlockClass::Skip) {
        blk.cls = BlockClass::Skip;
        continue;
      }
      if (last_normal_q > 0) {
        blk.q = last_normal_q;
      } else if (!prev_slice_steps.empty()) {
        blk.q = prev_slice_steps[idx];
      } else {
        blk.q = 1;
      }
    }
  }
}

AdjustedTarget infty_target_adjust(double target, std::span<const BlockStats> blocks,
                                   std::span<const double> weights,
                                   const RdBackend &rd) {
  double adjusted = target;
  for (std::size_t i = 0; i < blocks.size(); ++i) {
    const auto &blk = blocks[i];
    if (blk.cls != BlockClass::Infty) {
      continue;
    }
    const double lambda_noise = std::sqrt(24.0 / (static_cast<double>(blk.q) * blk.q));
    adjusted -= weights[i] * rd.rate(lambda_noise, blk.q);
  }
  if (adjusted < 0.0) {
    return {0.0, true};
  }
  return {adjusted, false};
}

namespace {

struct ChainEval {
  double rate = 0.0;
  double distortion = 0.0;
};

ChainEval evaluate_chain(std::span<const int> steps, std::span<const double> lambdas,
                         std::span<const double> weights, const RdBackend &rd) {
  ChainEval e;
  for (std::size_t i = 0; i < steps.size(); ++i) {
    e.rate += weights[i] * rd.rate(lambdas[i], steps[i]);
    e.distortion += weights[i] * rd.distortion(lambdas[i], steps[i]);
  }
  return e;
}

// One Selective Diet pass: the output chain starts at the -2 level and nodes
// move to the promote level (default+2, or default for the underflow pass) in
// decreasing J order until the rate is back under the target.
std::vector<int> run_iteration(std::span<const int> defaults,
                               std::span<const double> lambdas,
                               std::span<const double> weights, double lambda_mult,
                               double target, int max_step, bool promote_to_plus2,
                               const RdBackend &rd) {
  const std::size_t n = defaults.size();
  std::vector<int> minus(n);
  std::vector<int> plus(n);
  std::vector<int> chain(n);
  std::vector<double> cost(n);
  double chain_rate = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    minus[i] = std::max(defaults[i] - 2, 1);
    plus[i] = promote_to_plus2 ? std::min(defaults[i] + 2, max_step) : defaults[i];
    chain[i] = minus[i];
    chain_rate += weights[i] * rd.rate(lambdas[i], minus[i]);
    cost[i] = weights[i] *
              ((rd.distortion(lambdas[i], minus[i]) - rd.distortion(lambdas[i], plus[i])) +
               lambda_mult * (rd.rate(lambdas[i], minus[i]) - rd.rate(lambdas[i], plus[i])));
  }
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), 0);
  std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    if (cost[a] != cost[b]) {
      return cost[a] > cost[b];
    }
    return a < b;
  });
  for (const std::size_t idx : order) {
    if (chain_rate <= target) {
      break;
    }
    chain_rate += weights[idx] *
                  (rd.rate(lambdas[idx], plus[idx]) - rd.rate(lambdas[idx], minus[idx]));
    chain[idx] = plus[idx];
  }
  return chain;
}

} // namespace

SelectiveDietResult selective_diet(std::span<const int> steps,
                                   std::span<const double> lambdas,
                                   std::span<const double> weights, double target,
                                   const SelectiveDietParams &params,
                                   const RdBackend &rd) {
  SelectiveDietResult result;
  const std::size_t n = steps.size();
  if (n == 0) {
    return result;
  }

  std::vector<int> current(steps.begin(), steps.end());
  for (auto &q : current) {
    q = std::clamp(q | 1, 1, params.max_step);
  }

  std::vector<int> best;
  double best_dist = 0.0;
  bool have_best = false;
  const auto consider = [&](const std::vector<int> &chain, const ChainEval &e) {
    if (e.rate <= target && (!have_best || e.distortion < best_dist)) {
      best = chain;
      best_dist = e.distortion;
      have_best = true;
    }
  };

  ChainEval cur_eval = evaluate_chain(current, lambdas, weights, rd);
  consider(current, cur_eval);

  // Underutilized projector output: one pass with the default and -2 levels
  // only, since the mixing lemma does not apply below the target.
  if (cur_eval.rate <= 0.99 * target) {
    auto chain = run_iteration(current, lambdas, weights, params.lambda_mult, target,
                               params.max_step, /*promote_to_plus2=*/false, rd);
    cur_eval = evaluate_chain(chain, lambdas, weights, rd);
    consider(chain, cur_eval);
    current = std::move(chain);
  }

  double lambda_mult = params.lambda_mult;
  double prev_dist = cur_eval.distortion;
  int halvings = 0;
  for (int iter = 1; iter <= params.max_iters; ++iter) {
    auto chain = run_iteration(current, lambdas, weights, lambda_mult, target,
                               params.max_step, /*promote_to_plus2=*/true, rd);
    const ChainEval e = evaluate_chain(chain, lambdas, weights, rd);
    consider(chain, e);
    if (chain == current) {
      break; // fixed point; no level move possible
    }
    if (iter > 1 && e.distortion >= prev_dist) {
      if (halvings < params.max_lambda_halvings) {
        lambda_mult *= 0.5;
        ++halvings;
        continue; // retry the same iteration with the softer multiplier
      }
      if (e.rate <= target) {
        break; // distortion no longer improving
      }
    }
    prev_dist = e.distortion;
    current = std::move(chain);
  }

  if (!have_best) {
    // Target unreachable: report the all-clip chain.
    result.steps.assign(n, params.max_step);
    const ChainEval e = evaluate_chain(result.steps, lambdas, weights, rd);
    result.rate = e.rate;
    result.distortion = e.distortion;
    result.infeasible = true;
    return result;
  }
  const ChainEval e = evaluate_chain(best, lambdas, weights, rd);
  result.steps = std::move(best);
  result.rate = e.rate;
  result.distortion = e.distortion;
  return result;
}

SliceAllocation allocate_slice(std::vector<BlockStats> &blocks,
                               const SliceAllocatorInput &input,
                               std::span<const int> prev_slice_steps,
                               const RdBackend &rd) {
  const std::size_t n = blocks.size();
  const int max_step = input.clip > 0 ? input.clip : kQMax;
  const bool allow_skip = input.clip == 0;

  std::vector<double> weights(n);
  for (std::size_t i = 0; i < n; ++i) {
    BlockStats &blk = blocks[i];
    const int q_prev = prev_slice_steps.empty() ? 1 : prev_slice_steps[i];
    blk.sigma2_tilde = augment_variance(blk.has_estimate ? blk.sigma2_raw : 0.0, q_prev);
    blk.lambda = std::sqrt(2.0 / blk.sigma2_tilde);
    weights[i] = static_cast<double>(blk.pixel_count) / input.full_block_pixels;
  }

  classify(blocks, input.global_target_bpp, allow_skip);

  // Bit budget in per-block-average units; the one-bit skip flags come out of
  // the slice budget when present.
  const double flag_bits =
      input.global_target_bpp <= 1.0 && allow_skip ? static_cast<double>(n) : 0.0;
  const double budget_bits =
      input.slice_target_bpp * static_cast<double>(input.slice_pixels) - flag_bits;
  const double target_units = std::max(budget_bits, 0.0) / input.full_block_pixels;

  std::vector<std::size_t> normal_idx;
  for (std::size_t i = 0; i < n; ++i) {
    if (blocks[i].cls == BlockClass::Normal) {
      normal_idx.push_back(i);
    }
  }

  SliceAllocation alloc;
  alloc.steps.assign(n, 1);
  alloc.skip_flags.assign(n, false);

  if (!normal_idx.empty()) {
    std::vector<double> lossless_rates(normal_idx.size());
    std::vector<double> lambdas(normal_idx.size());
    std::vector<double> normal_weights(normal_idx.size());
    for (std::size_t k = 0; k < normal_idx.size(); ++k) {
      const auto &blk = blocks[normal_idx[k]];
      lambdas[k] = blk.lambda;
      normal_weights[k] = weights[normal_idx[k]];
      lossless_rates[k] = normal_weights[k] * rd.rate(blk.lambda, 1);
    }
    std::vector<int> init;
    if (target_units > 0.0) {
      const auto projected = project_l1(lossless_rates, target_units);
      std::vector<double> per_block_rates(projected.size());
      for (std::size_t k = 0; k < projected.size(); ++k) {
        per_block_rates[k] = projected[k] / normal_weights[k];
      }
      init = initial_steps(per_block_rates, lambdas, max_step);
    } else {
      init.assign(normal_idx.size(), max_step);
    }
    for (std::size_t k = 0; k < normal_idx.size(); ++k) {
      blocks[normal_idx[k]].q = init[k];
    }
  }

  assign_infty(blocks, input.blocks_x, prev_slice_steps);

  const AdjustedTarget adjusted = infty_target_adjust(target_units, blocks, weights, rd);
  alloc.effective_target = adjusted.target;
  alloc.target_clamped = adjusted.clamped;

  if (!normal_idx.empty()) {
    std::vector<int> init(normal_idx.size());
    std::vector<double> lambdas(normal_idx.size());
    std::vector<double> normal_weights(normal_idx.size());
    for (std::size_t k = 0; k < normal_idx.size(); ++k) {
      init[k] = blocks[normal_idx[k]].q;
      lambdas[k] = blocks[normal_idx[k]].lambda;
      normal_weights[k] = weights[normal_idx[k]];
    }
    SelectiveDietParams params;
    params.lambda_mult = input.lambda_init;
    params.max_iters = input.max_outer_iters;
    params.max_lambda_halvings = input.max_lambda_halvings;
    params.max_step = max_step;
    const SelectiveDietResult sd =
        selective_diet(init, lambdas, normal_weights, adjusted.target, params, rd);
    for (std::size_t k = 0; k < normal_idx.size(); ++k) {
      blocks[normal_idx[k]].q = sd.steps[k];
    }
    alloc.predicted_rate = sd.rate;
    alloc.infeasible = sd.infeasible;
  }

  // SKIP blocks carry a chain-neutral nominal step so the side-info deltas
  // stay cheap and the next slice has a q_prev.
  const int bands = static_cast<int>(n) / input.blocks_x;
  for (int z = 0; z < bands; ++z) {
    for (int bx = 0; bx < input.blocks_x; ++bx) {
      const std::size_t idx = static_cast<std::size_t>(z) * input.blocks_x + bx;
      if (blocks[idx].cls != BlockClass::Skip) {
        continue;
      }
      if (bx > 0) {
        blocks[idx].q = blocks[idx - 1].q;
      } else if (!prev_slice_steps.empty()) {
        blocks[idx].q = prev_slice_steps[idx];
      } else {
        blocks[idx].q = 1;
      }
    }
  }

  double total_dist = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    const BlockStats &blk = blocks[i];
    alloc.steps[i] = blk.q;
    alloc.skip_flags[i] = blk.cls == BlockClass::Skip;
    switch (blk.cls) {
    case BlockClass::Normal:
      total_dist += weights[i] * rd.distortion(blk.lambda, blk.q);
      break;
    case BlockClass::Skip:
      total_dist += weights[i] * blk.sigma2_tilde; // zeroed residuals
      break;
    case BlockClass::Infty: {
      const double lambda_noise = std::sqrt(24.0 / (static_cast<double>(blk.q) * blk.q));
      total_dist += weights[i] * rd.distortion(lambda_noise, blk.q);
      break;
    }
    }
    if (blk.q < 1 || blk.q % 2 == 0 || blk.q > max_step) {
      throw std::logic_error("allocator produced an invalid step");
    }
  }
  alloc.predicted_distortion = total_dist;
  return alloc;
}

} // namespace rcpc
