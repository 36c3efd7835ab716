#include "rcpc/rd_model.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace rcpc {

LaplaceParam LaplaceParam::from_variance(double sigma2) {
  if (!(sigma2 > 0.0)) {
    throw std::invalid_argument("laplace parameter requires positive variance");
  }
  return {sigma2, std::sqrt(2.0 / sigma2)};
}

std::optional<double> estimate_variance(std::span<const std::int32_t> residuals) {
  if (residuals.size() < 2) {
    return std::nullopt;
  }
  double mean = 0.0;
  for (const auto r : residuals) {
    mean += r;
  }
  mean /= static_cast<double>(residuals.size());
  double acc = 0.0;
  for (const auto r : residuals) {
    const double d = r - mean;
    acc += d * d;
  }
  return acc / static_cast<double>(residuals.size());
}

double augment_variance(double sigma2, int q_prev) {
  if (q_prev < 1 || q_prev % 2 == 0) {
    throw std::invalid_argument("previous step must be odd and >= 1");
  }
  return sigma2 + static_cast<double>(q_prev) * q_prev / 12.0;
}

namespace {

void check_model_args(double lambda, int q) {
  if (!(lambda > 0.0)) {
    throw std::invalid_argument("rate/distortion model requires lambda > 0");
  }
  if (q < 1) {
    throw std::invalid_argument("rate/distortion model requires q >= 1");
  }
}

} // namespace

double rate_from_product(double lambda_q) {
  if (!(lambda_q > 0.0)) {
    throw std::invalid_argument("rate model requires lambda*q > 0");
  }
  const double x = lambda_q;
  const double a = std::exp(-0.5 * x);
  const double p0 = -std::expm1(-0.5 * x); // 1 - e^{-x/2}
  const double one_m_ex = -std::expm1(-x); // 1 - e^{-x}
  const double entropy0 = p0 > 0.0 ? -p0 * std::log2(p0) : 0.0;
  const double bracket = std::log(0.5 * one_m_ex) + 0.5 * x - x / one_m_ex;
  const double r = entropy0 - (a / std::log(2.0)) * bracket;
  return r > 0.0 ? r : 0.0;
}

double distortion_factor(double lambda_q) {
  if (!(lambda_q > 0.0)) {
    throw std::invalid_argument("distortion model requires lambda*q > 0");
  }
  const double x = lambda_q;
  if (x < 1e-4) {
    return 1.0 / 12.0; // high-rate limit; closed form cancels badly here
  }
  const double one_m_ex = -std::expm1(-x);
  const double first = 2.0 - 0.25 * std::exp(-0.5 * x) * (x * x + 4.0 * x + 8.0);
  // e^x folded into the exponentials so large products do not overflow
  const double second_num = (-x * (x + 4.0) - 8.0) * std::exp(-1.5 * x) +
                            (x * (x - 4.0) + 8.0) * std::exp(-0.5 * x);
  const double g = first + second_num / (4.0 * one_m_ex);
  return g / (x * x);
}

double rate(double lambda, int q) {
  check_model_args(lambda, q);
  return rate_from_product(lambda * q);
}

double distortion(double lambda, int q) {
  check_model_args(lambda, q);
  return static_cast<double>(q) * q * distortion_factor(lambda * q);
}

int inverse_rate(double lambda, double target_rate, int q_max) {
  if (!(lambda > 0.0)) {
    throw std::invalid_argument("inverse rate requires lambda > 0");
  }
  if (target_rate < 0.0) {
    throw std::invalid_argument("target rate must be non-negative");
  }
  if (q_max < 1) {
    q_max = 1;
  }
  if (q_max % 2 == 0) {
    --q_max;
  }
  if (rate(lambda, 1) <= target_rate) {
    return 1;
  }
  if (rate(lambda, q_max) > target_rate) {
    return q_max;
  }
  // Rate is strictly decreasing in q: binary search over odd steps for the
  // smallest q with rate <= target, then compare with its predecessor.
  int lo = 1;     // rate(lo) > target
  int hi = q_max; // rate(hi) <= target
  while (hi - lo > 2) {
    int mid = lo + (hi - lo) / 2;
    if (mid % 2 == 0) {
      ++mid;
    }
    if (mid == hi) {
      mid -= 2;
    }
    if (rate(lambda, mid) <= target_rate) {
      hi = mid;
    } else {
      lo = mid;
    }
  }
  const double d_lo = rate(lambda, lo) - target_rate; // positive
  const double d_hi = target_rate - rate(lambda, hi); // non-negative
  return d_lo <= d_hi ? lo : hi;
}

PackedIntArray::PackedIntArray(std::size_t count, int bits) : count_(count), bits_(bits) {
  if (bits < 1 || bits > 32) {
    throw std::invalid_argument("packed array width must be within [1, 32]");
  }
  bytes_.assign((count * bits + 7) / 8, 0);
}

void PackedIntArray::set(std::size_t i, std::uint32_t value) {
  std::size_t bit = i * bits_;
  for (int b = bits_ - 1; b >= 0; --b, ++bit) {
    const std::uint8_t mask = static_cast<std::uint8_t>(1u << (7 - (bit & 7)));
    if ((value >> b) & 1u) {
      bytes_[bit >> 3] |= mask;
    } else {
      bytes_[bit >> 3] &= static_cast<std::uint8_t>(~mask);
    }
  }
}

std::uint32_t PackedIntArray::get(std::size_t i) const {
  std::uint32_t v = 0;
  std::size_t bit = i * bits_;
  for (int b = 0; b < bits_; ++b, ++bit) {
    v = (v << 1) | ((bytes_[bit >> 3] >> (7 - (bit & 7))) & 1u);
  }
  return v;
}

RdTables::RdTables(double lambda_q_max, std::size_t entries) {
  if (entries < 2) {
    throw std::invalid_argument("rd tables need at least two entries");
  }
  if (!(lambda_q_max > kProductMin)) {
    throw std::invalid_argument("lambda*q range is empty");
  }
  product_max_ = lambda_q_max;
  log_min_ = std::log(kProductMin);
  log_step_ = (std::log(lambda_q_max) - log_min_) / static_cast<double>(entries - 1);
  rate_table_ = PackedIntArray(entries, 14);
  dist_table_ = PackedIntArray(entries, 13);
  for (std::size_t i = 0; i < entries; ++i) {
    const double x = std::exp(log_min_ + log_step_ * static_cast<double>(i));
    const double rv = rcpc::rate_from_product(x) * kRateScale;
    const double dv = rcpc::distortion_factor(x) * kDistScale;
    rate_table_.set(i, static_cast<std::uint32_t>(std::min(std::lround(rv), 16383L)));
    dist_table_.set(i, static_cast<std::uint32_t>(std::min(std::lround(dv), 8191L)));
  }
}

double RdTables::interpolate(const PackedIntArray &table, double lambda_q) const {
  const double x = std::clamp(lambda_q, kProductMin, product_max_);
  double t = (std::log(x) - log_min_) / log_step_;
  t = std::clamp(t, 0.0, static_cast<double>(table.size() - 1));
  const std::size_t i0 = static_cast<std::size_t>(t);
  const std::size_t i1 = std::min(i0 + 1, table.size() - 1);
  const double frac = t - static_cast<double>(i0);
  return (1.0 - frac) * table.get(i0) + frac * table.get(i1);
}

double RdTables::rate_from_product(double lambda_q) const {
  return interpolate(rate_table_, lambda_q) / kRateScale;
}

double RdTables::distortion_factor(double lambda_q) const {
  return interpolate(dist_table_, lambda_q) / kDistScale;
}

double RdTables::rate(double lambda, int q) const {
  check_model_args(lambda, q);
  return rate_from_product(lambda * q);
}

double RdTables::distortion(double lambda, int q) const {
  check_model_args(lambda, q);
  return static_cast<double>(q) * q * distortion_factor(lambda * q);
}

} // namespace rcpc
