#include "rcpc/predictor.hpp"

#include <algorithm>
#include <stdexcept>

namespace rcpc {

namespace {
constexpr int kStepInit = 32;
constexpr int kStepDecayShift = 10; // halve every 1024 samples per band
constexpr std::int32_t kWeightMax = 1 << (Predictor::kWeightFracBits + 2);
constexpr std::int32_t kWeightMin = -kWeightMax;
} // namespace

Predictor::Predictor(int bands, int columns, int bit_depth, int pred_bands)
    : bands_(bands), columns_(columns), smax_((1 << bit_depth) - 1),
      pred_bands_(pred_bands), n_weights_(3 + pred_bands) {
  if (bands < 1 || columns < 1) {
    throw std::invalid_argument("predictor dimensions must be positive");
  }
  weights_.assign(static_cast<std::size_t>(bands_) * n_weights_, 0);
  for (int z = 1; z < bands_; ++z) {
    // warm start: most of the prediction comes from the nearest previous band
    weights_[static_cast<std::size_t>(z) * n_weights_ + 3] =
        (7 << kWeightFracBits) / 8;
  }
  t_count_.assign(static_cast<std::size_t>(bands_), 0);
  prev_row_.assign(static_cast<std::size_t>(bands_) * columns_, 0);
  curr_row_.assign(static_cast<std::size_t>(bands_) * columns_, 0);
  curr_sigma_.assign(static_cast<std::size_t>(bands_) * columns_, 0);
  u_scratch_.assign(static_cast<std::size_t>(n_weights_), 0);
}

std::int32_t Predictor::local_sum(int z, int x) const {
  const std::size_t row = static_cast<std::size_t>(z) * columns_;
  if (y_ == 0) {
    if (x > 0) {
      return 4 * curr_row_[row + x - 1];
    }
    if (z > 0) {
      return 4 * curr_row_[row - columns_ + x];
    }
    return 4 * ((smax_ + 1) / 2);
  }
  const std::int32_t north = prev_row_[row + x];
  const std::int32_t north_east = (x + 1 < columns_) ? prev_row_[row + x + 1] : north;
  if (x == 0) {
    return 2 * (north + north_east);
  }
  return curr_row_[row + x - 1] + prev_row_[row + x - 1] + north + north_east;
}

Predictor::Prediction Predictor::predict(int z, int x) {
  const std::size_t row = static_cast<std::size_t>(z) * columns_;
  Prediction p;
  p.local_sum = local_sum(z, x);
  curr_sigma_[row + x] = p.local_sum;
  p.n_terms = 3 + std::min(pred_bands_, z);

  if (y_ == 0) {
    u_scratch_[0] = u_scratch_[1] = u_scratch_[2] = 0;
  } else if (x == 0) {
    const std::int64_t dn = 4 * static_cast<std::int64_t>(prev_row_[row + x]) - p.local_sum;
    u_scratch_[0] = u_scratch_[1] = u_scratch_[2] = dn;
  } else {
    u_scratch_[0] = 4 * static_cast<std::int64_t>(prev_row_[row + x]) - p.local_sum;
    u_scratch_[1] = 4 * static_cast<std::int64_t>(curr_row_[row + x - 1]) - p.local_sum;
    u_scratch_[2] = 4 * static_cast<std::int64_t>(prev_row_[row + x - 1]) - p.local_sum;
  }
  for (int j = 1; j <= p.n_terms - 3; ++j) {
    const std::size_t prev_band = row - static_cast<std::size_t>(j) * columns_;
    u_scratch_[2 + j] =
        4 * static_cast<std::int64_t>(curr_row_[prev_band + x]) - curr_sigma_[prev_band + x];
  }

  const std::int32_t *w = &weights_[static_cast<std::size_t>(z) * n_weights_];
  std::int64_t d_hat = 0;
  for (int k = 0; k < p.n_terms; ++k) {
    d_hat += static_cast<std::int64_t>(w[k]) * u_scratch_[k];
  }
  p.d_hat = d_hat;

  std::int64_t s_tilde;
  if (y_ == 0 && x == 0) {
    // first sample of the band: previous-band sample, mid-range on band 0
    const std::int32_t base =
        z > 0 ? curr_row_[row - columns_] : (smax_ + 1) / 2;
    s_tilde = 2 * static_cast<std::int64_t>(base);
  } else {
    const std::int64_t numerator =
        d_hat + (static_cast<std::int64_t>(p.local_sum + 1) << kWeightFracBits);
    s_tilde = numerator >> (kWeightFracBits + 1);
  }
  s_tilde = std::clamp<std::int64_t>(s_tilde, 0, 2 * static_cast<std::int64_t>(smax_) + 1);
  p.s_tilde = static_cast<std::int32_t>(s_tilde);
  p.predicted = p.s_tilde >> 1;
  return p;
}

int Predictor::step_size(std::uint32_t t) const {
  const std::uint32_t decay = t >> kStepDecayShift;
  if (decay >= 5) {
    return 1;
  }
  return kStepInit >> decay;
}

void Predictor::update(int z, int x, std::int32_t recon, const Prediction &p) {
  const std::size_t row = static_cast<std::size_t>(z) * columns_;
  curr_row_[row + x] = recon;
  const int step = step_size(t_count_[z]);
  ++t_count_[z];
  const std::int32_t err = recon - p.predicted;
  if (err == 0) {
    return;
  }
  const int sgn_err = err > 0 ? 1 : -1;
  std::int32_t *w = &weights_[static_cast<std::size_t>(z) * n_weights_];
  for (int k = 0; k < p.n_terms; ++k) {
    const std::int64_t u = u_scratch_[k];
    if (u == 0) {
      continue;
    }
    const int delta = (u > 0 ? sgn_err : -sgn_err) * step;
    w[k] = std::clamp(w[k] + delta, kWeightMin, kWeightMax);
  }
}

void Predictor::end_line() {
  std::swap(prev_row_, curr_row_);
  ++y_;
}

Predictor::Snapshot Predictor::snapshot() const {
  Snapshot snap;
  snap.owner = this;
  snap.y = y_;
  snap.weights = weights_;
  snap.prev_row = prev_row_;
  snap.curr_row = curr_row_;
  snap.curr_sigma = curr_sigma_;
  snap.t_count = t_count_;
  return snap;
}

void Predictor::restore(const Snapshot &snap) {
  if (snap.owner != this) {
    throw std::invalid_argument("predictor restore: snapshot from a different instance");
  }
  y_ = snap.y;
  weights_ = snap.weights;
  prev_row_ = snap.prev_row;
  curr_row_ = snap.curr_row;
  curr_sigma_ = snap.curr_sigma;
  t_count_ = snap.t_count;
}

bool Predictor::state_equals(const Predictor &other) const {
  return y_ == other.y_ && weights_ == other.weights_ && prev_row_ == other.prev_row_ &&
         curr_row_ == other.curr_row_ && t_count_ == other.t_count_;
}

std::uint32_t map_residual(std::int32_t value, MappedBounds bounds) {
  const std::int32_t t = std::min(bounds.lo, bounds.hi);
  const std::int32_t mag = value < 0 ? -value : value;
  if (mag <= t) {
    return value >= 0 ? static_cast<std::uint32_t>(2 * mag)
                      : static_cast<std::uint32_t>(2 * mag - 1);
  }
  return static_cast<std::uint32_t>(t + mag);
}

std::int32_t unmap_residual(std::uint32_t mapped, MappedBounds bounds) {
  const std::int32_t t = std::min(bounds.lo, bounds.hi);
  if (mapped > static_cast<std::uint32_t>(bounds.lo + bounds.hi)) {
    throw DecodeError("mapped residual outside alphabet");
  }
  if (mapped <= static_cast<std::uint32_t>(2 * t)) {
    const std::int32_t half = static_cast<std::int32_t>((mapped + 1) / 2);
    return (mapped & 1u) ? -half : half;
  }
  const std::int32_t mag = static_cast<std::int32_t>(mapped) - t;
  return bounds.hi > bounds.lo ? mag : -mag;
}

} // namespace rcpc
