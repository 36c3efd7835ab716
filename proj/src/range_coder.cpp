#include "rcpc/range_coder.hpp"

#include <stdexcept>

namespace rcpc {

AdaptiveModel::AdaptiveModel(int alphabet_size) : size_(alphabet_size) {
  if (alphabet_size < 1 || static_cast<std::uint32_t>(alphabet_size) > kRescaleLimit / 2) {
    throw std::invalid_argument("adaptive model: alphabet size out of range");
  }
  tree_span_ = 1;
  while (tree_span_ < size_) {
    tree_span_ <<= 1;
  }
  tree_.assign(static_cast<std::size_t>(tree_span_) + 1, 0);
  total_ = 0;
  for (int s = 0; s < size_; ++s) {
    add(s, 1);
  }
}

std::uint32_t AdaptiveModel::prefix(int count) const {
  std::uint32_t sum = 0;
  for (int i = count; i > 0; i -= i & (-i)) {
    sum += tree_[i];
  }
  return sum;
}

void AdaptiveModel::add(int symbol, std::int32_t delta) {
  for (int i = symbol + 1; i <= tree_span_; i += i & (-i)) {
    tree_[i] = static_cast<std::uint32_t>(static_cast<std::int64_t>(tree_[i]) + delta);
  }
  total_ = static_cast<std::uint32_t>(static_cast<std::int64_t>(total_) + delta);
}

AdaptiveModel::Interval AdaptiveModel::interval(int symbol) const {
  const std::uint32_t lo = prefix(symbol);
  const std::uint32_t hi = prefix(symbol + 1);
  return {lo, hi - lo, total_};
}

int AdaptiveModel::find(std::uint32_t target, Interval &out) const {
  int pos = 0;
  std::uint32_t rem = target;
  for (int step = tree_span_; step > 0; step >>= 1) {
    const int next = pos + step;
    if (next <= tree_span_ && tree_[next] <= rem) {
      pos = next;
      rem -= tree_[next];
    }
  }
  if (pos >= size_) {
    throw DecodeError("adaptive model: target outside alphabet");
  }
  out.cum = target - rem;
  out.freq = prefix(pos + 1) - out.cum;
  out.total = total_;
  return pos;
}

void AdaptiveModel::update(int symbol) {
  add(symbol, static_cast<std::int32_t>(kIncrement));
  if (total_ > kRescaleLimit) {
    rescale();
  }
}

void AdaptiveModel::rescale() {
  std::vector<std::uint32_t> freqs(static_cast<std::size_t>(size_));
  std::uint32_t lo = 0;
  for (int s = 0; s < size_; ++s) {
    const std::uint32_t hi = prefix(s + 1);
    freqs[s] = (hi - lo + 1) >> 1; // halve, floor at 1
    lo = hi;
  }
  std::fill(tree_.begin(), tree_.end(), 0);
  total_ = 0;
  for (int s = 0; s < size_; ++s) {
    add(s, static_cast<std::int32_t>(freqs[s]));
  }
}

ResidualCoder::ResidualCoder(int bands) {
  models_.reserve(static_cast<std::size_t>(bands) * 4);
  for (int i = 0; i < bands * 4; ++i) {
    models_.emplace_back(256);
  }
  prev_mapped_.assign(static_cast<std::size_t>(bands), 0);
}

void ResidualCoder::reset_contexts() {
  std::fill(prev_mapped_.begin(), prev_mapped_.end(), 0);
}

void ResidualCoder::encode(RangeEncoder &rc, int band, std::uint32_t mapped) {
  AdaptiveModel &model = model_for(band);
  if (mapped < kEscape) {
    rc_encode(rc, model, static_cast<int>(mapped));
  } else {
    rc_encode(rc, model, static_cast<int>(kEscape));
    const std::uint64_t tail = mapped - kEscape + 1;
    int len = 0;
    while ((tail >> (len + 1)) != 0) {
      ++len;
    }
    for (int i = 0; i < len; ++i) {
      rc.encode_raw_bit(false);
    }
    for (int i = len; i >= 0; --i) {
      rc.encode_raw_bit(((tail >> i) & 1u) != 0);
    }
  }
  prev_mapped_[band] = mapped;
}

std::uint32_t ResidualCoder::decode(RangeDecoder &rc, int band) {
  AdaptiveModel &model = model_for(band);
  std::uint32_t mapped = static_cast<std::uint32_t>(rc_decode(rc, model));
  if (mapped == kEscape) {
    int len = 0;
    while (!rc.decode_raw_bit()) {
      if (++len > 32) {
        throw DecodeError("residual escape: prefix too long");
      }
    }
    std::uint64_t tail = 1;
    for (int i = 0; i < len; ++i) {
      tail = (tail << 1) | (rc.decode_raw_bit() ? 1u : 0u);
    }
    mapped = static_cast<std::uint32_t>(kEscape + tail - 1);
  }
  prev_mapped_[band] = mapped;
  return mapped;
}

} // namespace rcpc
