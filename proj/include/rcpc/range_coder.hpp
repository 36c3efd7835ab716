#ifndef RCPC_RANGE_CODER_HPP
#define RCPC_RANGE_CODER_HPP

#include <cstdint>
#include <span>
#include <vector>

#include "rcpc/bitio.hpp"

namespace rcpc {

/// Carry-less byte-oriented range coder: 64-bit low accumulator, 32-bit
/// range, shift-based renormalization. Flush emits at most 5 bytes; the
/// first byte of every stream is a dummy zero consumed at decoder init.
class RangeEncoder {
public:
  void encode(std::uint32_t cum, std::uint32_t freq, std::uint32_t total) {
    range_ /= total;
    low_ += static_cast<std::uint64_t>(cum) * range_;
    range_ *= freq;
    while (range_ < kTop) {
      shift_low();
      range_ <<= 8;
    }
  }

  void encode_raw_bit(bool bit) { encode(bit ? 1u : 0u, 1u, 2u); }

  std::vector<std::uint8_t> finish() {
    for (int i = 0; i < 5; ++i) {
      shift_low();
    }
    return std::move(bytes_);
  }

  std::size_t byte_count() const { return bytes_.size(); }

private:
  static constexpr std::uint32_t kTop = 1u << 24;

  void shift_low() {
    if (static_cast<std::uint32_t>(low_) < 0xFF000000u || (low_ >> 32) != 0) {
      const std::uint8_t carry = static_cast<std::uint8_t>(low_ >> 32);
      bytes_.push_back(static_cast<std::uint8_t>(cache_ + carry));
      while (--pending_ != 0) {
        bytes_.push_back(static_cast<std::uint8_t>(0xFF + carry));
      }
      cache_ = static_cast<std::uint8_t>(low_ >> 24);
    }
    ++pending_;
    low_ = (low_ << 8) & 0xFFFFFFFFull;
  }

  std::vector<std::uint8_t> bytes_;
  std::uint64_t low_ = 0;
  std::uint32_t range_ = 0xFFFFFFFFu;
  std::uint8_t cache_ = 0;
  std::uint64_t pending_ = 1;
};

class RangeDecoder {
public:
  explicit RangeDecoder(std::span<const std::uint8_t> bytes) : bytes_(bytes) {
    for (int i = 0; i < 5; ++i) { // dummy byte + 4 code bytes
      code_ = (code_ << 8) | next_byte();
    }
  }

  std::uint32_t decode_target(std::uint32_t total) {
    range_ /= total;
    std::uint32_t target = code_ / range_;
    if (target >= total) {
      target = total - 1;
    }
    return target;
  }

  void decode_update(std::uint32_t cum, std::uint32_t freq) {
    code_ -= cum * range_;
    range_ *= freq;
    while (range_ < kTop) {
      code_ = (code_ << 8) | next_byte();
      range_ <<= 8;
    }
  }

  bool decode_raw_bit() {
    const bool bit = decode_target(2u) != 0;
    decode_update(bit ? 1u : 0u, 1u);
    return bit;
  }

  std::size_t bytes_consumed() const { return pos_; }

private:
  static constexpr std::uint32_t kTop = 1u << 24;

  std::uint8_t next_byte() {
    if (pos_ >= bytes_.size()) {
      throw DecodeError("range decoder: truncated stream");
    }
    return bytes_[pos_++];
  }

  std::span<const std::uint8_t> bytes_;
  std::size_t pos_ = 0;
  std::uint32_t code_ = 0;
  std::uint32_t range_ = 0xFFFFFFFFu;
};

/// Adaptive cumulative-frequency model over a fixed alphabet, backed by a
/// Fenwick tree. Frequencies never drop below 1; the table is halved once
/// the total crosses the range-coder precision bound.
class AdaptiveModel {
public:
  explicit AdaptiveModel(int alphabet_size);

  struct Interval {
    std::uint32_t cum;
    std::uint32_t freq;
    std::uint32_t total;
  };

  Interval interval(int symbol) const;
  // Finds the symbol whose interval covers `target` and returns it with its
  // interval. target must be < total().
  int find(std::uint32_t target, Interval &out) const;
  void update(int symbol);

  std::uint32_t total() const { return total_; }
  int alphabet_size() const { return size_; }

private:
  std::uint32_t prefix(int count) const; // sum of freqs of symbols [0, count)
  void add(int symbol, std::int32_t delta);
  void rescale();

  int size_;
  int tree_span_; // smallest power of two >= size_
  std::vector<std::uint32_t> tree_;
  std::uint32_t total_;

  static constexpr std::uint32_t kIncrement = 32;
  static constexpr std::uint32_t kRescaleLimit = 1u << 16;
};

inline void rc_encode(RangeEncoder &rc, AdaptiveModel &model, int symbol) {
  const auto iv = model.interval(symbol);
  rc.encode(iv.cum, iv.freq, iv.total);
  model.update(symbol);
}

inline int rc_decode(RangeDecoder &rc, AdaptiveModel &model) {
  const std::uint32_t target = rc.decode_target(model.total());
  AdaptiveModel::Interval iv{};
  const int symbol = model.find(target, iv);
  rc.decode_update(iv.cum, iv.freq);
  model.update(symbol);
  return symbol;
}

/// Context id for a band's next residual given the previous mapped residual
/// magnitude in that band: buckets {0, <=2, <=8, >8}.
inline int select_model(std::uint32_t prev_mapped) {
  if (prev_mapped == 0) {
    return 0;
  }
  if (prev_mapped <= 2) {
    return 1;
  }
  if (prev_mapped <= 8) {
    return 2;
  }
  return 3;
}

/// Mapped-residual entropy layer: four adaptive models per band selected by
/// the previous residual's magnitude, with values >= 255 escape-coded as
/// symbol 255 followed by an order-0 Exp-Golomb tail in raw bits.
class ResidualCoder {
public:
  explicit ResidualCoder(int bands);

  void encode(RangeEncoder &rc, int band, std::uint32_t mapped);
  std::uint32_t decode(RangeDecoder &rc, int band);

  // Skipped samples carry an implicit zero residual; keeps contexts in sync.
  void note_uncoded(int band) { prev_mapped_[band] = 0; }

  void reset_contexts();

private:
  static constexpr std::uint32_t kEscape = 255;

  AdaptiveModel &model_for(int band) {
    return models_[static_cast<std::size_t>(band) * 4 + select_model(prev_mapped_[band])];
  }

  std::vector<AdaptiveModel> models_;
  std::vector<std::uint32_t> prev_mapped_;
};

} // namespace rcpc

#endif
