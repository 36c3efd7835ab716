#ifndef RCPC_BITIO_HPP
#define RCPC_BITIO_HPP

#include <cstdint>
#include <span>
#include <stdexcept>
#include <vector>

namespace rcpc {

struct DecodeError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

/// MSB-first bit writer over a byte vector.
class BitWriter {
public:
  void put_bit(bool bit) {
    current_ = static_cast<std::uint8_t>((current_ << 1) | (bit ? 1u : 0u));
    if (++filled_ == 8) {
      bytes_.push_back(current_);
      current_ = 0;
      filled_ = 0;
    }
    ++bit_count_;
  }

  void put_bits(std::uint64_t value, int count) {
    for (int i = count - 1; i >= 0; --i) {
      put_bit(((value >> i) & 1u) != 0);
    }
  }

  // Pads with zero bits to the next byte boundary.
  std::vector<std::uint8_t> finish() {
    if (filled_ > 0) {
      current_ = static_cast<std::uint8_t>(current_ << (8 - filled_));
      bytes_.push_back(current_);
      current_ = 0;
      filled_ = 0;
    }
    return std::move(bytes_);
  }

  std::uint64_t bit_count() const { return bit_count_; }

private:
  std::vector<std::uint8_t> bytes_;
  std::uint8_t current_ = 0;
  int filled_ = 0;
  std::uint64_t bit_count_ = 0;
};

/// MSB-first bit reader; throws DecodeError past the end.
class BitReader {
public:
  explicit BitReader(std::span<const std::uint8_t> bytes) : bytes_(bytes) {}

  bool get_bit() {
    if (pos_ >= bytes_.size() * 8) {
      throw DecodeError("bit reader: truncated stream");
    }
    const bool bit = (bytes_[pos_ >> 3] >> (7 - (pos_ & 7))) & 1u;
    ++pos_;
    return bit;
  }

  std::uint64_t get_bits(int count) {
    std::uint64_t v = 0;
    for (int i = 0; i < count; ++i) {
      v = (v << 1) | (get_bit() ? 1u : 0u);
    }
    return v;
  }

  std::size_t bits_consumed() const { return pos_; }

private:
  std::span<const std::uint8_t> bytes_;
  std::size_t pos_ = 0;
};

/// Order-0 Exp-Golomb: floor(log2(u+1)) zeros, then u+1 in binary.
inline void eg0_encode(BitWriter &bw, std::uint32_t u) {
  const std::uint64_t v = static_cast<std::uint64_t>(u) + 1;
  int len = 0;
  while ((v >> (len + 1)) != 0) {
    ++len;
  }
  for (int i = 0; i < len; ++i) {
    bw.put_bit(false);
  }
  bw.put_bits(v, len + 1);
}

inline std::uint32_t eg0_decode(BitReader &br) {
  int len = 0;
  while (!br.get_bit()) {
    if (++len > 32) {
      throw DecodeError("exp-golomb: prefix too long");
    }
  }
  std::uint64_t v = 1;
  for (int i = 0; i < len; ++i) {
    v = (v << 1) | (br.get_bit() ? 1u : 0u);
  }
  return static_cast<std::uint32_t>(v - 1);
}

/// Signed-to-unsigned interleave: 0,+1,-1,+2,-2 -> 0,1,2,3,4.
inline std::uint32_t zigzag_encode(std::int32_t v) {
  return v > 0 ? static_cast<std::uint32_t>(2 * v - 1)
               : static_cast<std::uint32_t>(-2 * static_cast<std::int64_t>(v));
}

inline std::int32_t zigzag_decode(std::uint32_t u) {
  return (u & 1u) ? static_cast<std::int32_t>((u + 1) / 2)
                  : -static_cast<std::int32_t>(u / 2);
}

} // namespace rcpc

#endif
