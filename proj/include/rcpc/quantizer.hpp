#ifndef RCPC_QUANTIZER_HPP
#define RCPC_QUANTIZER_HPP

#include <cstdint>
#include <cstdlib>
#include <stdexcept>

namespace rcpc {

/// Uniform scalar quantizer with odd step q:
///   quantized = sgn(d) * floor((|d| + (q-1)/2) / q)
/// so reconstruction error never exceeds (q-1)/2.
inline std::int32_t quantize(std::int32_t delta, int q) {
  if (q < 1 || q % 2 == 0) {
    throw std::invalid_argument("quantization step must be odd and >= 1");
  }
  const std::int32_t magnitude = (std::abs(delta) + (q - 1) / 2) / q;
  return delta < 0 ? -magnitude : magnitude;
}

inline std::int32_t dequantize(std::int32_t quantized, int q) {
  return quantized * q;
}

} // namespace rcpc

#endif
