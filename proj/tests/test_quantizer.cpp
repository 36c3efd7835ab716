#include <doctest.h>

#include "rcpc/quantizer.hpp"

using namespace rcpc;

TEST_CASE("quantizer formula") {
  CHECK(quantize(5, 3) == 2);
  CHECK(dequantize(2, 3) == 6);
  CHECK(quantize(-5, 3) == -2);
  CHECK(dequantize(0, 99) == 0);
  for (int d = -2000; d <= 2000; ++d) {
    CHECK(quantize(d, 1) == d);
  }
  CHECK_THROWS_AS(quantize(1, 2), std::invalid_argument);
  CHECK_THROWS_AS(quantize(1, 0), std::invalid_argument);
}

TEST_CASE("quantizer error bound, oddness and monotonicity") {
  for (int q = 1; q <= 41; q += 2) {
    std::int32_t prev = quantize(-10001, q);
    for (int d = -10000; d <= 10000; ++d) {
      const std::int32_t v = quantize(d, q);
      CHECK(std::abs(d - dequantize(v, q)) <= (q - 1) / 2);
      CHECK(quantize(-d, q) == -v);
      CHECK(v >= prev);
      prev = v;
    }
  }
}
