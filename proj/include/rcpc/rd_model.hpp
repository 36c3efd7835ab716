#ifndef RCPC_RD_MODEL_HPP
#define RCPC_RD_MODEL_HPP

#include <cstdint>
#include <optional>
#include <span>
#include <vector>

namespace rcpc {

/// Laplace parameter of a residual population: lambda = sqrt(2 / sigma^2).
struct LaplaceParam {
  double sigma2 = 0.0;
  double lambda = 0.0;

  static LaplaceParam from_variance(double sigma2);
};

/// Population variance (mean removed) of a block's lossless-pass residuals.
/// Fewer than two residuals cannot support an estimate; the caller treats
/// that as an INFTY-class block.
std::optional<double> estimate_variance(std::span<const std::int32_t> residuals);

/// Adds the quantization-noise variance q_prev^2 / 12 injected by the step
/// used for the same block in the previous slice.
double augment_variance(double sigma2, int q_prev);

/// Rate in bits per pixel of a Laplace(lambda) source after uniform scalar
/// quantization with step q. Depends on lambda and q only through their
/// product.
double rate(double lambda, int q);
double rate_from_product(double lambda_q);

/// Mean squared error of the same quantizer; equals q^2 times a function of
/// lambda*q.
double distortion(double lambda, int q);
double distortion_factor(double lambda_q); // distortion / q^2

/// The odd step in [1, q_max] whose rate is nearest target_rate; ties break
/// toward the smaller step.
int inverse_rate(double lambda, double target_rate, int q_max);

/// Fixed-width integer array packed at `bits` bits per entry.
class PackedIntArray {
public:
  PackedIntArray() = default;
  PackedIntArray(std::size_t count, int bits);

  void set(std::size_t i, std::uint32_t value);
  std::uint32_t get(std::size_t i) const;

  std::size_t size() const { return count_; }
  int bits() const { return bits_; }
  std::size_t byte_size() const { return bytes_.size(); }

private:
  std::size_t count_ = 0;
  int bits_ = 0;
  std::vector<std::uint8_t> bytes_;
};

/// Integer lookup tables for rate and distortion over a logarithmic
/// lambda*q grid: 14-bit rate entries (1/1024 bpp quantum) and 13-bit
/// distortion-factor entries (1/65536 quantum), linearly interpolated.
class RdTables {
public:
  static constexpr double kRateScale = 1024.0;      // 14-bit entries
  static constexpr double kDistScale = 65536.0;     // 13-bit entries
  static constexpr double kProductMin = 1e-4;

  RdTables(double lambda_q_max, std::size_t entries);

  double rate_from_product(double lambda_q) const;
  double distortion_factor(double lambda_q) const;

  double rate(double lambda, int q) const;
  double distortion(double lambda, int q) const;

  std::size_t entries() const { return rate_table_.size(); }
  std::size_t storage_bytes() const {
    return rate_table_.byte_size() + dist_table_.byte_size();
  }

private:
  double interpolate(const PackedIntArray &table, double lambda_q) const;

  double product_max_;
  double log_min_;
  double log_step_;
  PackedIntArray rate_table_;
  PackedIntArray dist_table_;
};

inline RdTables build_tables(double lambda_q_max = 64.0, std::size_t entries = 45000) {
  return RdTables(lambda_q_max, entries);
}

/// Rate/distortion evaluation backend: closed-form by default, table-backed
/// when constructed over an RdTables instance.
class RdBackend {
public:
  RdBackend() = default;
  explicit RdBackend(const RdTables *tables) : tables_(tables) {}

  double rate(double lambda, int q) const {
    return tables_ ? tables_->rate(lambda, q) : rcpc::rate(lambda, q);
  }
  double distortion(double lambda, int q) const {
    return tables_ ? tables_->distortion(lambda, q) : rcpc::distortion(lambda, q);
  }

private:
  const RdTables *tables_ = nullptr;
};

} // namespace rcpc

#endif
