#ifndef RCPC_FEEDBACK_HPP
#define RCPC_FEEDBACK_HPP

#include <cstddef>
#include <deque>
#include <span>
#include <vector>

#include "rcpc/config.hpp"

namespace rcpc {

/// Slice-by-slice target tracker: an LMS update of the controller's
/// input-output estimate plus a residual bit budget redistributed over tau
/// future slices.
///
///   w[n]     = y[n] / T_new[n]
///   c[n+1]   = c[n] + T - y[n]
///   eta[n+1] = eta[n] + wbar[n] (T - y[n] + c[n]/tau)
///   T_new[n+1] = eta[n+1] + c[n+1] / (tau wbar[n])
class ControllerState {
public:
  ControllerState(double target_bpp, double tau, MemoryPolicy policy, int window = 1);

  /// Feeds the measured rate of slice n and returns the target for slice
  /// n+1, floored at kMinTarget.
  double next_target(double measured_bpp);

  double current_target() const { return t_new_; }
  double residual_budget() const { return c_; }
  double tracking_estimate() const { return eta_; }
  double ratio_mean() const { return wbar_; }
  std::size_t slice_index() const { return n_; }
  bool ratio_fallback_used() const { return ratio_fallback_; }

  static constexpr double kMinTarget = 0.05;

private:
  double update_ratio_mean(double w);

  double target_;
  double tau_;
  MemoryPolicy policy_;
  int window_;
  double t_new_;
  double eta_;
  double c_ = 0.0;
  double wbar_ = 1.0;
  double ratio_sum_ = 0.0; // running mean state for LongMemory
  std::size_t ratio_count_ = 0;
  std::deque<double> recent_; // Window policy
  std::size_t n_ = 0;
  bool ratio_fallback_ = false;
};

/// Mode A: no feedback, the target is the global target for every slice.
class FixedTargetController {
public:
  explicit FixedTargetController(double target_bpp) : target_(target_bpp) {}
  double next_target(double) { return target_; }
  double current_target() const { return target_; }

private:
  double target_;
};

struct ControllerTrajectory {
  std::vector<double> y;     // measured slice rates
  std::vector<double> c;     // residual budget before each slice
  std::vector<double> t_new; // input target of each slice
};

/// Pure simulation against the synthetic plant y[n] = w[n] * T_new[n].
ControllerTrajectory simulate_controller(std::span<const double> w_sequence, double target,
                                         double tau, MemoryPolicy policy, int window = 1);

/// The cost the memory-1 update descends: tracking plus budget terms.
inline double cost_J(double target, double y, double c, double tau) {
  const double tracking = target - y;
  const double budget = target - y + 2.0 * c / tau;
  return tracking * tracking + budget * budget;
}

} // namespace rcpc

#endif
