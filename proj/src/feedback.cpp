#include "rcpc/feedback.hpp"

#include <algorithm>
#include <cmath>
#include <span>
#include <stdexcept>

namespace rcpc {

ControllerState::ControllerState(double target_bpp, double tau, MemoryPolicy policy,
                                 int window)
    : target_(target_bpp), tau_(tau), policy_(policy), window_(window),
      t_new_(target_bpp), eta_(target_bpp) {
  if (!(target_bpp > 0.0)) {
    throw std::invalid_argument("controller target must be positive");
  }
  if (!(tau > 0.0)) { // +infinity allowed: pure tracking
    throw std::invalid_argument("tau must be positive");
  }
  if (policy == MemoryPolicy::Window && window < 1) {
    throw std::invalid_argument("window must be >= 1");
  }
}

double ControllerState::update_ratio_mean(double w) {
  switch (policy_) {
  case MemoryPolicy::Memory1:
    return w;
  case MemoryPolicy::LongMemory:
    ratio_sum_ += w;
    ++ratio_count_;
    return ratio_sum_ / static_cast<double>(ratio_count_);
  case MemoryPolicy::Window:
    recent_.push_back(w);
    if (recent_.size() > static_cast<std::size_t>(window_)) {
      recent_.pop_front();
    }
    double sum = 0.0;
    for (const double v : recent_) {
      sum += v;
    }
    return sum / static_cast<double>(recent_.size());
  }
  return w;
}

double ControllerState::next_target(double measured_bpp) {
  if (measured_bpp < 0.0) {
    throw std::invalid_argument("measured rate must be non-negative");
  }
  const double y = measured_bpp;
  if (t_new_ > 0.0) {
    wbar_ = update_ratio_mean(y / t_new_);
    ratio_fallback_ = false;
  } else {
    ratio_fallback_ = true; // reuse the previous mean
  }
  const double c_next = c_ + target_ - y;
  const double budget_in = std::isinf(tau_) ? 0.0 : c_ / tau_;
  eta_ = eta_ + wbar_ * (target_ - y + budget_in);
  const double spread = std::isinf(tau_) ? 0.0 : c_next / (tau_ * wbar_);
  c_ = c_next;
  t_new_ = std::max(eta_ + spread, kMinTarget);
  ++n_;
  return t_new_;
}

ControllerTrajectory simulate_controller(std::span<const double> w_sequence, double target,
                                         double tau, MemoryPolicy policy, int window) {
  ControllerState state(target, tau, policy, window);
  ControllerTrajectory traj;
  traj.y.reserve(w_sequence.size());
  traj.c.reserve(w_sequence.size());
  traj.t_new.reserve(w_sequence.size());
  for (const double w : w_sequence) {
    traj.t_new.push_back(state.current_target());
    traj.c.push_back(state.residual_budget());
    const double y = w * state.current_target();
    traj.y.push_back(y);
    state.next_target(y);
  }
  return traj;
}

} // namespace rcpc
