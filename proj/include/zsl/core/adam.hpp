#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "zsl/core/layers.hpp"

namespace zsl {

struct AdamConfig {
  double lr = 1e-3;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
};

/// Adam with bias correction. Moment buffers are bound to the parameter list
/// seen on the first step; later steps must pass the same list (same order,
/// same sizes). Gradients are read, never cleared.
class Adam {
 public:
  Adam() = default;
  explicit Adam(AdamConfig config);

  /// Applies one update. If every gradient entry is exactly zero the call is
  /// a no-op: parameters, moments and the step counter stay as they were.
  /// Throws NumericalError naming the first parameter holding a NaN/Inf
  /// gradient, before anything is modified.
  void step(std::span<const ParamRef> params);

  std::uint64_t step_count() const noexcept { return step_; }
  const AdamConfig& config() const noexcept { return config_; }
  const std::vector<std::vector<double>>& first_moment() const noexcept { return m_; }
  const std::vector<std::vector<double>>& second_moment() const noexcept { return v_; }

 private:
  AdamConfig config_;
  std::uint64_t step_ = 0;
  std::vector<std::vector<double>> m_;
  std::vector<std::vector<double>> v_;
};

}  // namespace zsl
