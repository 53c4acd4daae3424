#include "zsl/core/adam.hpp"

#include <cmath>

#include "zsl/error.hpp"

namespace zsl {

Adam::Adam(AdamConfig config) : config_(config) {
  if (!(config.lr > 0.0)) throw ConfigError("Adam learning rate must be positive");
  if (!(config.beta1 >= 0.0 && config.beta1 < 1.0) || !(config.beta2 >= 0.0 && config.beta2 < 1.0)) {
    throw ConfigError("Adam betas must be in [0,1)");
  }
  if (!(config.eps > 0.0)) throw ConfigError("Adam eps must be positive");
}

void Adam::step(std::span<const ParamRef> params) {
  bool any_nonzero = false;
  for (const ParamRef& p : params) {
    if (p.value.size() != p.grad.size()) {
      throw ShapeError("Adam: parameter '" + p.name + "' and its gradient differ in size");
    }
    for (double g : p.grad) {
      if (!std::isfinite(g)) throw NumericalError("Adam: non-finite gradient in '" + p.name + "'");
      any_nonzero = any_nonzero || g != 0.0;
    }
  }

  if (m_.empty()) {
    m_.reserve(params.size());
    v_.reserve(params.size());
    for (const ParamRef& p : params) {
      m_.emplace_back(p.value.size(), 0.0);
      v_.emplace_back(p.value.size(), 0.0);
    }
  } else if (m_.size() != params.size()) {
    throw ShapeError("Adam: parameter list changed between steps");
  }
  for (std::size_t i = 0; i < params.size(); ++i) {
    if (m_[i].size() != params[i].value.size()) {
      throw ShapeError("Adam: parameter '" + params[i].name + "' changed size between steps");
    }
  }

  if (!any_nonzero) return;

  ++step_;
  const double t = static_cast<double>(step_);
  const double bc1 = 1.0 - std::pow(config_.beta1, t);
  const double bc2 = 1.0 - std::pow(config_.beta2, t);
  for (std::size_t i = 0; i < params.size(); ++i) {
    auto value = params[i].value;
    auto grad = params[i].grad;
    auto& m = m_[i];
    auto& v = v_[i];
    for (std::size_t k = 0; k < value.size(); ++k) {
      const double g = grad[k];
      m[k] = config_.beta1 * m[k] + (1.0 - config_.beta1) * g;
      v[k] = config_.beta2 * v[k] + (1.0 - config_.beta2) * g * g;
      const double m_hat = m[k] / bc1;
      const double v_hat = v[k] / bc2;
      value[k] -= config_.lr * m_hat / (std::sqrt(v_hat) + config_.eps);
    }
  }
}

}  // namespace zsl
