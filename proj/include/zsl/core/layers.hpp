#pragma once

#include <cstddef>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "zsl/core/matrix.hpp"

namespace zsl {

enum class Mode { kTraining, kInference };

/// A trainable tensor viewed as flat storage plus its gradient buffer.
struct ParamRef {
  std::string name;
  std::span<double> value;
  std::span<double> grad;
};

/// Affine stage y = W·x + b applied row-wise. Gradients accumulate across
/// backward calls until zero_grad().
class LinearLayer {
 public:
  LinearLayer() = default;
  LinearLayer(std::size_t in, std::size_t out);
  LinearLayer(Matrix weight, std::vector<double> bias);

  /// Glorot-uniform weights in ±sqrt(6/(fan_in+fan_out)), zero bias.
  static LinearLayer glorot(std::size_t in, std::size_t out, Rng& rng);

  std::size_t in_width() const noexcept { return weight_.cols(); }
  std::size_t out_width() const noexcept { return weight_.rows(); }

  /// Caches the input for backward.
  Matrix forward(const Matrix& input);
  /// Same arithmetic as forward, without touching the cache.
  Matrix apply(const Matrix& input) const;
  /// Consumes the cached input; returns the gradient w.r.t. that input.
  Matrix backward(const Matrix& grad_out);

  void zero_grad();
  std::vector<ParamRef> parameters(const std::string& prefix);

  Matrix& weight() noexcept { return weight_; }
  const Matrix& weight() const noexcept { return weight_; }
  std::vector<double>& bias() noexcept { return bias_; }
  const std::vector<double>& bias() const noexcept { return bias_; }
  const Matrix& grad_weight() const noexcept { return grad_weight_; }
  const std::vector<double>& grad_bias() const noexcept { return grad_bias_; }

 private:
  Matrix weight_;  // out x in
  std::vector<double> bias_;
  Matrix grad_weight_;
  std::vector<double> grad_bias_;
  std::optional<Matrix> cached_input_;
};

/// Per-feature batch normalization with learned scale/shift and running
/// statistics. Training mode normalizes by the biased batch variance and
/// folds the unbiased variance into the running estimate.
class BatchNormLayer {
 public:
  BatchNormLayer() = default;
  explicit BatchNormLayer(std::size_t width, double momentum = 0.1, double eps = 1e-5);

  std::size_t width() const noexcept { return gamma_.size(); }
  Mode mode() const noexcept { return mode_; }
  void set_mode(Mode m) noexcept { mode_ = m; }

  /// Training mode requires at least two rows unless `allow_running_stats`
  /// is set, in which case a single-row batch is normalized with the running
  /// statistics instead (and those statistics are left untouched).
  Matrix forward(const Matrix& input, bool allow_running_stats = false);
  /// Inference-mode arithmetic; never caches and never updates statistics.
  Matrix apply(const Matrix& input) const;
  Matrix backward(const Matrix& grad_out);

  void zero_grad();
  std::vector<ParamRef> parameters(const std::string& prefix);

  std::vector<double>& gamma() noexcept { return gamma_; }
  std::vector<double>& beta() noexcept { return beta_; }
  const std::vector<double>& gamma() const noexcept { return gamma_; }
  const std::vector<double>& beta() const noexcept { return beta_; }
  std::vector<double>& running_mean() noexcept { return running_mean_; }
  std::vector<double>& running_var() noexcept { return running_var_; }
  const std::vector<double>& running_mean() const noexcept { return running_mean_; }
  const std::vector<double>& running_var() const noexcept { return running_var_; }
  const std::vector<double>& grad_gamma() const noexcept { return grad_gamma_; }
  const std::vector<double>& grad_beta() const noexcept { return grad_beta_; }
  double momentum() const noexcept { return momentum_; }
  double eps() const noexcept { return eps_; }

 private:
  struct Cache {
    Matrix normalized;             // x̂
    std::vector<double> inv_std;   // 1/sqrt(var + eps) per feature
    bool batch_stats = true;       // false when running stats were used
  };

  std::vector<double> gamma_, beta_;
  std::vector<double> running_mean_, running_var_;
  std::vector<double> grad_gamma_, grad_beta_;
  double momentum_ = 0.1;
  double eps_ = 1e-5;
  Mode mode_ = Mode::kTraining;
  std::optional<Cache> cache_;
};

class ReluLayer {
 public:
  Matrix forward(const Matrix& input);
  static Matrix apply(const Matrix& input);
  Matrix backward(const Matrix& grad_out);

 private:
  std::optional<Matrix> cached_input_;
};

/// Inverted dropout: survivors are scaled by 1/(1-rate) in training mode so
/// the expected activation is unchanged; inference mode is the identity.
class DropoutLayer {
 public:
  DropoutLayer() = default;
  explicit DropoutLayer(double rate);

  double rate() const noexcept { return rate_; }
  Mode mode() const noexcept { return mode_; }
  void set_mode(Mode m) noexcept { mode_ = m; }

  Matrix forward(const Matrix& input, Rng& rng);
  Matrix backward(const Matrix& grad_out);

  /// Scaled mask from the last training-mode forward (0 or 1/(1-rate)).
  const Matrix& mask() const noexcept { return mask_; }

 private:
  double rate_ = 0.0;
  Mode mode_ = Mode::kTraining;
  Matrix mask_;
  bool has_cache_ = false;
  bool cache_identity_ = false;
};

}  // namespace zsl
