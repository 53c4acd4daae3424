#pragma once

#include <cstddef>
#include <optional>
#include <string>
#include <vector>

#include "zsl/core/layers.hpp"
#include "zsl/distributions.hpp"

namespace zsl {

struct EncoderConfig {
  std::size_t input_dim = 1;
  std::size_t hidden_dim = 512;
  std::size_t latent_dim = 64;
  double dropout_rate = 0.0;
  bool use_batchnorm = true;
  /// In training mode, a single-row batch normalizes with running statistics
  /// instead of failing. Used by the semantic encoder, whose batches are the
  /// distinct classes of a step.
  bool batchnorm_small_batch_fallback = false;

  /// Throws ConfigError on zero dims or a rate outside [0,1).
  void validate() const;
  bool operator==(const EncoderConfig&) const = default;
};

/// One-hidden-layer MLP mapping a vector to a diagonal Gaussian:
///   h = dropout(relu(batchnorm(W₁x + b₁)))
///   mean = W_μ h + b_μ,  log_var = clamp(W_σ h + b_σ, −10, 10)
class Encoder {
 public:
  Encoder() = default;
  Encoder(const EncoderConfig& config, Rng& init_rng);

  const EncoderConfig& config() const noexcept { return config_; }
  Mode mode() const noexcept { return mode_; }
  void set_mode(Mode m);

  /// Training path: caches activations for encode_backward. Dropout draws
  /// come from `rng` when in training mode.
  std::vector<DiagGaussian> encode(const Matrix& batch, Rng& rng);

  /// Inference-mode arithmetic regardless of the current mode; no caching,
  /// safe to call concurrently on a shared encoder.
  std::vector<DiagGaussian> infer(const Matrix& batch) const;

  /// Backpropagates per-row cotangents of mean and log-variance, accumulating
  /// parameter gradients. Returns the gradient w.r.t. the encoded batch.
  Matrix encode_backward(const Matrix& grad_means, const Matrix& grad_logvars);
  Matrix encode_backward(const std::vector<GaussianGrad>& grads);

  void zero_grad();
  std::vector<ParamRef> parameters(const std::string& prefix);

  LinearLayer& hidden() noexcept { return hidden_; }
  const LinearLayer& hidden() const noexcept { return hidden_; }
  BatchNormLayer& batchnorm() noexcept { return batchnorm_; }
  const BatchNormLayer& batchnorm() const noexcept { return batchnorm_; }
  LinearLayer& head_mean() noexcept { return head_mean_; }
  const LinearLayer& head_mean() const noexcept { return head_mean_; }
  LinearLayer& head_logvar() noexcept { return head_logvar_; }
  const LinearLayer& head_logvar() const noexcept { return head_logvar_; }

 private:
  std::vector<DiagGaussian> split_heads(const Matrix& means, const Matrix& raw_logvars) const;

  EncoderConfig config_;
  Mode mode_ = Mode::kTraining;
  LinearLayer hidden_;
  BatchNormLayer batchnorm_;
  ReluLayer relu_;
  DropoutLayer dropout_;
  LinearLayer head_mean_;
  LinearLayer head_logvar_;
  std::optional<Matrix> raw_logvars_;  // pre-clamp, for the clamp mask
};

}  // namespace zsl
