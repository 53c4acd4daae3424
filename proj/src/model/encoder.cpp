#include "zsl/encoder.hpp"

#include <algorithm>

#include "zsl/error.hpp"

namespace zsl {

void EncoderConfig::validate() const {
  if (input_dim == 0 || hidden_dim == 0 || latent_dim == 0) {
    throw ConfigError("encoder dimensions must all be at least 1");
  }
  if (!(dropout_rate >= 0.0 && dropout_rate < 1.0)) {
    throw ConfigError("encoder dropout rate must be in [0,1)");
  }
}

Encoder::Encoder(const EncoderConfig& config, Rng& init_rng) : config_(config) {
  config_.validate();
  hidden_ = LinearLayer::glorot(config_.input_dim, config_.hidden_dim, init_rng);
  batchnorm_ = BatchNormLayer(config_.hidden_dim);
  dropout_ = DropoutLayer(config_.dropout_rate);
  head_mean_ = LinearLayer::glorot(config_.hidden_dim, config_.latent_dim, init_rng);
  head_logvar_ = LinearLayer::glorot(config_.hidden_dim, config_.latent_dim, init_rng);
}

void Encoder::set_mode(Mode m) {
  mode_ = m;
  batchnorm_.set_mode(m);
  dropout_.set_mode(m);
}

std::vector<DiagGaussian> Encoder::split_heads(const Matrix& means,
                                               const Matrix& raw_logvars) const {
  std::vector<DiagGaussian> out;
  out.reserve(means.rows());
  for (std::size_t r = 0; r < means.rows(); ++r) {
    auto m = means.row(r);
    auto lv = raw_logvars.row(r);
    DiagGaussian g;
    g.mean.assign(m.begin(), m.end());
    g.log_var.resize(lv.size());
    std::transform(lv.begin(), lv.end(), g.log_var.begin(),
                   [](double v) { return std::clamp(v, kLogVarMin, kLogVarMax); });
    out.push_back(std::move(g));
  }
  return out;
}

std::vector<DiagGaussian> Encoder::encode(const Matrix& batch, Rng& rng) {
  if (batch.cols() != config_.input_dim) {
    throw ShapeError("encode: batch width " + std::to_string(batch.cols()) +
                     " != encoder input width " + std::to_string(config_.input_dim));
  }
  Matrix h = hidden_.forward(batch);
  if (config_.use_batchnorm) h = batchnorm_.forward(h, config_.batchnorm_small_batch_fallback);
  h = relu_.forward(h);
  h = dropout_.forward(h, rng);
  Matrix means = head_mean_.forward(h);
  Matrix raw = head_logvar_.forward(h);
  auto out = split_heads(means, raw);
  raw_logvars_ = std::move(raw);
  return out;
}

std::vector<DiagGaussian> Encoder::infer(const Matrix& batch) const {
  if (batch.cols() != config_.input_dim) {
    throw ShapeError("infer: batch width " + std::to_string(batch.cols()) +
                     " != encoder input width " + std::to_string(config_.input_dim));
  }
  Matrix h = hidden_.apply(batch);
  if (config_.use_batchnorm) h = batchnorm_.apply(h);
  h = ReluLayer::apply(h);
  return split_heads(head_mean_.apply(h), head_logvar_.apply(h));
}

Matrix Encoder::encode_backward(const Matrix& grad_means, const Matrix& grad_logvars) {
  if (!raw_logvars_) throw StateError("encode_backward called without a cached encode");
  const std::size_t n = raw_logvars_->rows();
  require_shape(grad_means, n, config_.latent_dim, "encode_backward grad_means");
  require_shape(grad_logvars, n, config_.latent_dim, "encode_backward grad_logvars");

  // The clamp passes gradient only inside [kLogVarMin, kLogVarMax].
  Matrix g_raw = grad_logvars;
  auto raw = raw_logvars_->values();
  auto g = g_raw.values();
  for (std::size_t i = 0; i < g.size(); ++i) {
    if (raw[i] < kLogVarMin || raw[i] > kLogVarMax) g[i] = 0.0;
  }
  raw_logvars_.reset();

  Matrix g_hidden = head_mean_.backward(grad_means);
  Matrix g_from_logvar = head_logvar_.backward(g_raw);
  auto dst = g_hidden.values();
  auto src = g_from_logvar.values();
  for (std::size_t i = 0; i < dst.size(); ++i) dst[i] += src[i];

  g_hidden = dropout_.backward(g_hidden);
  g_hidden = relu_.backward(g_hidden);
  if (config_.use_batchnorm) g_hidden = batchnorm_.backward(g_hidden);
  return hidden_.backward(g_hidden);
}

Matrix Encoder::encode_backward(const std::vector<GaussianGrad>& grads) {
  Matrix gm(grads.size(), config_.latent_dim);
  Matrix gl(grads.size(), config_.latent_dim);
  for (std::size_t r = 0; r < grads.size(); ++r) {
    if (grads[r].mean.size() != config_.latent_dim ||
        grads[r].log_var.size() != config_.latent_dim) {
      throw ShapeError("encode_backward: gradient row width != latent dim");
    }
    std::copy(grads[r].mean.begin(), grads[r].mean.end(), gm.row(r).begin());
    std::copy(grads[r].log_var.begin(), grads[r].log_var.end(), gl.row(r).begin());
  }
  return encode_backward(gm, gl);
}

void Encoder::zero_grad() {
  hidden_.zero_grad();
  batchnorm_.zero_grad();
  head_mean_.zero_grad();
  head_logvar_.zero_grad();
}

std::vector<ParamRef> Encoder::parameters(const std::string& prefix) {
  std::vector<ParamRef> out;
  auto append = [&out](std::vector<ParamRef> more) {
    for (auto& p : more) out.push_back(std::move(p));
  };
  append(hidden_.parameters(prefix + ".hidden"));
  if (config_.use_batchnorm) append(batchnorm_.parameters(prefix + ".batchnorm"));
  append(head_mean_.parameters(prefix + ".head_mean"));
  append(head_logvar_.parameters(prefix + ".head_logvar"));
  return out;
}

}  // namespace zsl
