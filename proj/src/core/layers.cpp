#include "zsl/core/layers.hpp"

#include <algorithm>
#include <cmath>

#include "zsl/error.hpp"

namespace zsl {

// ---------------------------------------------------------------------------
// LinearLayer

LinearLayer::LinearLayer(std::size_t in, std::size_t out)
    : weight_(out, in), bias_(out, 0.0), grad_weight_(out, in), grad_bias_(out, 0.0) {}

LinearLayer::LinearLayer(Matrix weight, std::vector<double> bias)
    : weight_(std::move(weight)), bias_(std::move(bias)) {
  if (bias_.size() != weight_.rows()) {
    throw ShapeError("linear layer bias length " + std::to_string(bias_.size()) +
                     " does not match output width " + std::to_string(weight_.rows()));
  }
  grad_weight_ = Matrix(weight_.rows(), weight_.cols());
  grad_bias_.assign(bias_.size(), 0.0);
}

LinearLayer LinearLayer::glorot(std::size_t in, std::size_t out, Rng& rng) {
  LinearLayer layer(in, out);
  const double limit = std::sqrt(6.0 / static_cast<double>(in + out));
  std::uniform_real_distribution<double> dist(-limit, limit);
  for (double& w : layer.weight_.values()) w = dist(rng);
  return layer;
}

Matrix LinearLayer::apply(const Matrix& input) const {
  if (input.cols() != in_width()) {
    throw ShapeError("linear forward: input width " + std::to_string(input.cols()) +
                     " != layer input width " + std::to_string(in_width()));
  }
  Matrix out = matmul_transposed(input, weight_);
  for (std::size_t r = 0; r < out.rows(); ++r) {
    auto row = out.row(r);
    for (std::size_t j = 0; j < row.size(); ++j) row[j] += bias_[j];
  }
  return out;
}

Matrix LinearLayer::forward(const Matrix& input) {
  Matrix out = apply(input);
  cached_input_ = input;
  return out;
}

Matrix LinearLayer::backward(const Matrix& grad_out) {
  if (!cached_input_) throw StateError("linear backward called without a cached forward");
  const Matrix& input = *cached_input_;
  require_shape(grad_out, input.rows(), out_width(), "linear backward grad_out");

  Matrix gw = transposed_matmul(grad_out, input);
  auto gw_dst = grad_weight_.values();
  auto gw_src = gw.values();
  for (std::size_t i = 0; i < gw_dst.size(); ++i) gw_dst[i] += gw_src[i];
  for (std::size_t r = 0; r < grad_out.rows(); ++r) {
    auto row = grad_out.row(r);
    for (std::size_t j = 0; j < row.size(); ++j) grad_bias_[j] += row[j];
  }
  Matrix grad_in = matmul(grad_out, weight_);
  cached_input_.reset();
  return grad_in;
}

void LinearLayer::zero_grad() {
  grad_weight_.fill(0.0);
  std::fill(grad_bias_.begin(), grad_bias_.end(), 0.0);
}

std::vector<ParamRef> LinearLayer::parameters(const std::string& prefix) {
  return {{prefix + ".weight", weight_.values(), grad_weight_.values()},
          {prefix + ".bias", bias_, grad_bias_}};
}

// ---------------------------------------------------------------------------
// BatchNormLayer

BatchNormLayer::BatchNormLayer(std::size_t width, double momentum, double eps)
    : gamma_(width, 1.0),
      beta_(width, 0.0),
      running_mean_(width, 0.0),
      running_var_(width, 1.0),
      grad_gamma_(width, 0.0),
      grad_beta_(width, 0.0),
      momentum_(momentum),
      eps_(eps) {
  if (!(momentum > 0.0 && momentum < 1.0)) throw ConfigError("batch-norm momentum must be in (0,1)");
  if (!(eps > 0.0)) throw ConfigError("batch-norm eps must be positive");
}

Matrix BatchNormLayer::apply(const Matrix& input) const {
  if (input.cols() != width()) {
    throw ShapeError("batch-norm: input width " + std::to_string(input.cols()) +
                     " != " + std::to_string(width()));
  }
  Matrix out(input.rows(), input.cols());
  for (std::size_t j = 0; j < width(); ++j) {
    const double inv_std = 1.0 / std::sqrt(running_var_[j] + eps_);
    for (std::size_t r = 0; r < input.rows(); ++r) {
      out(r, j) = gamma_[j] * (input(r, j) - running_mean_[j]) * inv_std + beta_[j];
    }
  }
  return out;
}

Matrix BatchNormLayer::forward(const Matrix& input, bool allow_running_stats) {
  if (input.cols() != width()) {
    throw ShapeError("batch-norm: input width " + std::to_string(input.cols()) +
                     " != " + std::to_string(width()));
  }
  const std::size_t n = input.rows();
  const bool use_batch = mode_ == Mode::kTraining && !(allow_running_stats && n < 2);
  if (use_batch && n < 2) {
    throw DegenerateBatchError("batch-norm training forward needs at least 2 rows, got " +
                               std::to_string(n));
  }

  Cache cache{Matrix(n, width()), std::vector<double>(width()), use_batch};
  Matrix out(n, width());
  for (std::size_t j = 0; j < width(); ++j) {
    double mean = running_mean_[j];
    double var = running_var_[j];
    if (use_batch) {
      mean = 0.0;
      for (std::size_t r = 0; r < n; ++r) mean += input(r, j);
      mean /= static_cast<double>(n);
      var = 0.0;
      for (std::size_t r = 0; r < n; ++r) {
        const double d = input(r, j) - mean;
        var += d * d;
      }
      var /= static_cast<double>(n);
      const double unbiased = var * static_cast<double>(n) / static_cast<double>(n - 1);
      running_mean_[j] = (1.0 - momentum_) * running_mean_[j] + momentum_ * mean;
      running_var_[j] = (1.0 - momentum_) * running_var_[j] + momentum_ * unbiased;
    }
    const double inv_std = 1.0 / std::sqrt(var + eps_);
    cache.inv_std[j] = inv_std;
    for (std::size_t r = 0; r < n; ++r) {
      const double xhat = (input(r, j) - mean) * inv_std;
      cache.normalized(r, j) = xhat;
      out(r, j) = gamma_[j] * xhat + beta_[j];
    }
  }
  cache_ = std::move(cache);
  return out;
}

Matrix BatchNormLayer::backward(const Matrix& grad_out) {
  if (!cache_) throw StateError("batch-norm backward called without a cached forward");
  const Cache& c = *cache_;
  const std::size_t n = c.normalized.rows();
  require_shape(grad_out, n, width(), "batch-norm backward grad_out");

  Matrix grad_in(n, width());
  for (std::size_t j = 0; j < width(); ++j) {
    double sum_dy = 0.0;
    double sum_dy_xhat = 0.0;
    for (std::size_t r = 0; r < n; ++r) {
      sum_dy += grad_out(r, j);
      sum_dy_xhat += grad_out(r, j) * c.normalized(r, j);
    }
    grad_beta_[j] += sum_dy;
    grad_gamma_[j] += sum_dy_xhat;

    const double scale = gamma_[j] * c.inv_std[j];
    if (c.batch_stats) {
      const double nd = static_cast<double>(n);
      for (std::size_t r = 0; r < n; ++r) {
        grad_in(r, j) =
            scale / nd * (nd * grad_out(r, j) - sum_dy - c.normalized(r, j) * sum_dy_xhat);
      }
    } else {
      for (std::size_t r = 0; r < n; ++r) grad_in(r, j) = scale * grad_out(r, j);
    }
  }
  cache_.reset();
  return grad_in;
}

void BatchNormLayer::zero_grad() {
  std::fill(grad_gamma_.begin(), grad_gamma_.end(), 0.0);
  std::fill(grad_beta_.begin(), grad_beta_.end(), 0.0);
}

std::vector<ParamRef> BatchNormLayer::parameters(const std::string& prefix) {
  return {{prefix + ".gamma", gamma_, grad_gamma_}, {prefix + ".beta", beta_, grad_beta_}};
}

// ---------------------------------------------------------------------------
// ReluLayer

Matrix ReluLayer::apply(const Matrix& input) {
  Matrix out = input;
  for (double& v : out.values()) v = v < 0.0 ? 0.0 : v;  // NaN passes through
  return out;
}

Matrix ReluLayer::forward(const Matrix& input) {
  cached_input_ = input;
  return apply(input);
}

Matrix ReluLayer::backward(const Matrix& grad_out) {
  if (!cached_input_) throw StateError("relu backward called without a cached forward");
  require_shape(grad_out, cached_input_->rows(), cached_input_->cols(), "relu backward grad_out");
  Matrix grad_in = grad_out;
  auto in = cached_input_->values();
  auto g = grad_in.values();
  for (std::size_t i = 0; i < g.size(); ++i) {
    if (!(in[i] > 0.0)) g[i] = 0.0;
  }
  cached_input_.reset();
  return grad_in;
}

// ---------------------------------------------------------------------------
// DropoutLayer

DropoutLayer::DropoutLayer(double rate) : rate_(rate) {
  if (!(rate >= 0.0 && rate < 1.0)) throw ConfigError("dropout rate must be in [0,1)");
}

Matrix DropoutLayer::forward(const Matrix& input, Rng& rng) {
  has_cache_ = true;
  cache_identity_ = mode_ == Mode::kInference || rate_ == 0.0;
  if (cache_identity_) {
    mask_ = Matrix();
    return input;
  }
  mask_ = Matrix(input.rows(), input.cols());
  const double keep_scale = 1.0 / (1.0 - rate_);
  std::bernoulli_distribution keep(1.0 - rate_);
  Matrix out(input.rows(), input.cols());
  auto m = mask_.values();
  auto x = input.values();
  auto y = out.values();
  for (std::size_t i = 0; i < m.size(); ++i) {
    m[i] = keep(rng) ? keep_scale : 0.0;
    y[i] = x[i] * m[i];
  }
  return out;
}

Matrix DropoutLayer::backward(const Matrix& grad_out) {
  if (!has_cache_) throw StateError("dropout backward called without a cached forward");
  has_cache_ = false;
  if (cache_identity_) return grad_out;
  require_shape(grad_out, mask_.rows(), mask_.cols(), "dropout backward grad_out");
  Matrix grad_in = grad_out;
  auto g = grad_in.values();
  auto m = mask_.values();
  for (std::size_t i = 0; i < g.size(); ++i) g[i] *= m[i];
  return grad_in;
}

}  // namespace zsl
