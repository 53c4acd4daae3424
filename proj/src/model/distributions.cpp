#include "zsl/distributions.hpp"

#include <algorithm>
#include <cmath>

#include "zsl/error.hpp"

namespace zsl {

namespace {

void require_same_dim(const DiagGaussian& p, const DiagGaussian& q, const char* what) {
  if (p.dim() != q.dim()) {
    throw ShapeError(std::string(what) + ": dimension mismatch " + std::to_string(p.dim()) +
                     " vs " + std::to_string(q.dim()));
  }
}

void require_grad_dim(const GaussianGrad& g, std::size_t dim) {
  if (g.mean.size() != dim || g.log_var.size() != dim) {
    throw ShapeError("gradient buffer dimension does not match distribution");
  }
}

}  // namespace

DiagGaussian::DiagGaussian(std::vector<double> m, std::vector<double> lv)
    : mean(std::move(m)), log_var(std::move(lv)) {
  if (mean.size() != log_var.size()) {
    throw ShapeError("DiagGaussian mean and log_var lengths differ");
  }
}

double DiagGaussian::stddev(std::size_t k) const { return std::exp(0.5 * log_var[k]); }
double DiagGaussian::variance(std::size_t k) const { return std::exp(log_var[k]); }

bool GaussianGrad::is_zero() const noexcept {
  auto zero = [](double v) { return v == 0.0; };
  return std::all_of(mean.begin(), mean.end(), zero) &&
         std::all_of(log_var.begin(), log_var.end(), zero);
}

std::string_view to_string(DistanceKind kind) {
  switch (kind) {
    case DistanceKind::kWasserstein2: return "wasserstein2";
    case DistanceKind::kKullbackLeibler: return "kl";
    case DistanceKind::kBhattacharyya: return "bhattacharyya";
    case DistanceKind::kEuclideanMeans: return "euclidean";
  }
  return "unknown";
}

DistanceKind parse_distance_kind(std::string_view name) {
  if (name == "wasserstein2" || name == "wd" || name == "w2") return DistanceKind::kWasserstein2;
  if (name == "kl" || name == "kd") return DistanceKind::kKullbackLeibler;
  if (name == "bhattacharyya" || name == "bd") return DistanceKind::kBhattacharyya;
  if (name == "euclidean" || name == "vector") return DistanceKind::kEuclideanMeans;
  throw ConfigError("unknown distance kind '" + std::string(name) + "'");
}

// ---------------------------------------------------------------------------

double w2_squared(const DiagGaussian& p, const DiagGaussian& q) {
  require_same_dim(p, q, "w2_squared");
  double acc = 0.0;
  for (std::size_t k = 0; k < p.dim(); ++k) {
    const double dm = p.mean[k] - q.mean[k];
    const double ds = p.stddev(k) - q.stddev(k);
    acc += dm * dm + ds * ds;
  }
  return acc;
}

void w2_squared_backward(const DiagGaussian& p, const DiagGaussian& q, double grad_out,
                         GaussianGrad& gp, GaussianGrad& gq) {
  require_same_dim(p, q, "w2_squared_backward");
  require_grad_dim(gp, p.dim());
  require_grad_dim(gq, q.dim());
  for (std::size_t k = 0; k < p.dim(); ++k) {
    const double dm = p.mean[k] - q.mean[k];
    const double sp = p.stddev(k);
    const double sq = q.stddev(k);
    const double ds = sp - sq;
    // dσ/dlog_var = σ/2, so d(ds²)/dlog_var_p = 2·ds·σp/2.
    gp.mean[k] += grad_out * 2.0 * dm;
    gq.mean[k] -= grad_out * 2.0 * dm;
    gp.log_var[k] += grad_out * ds * sp;
    gq.log_var[k] -= grad_out * ds * sq;
  }
}

// ---------------------------------------------------------------------------

double kl_divergence(const DiagGaussian& p, const DiagGaussian& q) {
  require_same_dim(p, q, "kl_divergence");
  double acc = 0.0;
  for (std::size_t k = 0; k < p.dim(); ++k) {
    const double dm = q.mean[k] - p.mean[k];
    const double ratio = std::exp(p.log_var[k] - q.log_var[k]);
    acc += ratio + dm * dm / q.variance(k) - 1.0 + q.log_var[k] - p.log_var[k];
  }
  return 0.5 * acc;
}

void kl_divergence_backward(const DiagGaussian& p, const DiagGaussian& q, double grad_out,
                            GaussianGrad& gp, GaussianGrad& gq) {
  require_same_dim(p, q, "kl_divergence_backward");
  require_grad_dim(gp, p.dim());
  require_grad_dim(gq, q.dim());
  for (std::size_t k = 0; k < p.dim(); ++k) {
    const double dm = p.mean[k] - q.mean[k];
    const double vq = q.variance(k);
    const double ratio = std::exp(p.log_var[k] - q.log_var[k]);
    gp.mean[k] += grad_out * dm / vq;
    gq.mean[k] -= grad_out * dm / vq;
    gp.log_var[k] += grad_out * 0.5 * (ratio - 1.0);
    gq.log_var[k] += grad_out * 0.5 * (1.0 - ratio - dm * dm / vq);
  }
}

// ---------------------------------------------------------------------------

double bhattacharyya(const DiagGaussian& p, const DiagGaussian& q) {
  require_same_dim(p, q, "bhattacharyya");
  double acc = 0.0;
  for (std::size_t k = 0; k < p.dim(); ++k) {
    const double dm = p.mean[k] - q.mean[k];
    const double vbar = 0.5 * (p.variance(k) + q.variance(k));
    acc += 0.125 * dm * dm / vbar + 0.5 * (std::log(vbar) - 0.5 * (p.log_var[k] + q.log_var[k]));
  }
  return acc;
}

void bhattacharyya_backward(const DiagGaussian& p, const DiagGaussian& q, double grad_out,
                            GaussianGrad& gp, GaussianGrad& gq) {
  require_same_dim(p, q, "bhattacharyya_backward");
  require_grad_dim(gp, p.dim());
  require_grad_dim(gq, q.dim());
  for (std::size_t k = 0; k < p.dim(); ++k) {
    const double dm = p.mean[k] - q.mean[k];
    const double vp = p.variance(k);
    const double vq = q.variance(k);
    const double vbar = 0.5 * (vp + vq);
    const double d_vbar = -0.125 * dm * dm / (vbar * vbar) + 0.5 / vbar;
    gp.mean[k] += grad_out * 0.25 * dm / vbar;
    gq.mean[k] -= grad_out * 0.25 * dm / vbar;
    gp.log_var[k] += grad_out * (d_vbar * 0.5 * vp - 0.25);
    gq.log_var[k] += grad_out * (d_vbar * 0.5 * vq - 0.25);
  }
}

// ---------------------------------------------------------------------------

double squared_mean_distance(const DiagGaussian& p, const DiagGaussian& q) {
  require_same_dim(p, q, "squared_mean_distance");
  double acc = 0.0;
  for (std::size_t k = 0; k < p.dim(); ++k) {
    const double dm = p.mean[k] - q.mean[k];
    acc += dm * dm;
  }
  return acc;
}

void squared_mean_distance_backward(const DiagGaussian& p, const DiagGaussian& q,
                                    double grad_out, GaussianGrad& gp, GaussianGrad& gq) {
  require_same_dim(p, q, "squared_mean_distance_backward");
  require_grad_dim(gp, p.dim());
  require_grad_dim(gq, q.dim());
  for (std::size_t k = 0; k < p.dim(); ++k) {
    const double dm = p.mean[k] - q.mean[k];
    gp.mean[k] += grad_out * 2.0 * dm;
    gq.mean[k] -= grad_out * 2.0 * dm;
  }
}

// ---------------------------------------------------------------------------

double distance(DistanceKind kind, const DiagGaussian& p, const DiagGaussian& q) {
  switch (kind) {
    case DistanceKind::kWasserstein2: return w2_squared(p, q);
    case DistanceKind::kKullbackLeibler: return kl_divergence(p, q);
    case DistanceKind::kBhattacharyya: return bhattacharyya(p, q);
    case DistanceKind::kEuclideanMeans: return squared_mean_distance(p, q);
  }
  throw ConfigError("unknown distance kind");
}

void distance_backward(DistanceKind kind, const DiagGaussian& p, const DiagGaussian& q,
                       double grad_out, GaussianGrad& gp, GaussianGrad& gq) {
  switch (kind) {
    case DistanceKind::kWasserstein2: return w2_squared_backward(p, q, grad_out, gp, gq);
    case DistanceKind::kKullbackLeibler: return kl_divergence_backward(p, q, grad_out, gp, gq);
    case DistanceKind::kBhattacharyya: return bhattacharyya_backward(p, q, grad_out, gp, gq);
    case DistanceKind::kEuclideanMeans:
      return squared_mean_distance_backward(p, q, grad_out, gp, gq);
  }
  throw ConfigError("unknown distance kind");
}

Matrix sample(const DiagGaussian& p, std::size_t n, Rng& rng) {
  if (n == 0) throw ConfigError("sample: n must be at least 1");
  std::normal_distribution<double> normal(0.0, 1.0);
  std::vector<double> sigma(p.dim());
  for (std::size_t k = 0; k < p.dim(); ++k) sigma[k] = p.stddev(k);
  Matrix out(n, p.dim());
  for (std::size_t r = 0; r < n; ++r) {
    auto row = out.row(r);
    for (std::size_t k = 0; k < p.dim(); ++k) row[k] = p.mean[k] + sigma[k] * normal(rng);
  }
  return out;
}

}  // namespace zsl
