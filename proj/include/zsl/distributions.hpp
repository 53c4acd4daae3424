#pragma once

// Diagonal-Gaussian latent embeddings and the dissimilarities between them.
//
// 2-Wasserstein between N(μ₁,Σ₁) and N(μ₂,Σ₂) has the closed form
//
//   W₂² = ‖μ₁−μ₂‖² + tr Σ₁ + tr Σ₂ − 2 tr (Σ₂^½ Σ₁ Σ₂^½)^½.
//
// With diagonal Σᵢ = diag(σᵢ²) every matrix above is diagonal, hence they
// commute and (Σ₂^½ Σ₁ Σ₂^½)^½ = diag(σ₁σ₂). The trace terms collapse to
// Σₖ σ₁ₖ² + σ₂ₖ² − 2σ₁ₖσ₂ₖ = Σₖ (σ₁ₖ − σ₂ₖ)², so
//
//   W₂² = ‖μ₁−μ₂‖² + ‖σ₁−σ₂‖²
//
// and no matrix square root is ever formed. Variances are stored as natural
// log-variances; σ = exp(log_var / 2).

#include <cstddef>
#include <string>
#include <string_view>
#include <vector>

#include "zsl/core/matrix.hpp"

namespace zsl {

inline constexpr double kLogVarMin = -10.0;
inline constexpr double kLogVarMax = 10.0;

struct DiagGaussian {
  std::vector<double> mean;
  std::vector<double> log_var;

  DiagGaussian() = default;
  DiagGaussian(std::vector<double> mean, std::vector<double> log_var);

  std::size_t dim() const noexcept { return mean.size(); }
  double stddev(std::size_t k) const;
  double variance(std::size_t k) const;

  bool operator==(const DiagGaussian&) const = default;
};

/// Cotangents w.r.t. a DiagGaussian's mean and log-variance vectors.
struct GaussianGrad {
  std::vector<double> mean;
  std::vector<double> log_var;

  explicit GaussianGrad(std::size_t dim = 0) : mean(dim, 0.0), log_var(dim, 0.0) {}
  bool is_zero() const noexcept;
};

enum class DistanceKind { kWasserstein2, kKullbackLeibler, kBhattacharyya, kEuclideanMeans };

std::string_view to_string(DistanceKind kind);
/// Accepts "wasserstein2"/"wd", "kl"/"kd", "bhattacharyya"/"bd", "euclidean"/"vector".
DistanceKind parse_distance_kind(std::string_view name);

/// Squared 2-Wasserstein distance (closed form above).
double w2_squared(const DiagGaussian& p, const DiagGaussian& q);

/// Accumulates grad_out·∂W₂²/∂(p, q) into gp and gq.
void w2_squared_backward(const DiagGaussian& p, const DiagGaussian& q, double grad_out,
                         GaussianGrad& gp, GaussianGrad& gq);

/// KL(p‖q) = ½ Σₖ [σₚ²/σ_q² + (μ_q−μₚ)²/σ_q² − 1 + log σ_q² − log σₚ²].
double kl_divergence(const DiagGaussian& p, const DiagGaussian& q);
void kl_divergence_backward(const DiagGaussian& p, const DiagGaussian& q, double grad_out,
                            GaussianGrad& gp, GaussianGrad& gq);

/// D_B = ⅛ Σₖ (μₚ−μ_q)²/v̄ + ½ Σₖ log(v̄ / σₚσ_q), with v̄ = (σₚ² + σ_q²)/2.
double bhattacharyya(const DiagGaussian& p, const DiagGaussian& q);
void bhattacharyya_backward(const DiagGaussian& p, const DiagGaussian& q, double grad_out,
                            GaussianGrad& gp, GaussianGrad& gq);

/// ‖μₚ−μ_q‖², ignoring variances (vector-embedding baseline).
double squared_mean_distance(const DiagGaussian& p, const DiagGaussian& q);
void squared_mean_distance_backward(const DiagGaussian& p, const DiagGaussian& q,
                                    double grad_out, GaussianGrad& gp, GaussianGrad& gq);

double distance(DistanceKind kind, const DiagGaussian& p, const DiagGaussian& q);
void distance_backward(DistanceKind kind, const DiagGaussian& p, const DiagGaussian& q,
                       double grad_out, GaussianGrad& gp, GaussianGrad& gq);

/// n rows of μ + σ ⊙ z, z ~ N(0, I).
Matrix sample(const DiagGaussian& p, std::size_t n, Rng& rng);

}  // namespace zsl
