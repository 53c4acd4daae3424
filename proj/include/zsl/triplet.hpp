#pragma once

#include <cstddef>
#include <span>
#include <vector>

#include "zsl/distributions.hpp"

namespace zsl {

inline constexpr int kNoClass = -1;

/// Embeddings of a set of classes, in arbitrary order. ids[i] labels embs[i].
struct ClassEmbeddings {
  std::vector<int> ids;
  std::vector<DiagGaussian> embs;

  std::size_t size() const noexcept { return ids.size(); }
  /// Position of `id` in the set, or -1.
  std::ptrdiff_t index_of(int id) const noexcept;
};

struct MiningResult {
  /// Hardest negative class id per anchor; kNoClass for skipped anchors.
  std::vector<int> negatives;
  /// Anchors whose own class was absent from the class set.
  std::size_t skipped_anchors = 0;
};

/// For each anchor i: argmin over classes j ≠ labels[i] of d(image_embs[i], class j),
/// ties resolved to the lowest class id. Throws MiningError with fewer than
/// two classes.
MiningResult mine_negatives(std::span<const DiagGaussian> image_embs, std::span<const int> labels,
                            const ClassEmbeddings& classes, DistanceKind kind);

/// [d_pos − d_neg + margin]₊
double hinge_term(double d_pos, double d_neg, double margin) noexcept;

struct TripletLossResult {
  /// Mean hinge over the non-skipped anchors; 0 when every anchor is skipped.
  double loss = 0.0;
  std::size_t active_anchors = 0;
  std::size_t violated = 0;  // anchors with a strictly positive hinge
  std::vector<GaussianGrad> image_grads;  // aligned with image_embs
  std::vector<GaussianGrad> class_grads;  // aligned with classes.embs
  /// Index of the first anchor whose term was not finite, or -1.
  std::ptrdiff_t first_nonfinite_anchor = -1;

  double violated_fraction() const noexcept {
    return active_anchors == 0 ? 0.0
                               : static_cast<double>(violated) / static_cast<double>(active_anchors);
  }
};

/// Batch-averaged triplet hinge loss for pre-mined negatives, with cotangents
/// for every image and class embedding. Throws ConfigError when margin ≤ 0.
TripletLossResult triplet_loss(std::span<const DiagGaussian> image_embs,
                               std::span<const int> labels, const ClassEmbeddings& classes,
                               std::span<const int> negatives, double margin, DistanceKind kind);

}  // namespace zsl
