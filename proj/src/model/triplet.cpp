#include "zsl/triplet.hpp"

#include <cmath>
#include <limits>

#include "zsl/error.hpp"

namespace zsl {

std::ptrdiff_t ClassEmbeddings::index_of(int id) const noexcept {
  for (std::size_t i = 0; i < ids.size(); ++i) {
    if (ids[i] == id) return static_cast<std::ptrdiff_t>(i);
  }
  return -1;
}

MiningResult mine_negatives(std::span<const DiagGaussian> image_embs, std::span<const int> labels,
                            const ClassEmbeddings& classes, DistanceKind kind) {
  if (image_embs.size() != labels.size()) {
    throw ShapeError("mine_negatives: embeddings and labels differ in length");
  }
  if (classes.ids.size() != classes.embs.size()) {
    throw ShapeError("mine_negatives: class ids and embeddings differ in length");
  }
  if (classes.size() < 2) {
    throw MiningError("mine_negatives: need at least two classes, got " +
                      std::to_string(classes.size()));
  }

  MiningResult result;
  result.negatives.assign(image_embs.size(), kNoClass);
  for (std::size_t i = 0; i < image_embs.size(); ++i) {
    if (classes.index_of(labels[i]) < 0) {
      ++result.skipped_anchors;
      continue;
    }
    double best = std::numeric_limits<double>::infinity();
    int best_id = kNoClass;
    for (std::size_t j = 0; j < classes.size(); ++j) {
      const int id = classes.ids[j];
      if (id == labels[i]) continue;
      const double d = distance(kind, image_embs[i], classes.embs[j]);
      if (d < best || (d == best && id < best_id) || best_id == kNoClass) {
        best = d;
        best_id = id;
      }
    }
    result.negatives[i] = best_id;
  }
  return result;
}

double hinge_term(double d_pos, double d_neg, double margin) noexcept {
  const double v = d_pos - d_neg + margin;
  return v < 0.0 ? 0.0 : v;  // NaN passes through
}

TripletLossResult triplet_loss(std::span<const DiagGaussian> image_embs,
                               std::span<const int> labels, const ClassEmbeddings& classes,
                               std::span<const int> negatives, double margin, DistanceKind kind) {
  if (!(margin > 0.0)) throw ConfigError("triplet margin must be positive");
  if (image_embs.size() != labels.size() || negatives.size() != labels.size()) {
    throw ShapeError("triplet_loss: embeddings, labels and negatives differ in length");
  }

  TripletLossResult out;
  out.image_grads.reserve(image_embs.size());
  for (const auto& e : image_embs) out.image_grads.emplace_back(e.dim());
  out.class_grads.reserve(classes.size());
  for (const auto& e : classes.embs) out.class_grads.emplace_back(e.dim());

  struct Active {
    std::size_t anchor;
    std::size_t pos;
    std::size_t neg;
  };
  std::vector<Active> violated;
  double sum = 0.0;
  for (std::size_t i = 0; i < image_embs.size(); ++i) {
    const std::ptrdiff_t pos = classes.index_of(labels[i]);
    if (pos < 0 || negatives[i] == kNoClass) continue;
    const std::ptrdiff_t neg = classes.index_of(negatives[i]);
    if (neg < 0) {
      throw DataError("triplet_loss: negative class " + std::to_string(negatives[i]) +
                      " missing from class set");
    }
    if (neg == pos) throw DataError("triplet_loss: negative equals positive class");
    ++out.active_anchors;
    const double d_pos = distance(kind, image_embs[i], classes.embs[pos]);
    const double d_neg = distance(kind, image_embs[i], classes.embs[neg]);
    const double term = hinge_term(d_pos, d_neg, margin);
    if (!std::isfinite(d_pos) || !std::isfinite(d_neg)) {
      if (out.first_nonfinite_anchor < 0) out.first_nonfinite_anchor = static_cast<std::ptrdiff_t>(i);
    }
    if (term > 0.0) {
      ++out.violated;
      violated.push_back({i, static_cast<std::size_t>(pos), static_cast<std::size_t>(neg)});
    }
    sum += term;
  }
  if (out.active_anchors == 0) return out;

  const double scale = 1.0 / static_cast<double>(out.active_anchors);
  out.loss = sum * scale;
  for (const Active& a : violated) {
    distance_backward(kind, image_embs[a.anchor], classes.embs[a.pos], scale,
                      out.image_grads[a.anchor], out.class_grads[a.pos]);
    distance_backward(kind, image_embs[a.anchor], classes.embs[a.neg], -scale,
                      out.image_grads[a.anchor], out.class_grads[a.neg]);
  }
  return out;
}

}  // namespace zsl
