#pragma once

#include <cstddef>
#include <cstdint>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "zsl/config.hpp"
#include "zsl/core/layers.hpp"
#include "zsl/dataset.hpp"
#include "zsl/distributions.hpp"
#include "zsl/encoder.hpp"
#include "zsl/triplet.hpp"

namespace zsl {

// ---------------------------------------------------------------------------
// Nearest-class prediction

/// Index-free argmin: per image, the id of the closest class (ties → lowest id).
std::vector<int> nearest_classes(std::span<const DiagGaussian> image_embs,
                                 const ClassEmbeddings& classes, DistanceKind kind);

/// Embeds `candidates` (rows of `attributes`, indexed by class id) with the
/// semantic encoder and every feature row with the visual encoder, both in
/// inference arithmetic, and returns the nearest candidate per row.
/// Throws ConfigError on an empty candidate set and DataError when a
/// candidate has no attribute row.
std::vector<int> predict_zsl(const Encoder& visual, const Encoder& semantic, const Matrix& features,
                             std::span<const int> candidates, const Matrix& attributes,
                             DistanceKind kind);

ClassEmbeddings embed_classes(const Encoder& semantic, std::span<const int> class_ids,
                              const Matrix& attributes);

// ---------------------------------------------------------------------------
// Latent generation and the softmax classifier trained on it

struct GenerationConfig {
  std::size_t samples_per_unseen_class = 200;
  std::size_t ratio_seen = 1;    // seen:unseen sample-count ratio
  std::size_t ratio_unseen = 2;
  double classifier_lr = 1e-3;
  std::size_t classifier_epochs = 30;
  std::size_t classifier_batch = 128;
  std::uint64_t seed = 1;

  void validate() const;
  /// Reads the gen.* keys.
  void read(const KeyValueConfig& kv);
  void write(KeyValueConfig& kv) const;
  /// round(samples_per_unseen_class · ratio_seen / ratio_unseen), at least 1.
  std::size_t samples_per_seen_class() const;
};

/// Parses "S:U" (e.g. "1:2") into its two positive parts.
std::pair<std::size_t, std::size_t> parse_ratio(std::string_view text);

struct LatentDataset {
  Matrix samples;           // n x K
  std::vector<int> labels;  // n
};

/// Draws samples from f_Φ(a_c) for every seen and unseen class: seen classes
/// get samples_per_seen_class() rows, unseen classes samples_per_unseen_class.
LatentDataset generate_latent_dataset(const Encoder& semantic, const Matrix& attributes,
                                      std::span<const int> seen, std::span<const int> unseen,
                                      const GenerationConfig& gen, Rng& rng);

/// Single linear layer + softmax over a fixed class list.
class SoftmaxClassifier {
 public:
  SoftmaxClassifier() = default;
  /// Zero-initialized weights over `class_ids` (sorted ascending internally).
  SoftmaxClassifier(std::size_t input_dim, std::vector<int> class_ids);

  /// Trains with Adam on shuffled minibatches. Throws ConfigError when a class
  /// has no sample or a label is outside `class_ids`.
  static SoftmaxClassifier train(const Matrix& samples, std::span<const int> labels,
                                 std::vector<int> class_ids, const GenerationConfig& gen,
                                 Rng& rng);

  /// Mean cross-entropy over the rows; accumulates its gradient into the layer.
  double loss_and_grad(const Matrix& samples, std::span<const int> labels);
  Matrix logits(const Matrix& samples) const;
  std::vector<int> predict(const Matrix& samples) const;

  const std::vector<int>& class_ids() const noexcept { return class_ids_; }
  LinearLayer& layer() noexcept { return layer_; }
  const LinearLayer& layer() const noexcept { return layer_; }

 private:
  std::vector<std::size_t> label_indices(std::span<const int> labels) const;

  LinearLayer layer_;
  std::vector<int> class_ids_;
};

// ---------------------------------------------------------------------------
// Evaluation

enum class EvalMode { kZsl, kGzslNearest, kGzslGenerated };

std::string_view to_string(EvalMode mode);
/// Accepts "zsl", "gzsl_nn", "gzsl_generated".
EvalMode parse_eval_mode(std::string_view name);

struct EvalReport {
  EvalMode mode = EvalMode::kZsl;
  DistanceKind distance = DistanceKind::kWasserstein2;
  std::map<int, double> per_class_acc;       // fraction in [0,1]
  std::map<int, std::size_t> n_evaluated;
  double unseen_top1 = 0.0;                  // U, percent
  std::optional<double> seen_top1;           // S, percent (GZSL only)
  std::optional<double> harmonic;            // H, percent (GZSL only)
};

/// zsl: test_unseen rows, candidates = unseen classes.
/// gzsl_nn: test_unseen and test_seen rows, candidates = all classes.
/// gzsl_generated: like gzsl_nn, but rows are classified by a softmax
/// classifier trained on latent samples and applied to f_Θ(x).mean.
/// Throws ConfigError for gzsl_generated without `gen`, DataError when a
/// required test split is empty.
EvalReport evaluate(const Encoder& visual, const Encoder& semantic, const ZslDataset& dataset,
                    EvalMode mode, DistanceKind kind,
                    const GenerationConfig* gen = nullptr);

/// Human-readable table.
std::string format_report_text(const EvalReport& report, const ZslDataset* dataset = nullptr);
/// `key = value` lines, including acc.<class id> per class.
std::string format_report_kv(const EvalReport& report);

/// Latent means of every row, one line per row: K comma-separated values and
/// the label as a trailing column.
std::string export_embeddings(const Encoder& visual, const Matrix& features,
                              std::span<const int> labels);

}  // namespace zsl
