#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <string>
#include <utility>
#include <vector>

#include "zsl/config.hpp"
#include "zsl/core/adam.hpp"
#include "zsl/dataset.hpp"
#include "zsl/distributions.hpp"
#include "zsl/encoder.hpp"
#include "zsl/inference.hpp"

namespace zsl {

struct TrainConfig {
  std::size_t batch_size = 64;
  double learning_rate = 1e-5;
  double margin = 1.0;
  std::size_t iterations = 1000;
  std::uint64_t seed = 1;
  DistanceKind distance = DistanceKind::kWasserstein2;
  std::size_t eval_every = 0;  // 0 disables periodic evaluation
  std::size_t latent_dim = 64;
  std::size_t visual_hidden = 512;
  std::size_t semantic_hidden = 512;
  double visual_dropout = 0.5;
  double semantic_dropout = 0.1;
  bool use_batchnorm = true;

  void validate() const;
  EncoderConfig visual_encoder(std::size_t feature_dim) const;
  EncoderConfig semantic_encoder(std::size_t attribute_dim) const;

  /// Reads every key this struct knows from `kv`, leaving absent ones at
  /// their current value.
  void read(const KeyValueConfig& kv);
  void write(KeyValueConfig& kv) const;
  bool operator==(const TrainConfig&) const = default;
};

struct StepRecord {
  std::size_t step = 0;
  double loss = 0.0;  // pre-update
  double violated_fraction = 0.0;
  double seconds = 0.0;
};

struct RunLog {
  std::vector<StepRecord> steps;
  std::vector<std::pair<std::size_t, EvalReport>> evaluations;
  std::size_t skipped_anchors = 0;

  std::vector<double> losses() const;
  /// Header comment lines (total wall-clock only) then one
  /// "step<TAB>loss<TAB>violated_fraction" row per step.
  std::string to_text(bool include_timing_header = true) const;
};

/// One joint optimization of the visual and semantic encoders over a dataset.
/// Each step(): sample a minibatch from an epoch-shuffled pass over the
/// train_seen rows, encode it and every seen-class attribute vector, mine the
/// hardest negative class per image, take the triplet hinge loss and apply one
/// Adam update to both encoders.
class Trainer {
 public:
  Trainer(const ZslDataset& dataset, const TrainConfig& config);

  /// Runs one iteration and returns its record (loss before the update).
  StepRecord step();

  Encoder& visual() noexcept { return visual_; }
  Encoder& semantic() noexcept { return semantic_; }
  const Encoder& visual() const noexcept { return visual_; }
  const Encoder& semantic() const noexcept { return semantic_; }
  const TrainConfig& config() const noexcept { return config_; }
  std::size_t steps_taken() const noexcept { return steps_taken_; }
  std::size_t skipped_anchors() const noexcept { return skipped_anchors_; }

  /// Indices of the next minibatch (advances the epoch permutation).
  std::vector<std::size_t> next_batch();

 private:
  const ZslDataset& dataset_;
  TrainConfig config_;
  Encoder visual_;
  Encoder semantic_;
  Adam adam_;
  Rng data_rng_;
  Rng dropout_rng_;
  std::vector<std::size_t> train_rows_;
  std::vector<std::size_t> order_;
  std::size_t cursor_ = 0;
  std::vector<int> seen_;
  Matrix seen_attributes_;
  std::size_t steps_taken_ = 0;
  std::size_t skipped_anchors_ = 0;
};

struct TrainResult {
  Encoder visual;
  Encoder semantic;
  RunLog log;
};

/// Runs config.iterations steps and returns both encoders in inference mode.
TrainResult train(const ZslDataset& dataset, const TrainConfig& config);

// ---------------------------------------------------------------------------
// Checkpoints
//
// Little-endian binary:
//   "ZSLCKPT\0" | u32 version | str train-config text |
//   2 x encoder record { str role | u64 input, hidden, latent | f64 dropout |
//                        u8 batchnorm | u8 fallback | f64 bn momentum | f64 bn eps |
//                        u32 tensor count | tensors { str name | u64 rows | u64 cols |
//                        u64 n | n x f64 } }
// Strings are u32 length + bytes.

inline constexpr std::uint32_t kCheckpointVersion = 1;

struct Checkpoint {
  Encoder visual;
  Encoder semantic;
  TrainConfig config;

  /// Throws FormatError when the encoders' input widths disagree with a
  /// dataset's feature/attribute widths.
  void require_input_dims(std::size_t feature_dim, std::size_t attribute_dim) const;
};

void save_checkpoint(const Encoder& visual, const Encoder& semantic, const TrainConfig& config,
                     const std::filesystem::path& path);
/// Fully parses and validates before returning; encoders come back in
/// inference mode. Throws FormatError on any corruption.
Checkpoint load_checkpoint(const std::filesystem::path& path);

std::string serialize_checkpoint(const Encoder& visual, const Encoder& semantic,
                                 const TrainConfig& config);
Checkpoint deserialize_checkpoint(std::string_view bytes);

}  // namespace zsl
