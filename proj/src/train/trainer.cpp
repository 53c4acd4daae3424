#include "zsl/trainer.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <numeric>
#include <sstream>

#include "zsl/error.hpp"
#include "zsl/text_io.hpp"
#include "zsl/triplet.hpp"

namespace zsl {

// ---------------------------------------------------------------------------
// TrainConfig

void TrainConfig::validate() const {
  if (batch_size < 2) throw ConfigError("batch_size must be at least 2");
  if (iterations < 1) throw ConfigError("iterations must be at least 1");
  if (!(learning_rate > 0.0) || !std::isfinite(learning_rate)) {
    throw ConfigError("learning_rate must be positive");
  }
  if (!(margin > 0.0) || !std::isfinite(margin)) throw ConfigError("margin must be positive");
  if (latent_dim < 1 || visual_hidden < 1 || semantic_hidden < 1) {
    throw ConfigError("latent and hidden widths must be at least 1");
  }
  if (!(visual_dropout >= 0.0 && visual_dropout < 1.0) ||
      !(semantic_dropout >= 0.0 && semantic_dropout < 1.0)) {
    throw ConfigError("dropout rates must be in [0,1)");
  }
}

EncoderConfig TrainConfig::visual_encoder(std::size_t feature_dim) const {
  return EncoderConfig{.input_dim = feature_dim,
                       .hidden_dim = visual_hidden,
                       .latent_dim = latent_dim,
                       .dropout_rate = visual_dropout,
                       .use_batchnorm = use_batchnorm,
                       .batchnorm_small_batch_fallback = false};
}

EncoderConfig TrainConfig::semantic_encoder(std::size_t attribute_dim) const {
  return EncoderConfig{.input_dim = attribute_dim,
                       .hidden_dim = semantic_hidden,
                       .latent_dim = latent_dim,
                       .dropout_rate = semantic_dropout,
                       .use_batchnorm = use_batchnorm,
                       .batchnorm_small_batch_fallback = true};
}

void TrainConfig::read(const KeyValueConfig& kv) {
  if (auto v = kv.get_uint("batch_size")) batch_size = *v;
  if (auto v = kv.get_double("learning_rate")) learning_rate = *v;
  if (auto v = kv.get_double("margin")) margin = *v;
  if (auto v = kv.get_uint("iterations")) iterations = *v;
  if (auto v = kv.get_uint("seed")) seed = *v;
  if (auto v = kv.get_string("distance")) distance = parse_distance_kind(*v);
  if (auto v = kv.get_uint("eval_every")) eval_every = *v;
  if (auto v = kv.get_uint("latent_dim")) latent_dim = *v;
  if (auto v = kv.get_uint("visual_hidden")) visual_hidden = *v;
  if (auto v = kv.get_uint("semantic_hidden")) semantic_hidden = *v;
  if (auto v = kv.get_double("visual_dropout")) visual_dropout = *v;
  if (auto v = kv.get_double("semantic_dropout")) semantic_dropout = *v;
  if (auto v = kv.get_bool("use_batchnorm")) use_batchnorm = *v;
}

void TrainConfig::write(KeyValueConfig& kv) const {
  kv.set("batch_size", std::to_string(batch_size));
  kv.set("learning_rate", format_double(learning_rate));
  kv.set("margin", format_double(margin));
  kv.set("iterations", std::to_string(iterations));
  kv.set("seed", std::to_string(seed));
  kv.set("distance", std::string(to_string(distance)));
  kv.set("eval_every", std::to_string(eval_every));
  kv.set("latent_dim", std::to_string(latent_dim));
  kv.set("visual_hidden", std::to_string(visual_hidden));
  kv.set("semantic_hidden", std::to_string(semantic_hidden));
  kv.set("visual_dropout", format_double(visual_dropout));
  kv.set("semantic_dropout", format_double(semantic_dropout));
  kv.set("use_batchnorm", use_batchnorm ? "true" : "false");
}

// ---------------------------------------------------------------------------
// RunLog

std::vector<double> RunLog::losses() const {
  std::vector<double> out;
  out.reserve(steps.size());
  for (const auto& s : steps) out.push_back(s.loss);
  return out;
}

std::string RunLog::to_text(bool include_timing_header) const {
  std::string out;
  if (include_timing_header) {
    double total = 0.0;
    for (const auto& s : steps) total += s.seconds;
    std::ostringstream ss;
    ss << "# wall_clock_seconds " << total << "\n";
    out += ss.str();
  }
  out += "step\tloss\tviolated_fraction\n";
  for (const auto& s : steps) {
    out += std::to_string(s.step) + "\t" + format_double(s.loss) + "\t" +
           format_double(s.violated_fraction) + "\n";
  }
  return out;
}

// ---------------------------------------------------------------------------
// Trainer

namespace {

Rng stream(std::uint64_t seed, std::uint64_t id) {
  std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32),
                    static_cast<std::uint32_t>(id)};
  return Rng(seq);
}

Encoder make_encoder(const EncoderConfig& cfg, Rng& rng) { return Encoder(cfg, rng); }

}  // namespace

Trainer::Trainer(const ZslDataset& dataset, const TrainConfig& config)
    : dataset_(dataset),
      config_(config),
      adam_(AdamConfig{.lr = config.learning_rate}),
      data_rng_(stream(config.seed, 1)),
      dropout_rng_(stream(config.seed, 2)) {
  config_.validate();
  dataset_.validate();
  seen_ = dataset_.seen_classes();
  if (seen_.size() < 2) {
    throw ConfigError("training needs at least 2 seen classes, dataset has " +
                      std::to_string(seen_.size()));
  }
  train_rows_ = dataset_.rows_with(Split::kTrainSeen);
  if (train_rows_.empty()) throw ConfigError("dataset has no train_seen rows");
  std::vector<bool> has_example(dataset_.num_classes(), false);
  for (auto r : train_rows_) has_example[static_cast<std::size_t>(dataset_.labels[r])] = true;
  for (int c : seen_) {
    if (!has_example[static_cast<std::size_t>(c)]) {
      throw ConfigError("seen class " + std::to_string(c) + " has no train_seen example");
    }
  }

  Rng init = stream(config_.seed, 0);
  visual_ = make_encoder(config_.visual_encoder(dataset_.feature_dim()), init);
  semantic_ = make_encoder(config_.semantic_encoder(dataset_.attribute_dim()), init);
  visual_.set_mode(Mode::kTraining);
  semantic_.set_mode(Mode::kTraining);

  std::vector<std::size_t> seen_rows(seen_.begin(), seen_.end());
  seen_attributes_ = dataset_.attributes.gather_rows(seen_rows);
  order_ = train_rows_;
  cursor_ = order_.size();  // forces a shuffle on the first batch
}

std::vector<std::size_t> Trainer::next_batch() {
  std::vector<std::size_t> batch;
  batch.reserve(config_.batch_size);
  while (batch.size() < config_.batch_size) {
    if (cursor_ == order_.size()) {
      std::shuffle(order_.begin(), order_.end(), data_rng_);
      cursor_ = 0;
    }
    batch.push_back(order_[cursor_++]);
  }
  return batch;
}

StepRecord Trainer::step() {
  const auto t0 = std::chrono::steady_clock::now();
  const auto rows = next_batch();
  const Matrix x = dataset_.features.gather_rows(rows);
  std::vector<int> labels;
  labels.reserve(rows.size());
  for (auto r : rows) labels.push_back(dataset_.labels[r]);

  visual_.zero_grad();
  semantic_.zero_grad();
  const auto images = visual_.encode(x, dropout_rng_);
  ClassEmbeddings classes{seen_, semantic_.encode(seen_attributes_, dropout_rng_)};

  const MiningResult mined = mine_negatives(images, labels, classes, config_.distance);
  skipped_anchors_ += mined.skipped_anchors;
  TripletLossResult res =
      triplet_loss(images, labels, classes, mined.negatives, config_.margin, config_.distance);
  if (!std::isfinite(res.loss) || res.first_nonfinite_anchor >= 0) {
    const auto anchor = res.first_nonfinite_anchor;
    throw NumericalError("non-finite loss at step " + std::to_string(steps_taken_) +
                         (anchor >= 0 ? ", anchor row " + std::to_string(rows[anchor]) +
                                            " (label " + std::to_string(labels[anchor]) + ")"
                                      : std::string()));
  }

  visual_.encode_backward(res.image_grads);
  semantic_.encode_backward(res.class_grads);
  auto params = visual_.parameters("visual");
  for (auto& p : semantic_.parameters("semantic")) params.push_back(std::move(p));
  adam_.step(params);

  StepRecord rec;
  rec.step = steps_taken_++;
  rec.loss = res.loss;
  rec.violated_fraction = res.violated_fraction();
  rec.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  return rec;
}

TrainResult train(const ZslDataset& dataset, const TrainConfig& config) {
  Trainer trainer(dataset, config);
  RunLog log;
  log.steps.reserve(config.iterations);
  const bool can_eval = !dataset.rows_with(Split::kTestUnseen).empty();
  for (std::size_t i = 0; i < config.iterations; ++i) {
    log.steps.push_back(trainer.step());
    if (config.eval_every > 0 && can_eval && (i + 1) % config.eval_every == 0) {
      log.evaluations.emplace_back(i + 1, evaluate(trainer.visual(), trainer.semantic(), dataset,
                                                   EvalMode::kZsl, config.distance));
    }
  }
  log.skipped_anchors = trainer.skipped_anchors();
  TrainResult out{std::move(trainer.visual()), std::move(trainer.semantic()), std::move(log)};
  out.visual.set_mode(Mode::kInference);
  out.semantic.set_mode(Mode::kInference);
  return out;
}

}  // namespace zsl
