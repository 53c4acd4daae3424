#include "zsl/inference.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <sstream>
#include <tuple>

#include "zsl/core/adam.hpp"
#include "zsl/error.hpp"
#include "zsl/metrics.hpp"
#include "zsl/text_io.hpp"

namespace zsl {

// ---------------------------------------------------------------------------
// Nearest-class prediction

std::vector<int> nearest_classes(std::span<const DiagGaussian> image_embs,
                                 const ClassEmbeddings& classes, DistanceKind kind) {
  if (classes.size() == 0) throw ConfigError("nearest_classes: empty candidate set");
  std::vector<int> out(image_embs.size(), kNoClass);
  for (std::size_t i = 0; i < image_embs.size(); ++i) {
    double best = std::numeric_limits<double>::infinity();
    int best_id = kNoClass;
    for (std::size_t j = 0; j < classes.size(); ++j) {
      const double d = distance(kind, image_embs[i], classes.embs[j]);
      const int id = classes.ids[j];
      if (best_id == kNoClass || d < best || (d == best && id < best_id)) {
        best = d;
        best_id = id;
      }
    }
    out[i] = best_id;
  }
  return out;
}

ClassEmbeddings embed_classes(const Encoder& semantic, std::span<const int> class_ids,
                              const Matrix& attributes) {
  std::vector<std::size_t> rows;
  rows.reserve(class_ids.size());
  for (int id : class_ids) {
    if (id < 0 || static_cast<std::size_t>(id) >= attributes.rows()) {
      throw DataError("class " + std::to_string(id) + " has no attribute row");
    }
    rows.push_back(static_cast<std::size_t>(id));
  }
  ClassEmbeddings out;
  out.ids.assign(class_ids.begin(), class_ids.end());
  out.embs = semantic.infer(attributes.gather_rows(rows));
  return out;
}

std::vector<int> predict_zsl(const Encoder& visual, const Encoder& semantic, const Matrix& features,
                             std::span<const int> candidates, const Matrix& attributes,
                             DistanceKind kind) {
  if (candidates.empty()) throw ConfigError("predict_zsl: empty candidate set");
  const ClassEmbeddings classes = embed_classes(semantic, candidates, attributes);
  const auto images = visual.infer(features);
  return nearest_classes(images, classes, kind);
}

// ---------------------------------------------------------------------------
// Generation

void GenerationConfig::validate() const {
  if (samples_per_unseen_class < 1) throw ConfigError("samples_per_unseen_class must be >= 1");
  if (ratio_seen < 1 || ratio_unseen < 1) throw ConfigError("generation ratio parts must be >= 1");
  if (!(classifier_lr > 0.0)) throw ConfigError("classifier_lr must be positive");
  if (classifier_epochs < 1) throw ConfigError("classifier_epochs must be >= 1");
  if (classifier_batch < 1) throw ConfigError("classifier_batch must be >= 1");
}

void GenerationConfig::read(const KeyValueConfig& kv) {
  if (auto v = kv.get_uint("gen.samples_per_unseen_class")) samples_per_unseen_class = *v;
  if (auto v = kv.get_string("gen.seen_to_unseen_ratio")) {
    std::tie(ratio_seen, ratio_unseen) = parse_ratio(*v);
  }
  if (auto v = kv.get_double("gen.classifier_lr")) classifier_lr = *v;
  if (auto v = kv.get_uint("gen.classifier_epochs")) classifier_epochs = *v;
  if (auto v = kv.get_uint("gen.classifier_batch")) classifier_batch = *v;
  if (auto v = kv.get_uint("gen.seed")) seed = *v;
}

void GenerationConfig::write(KeyValueConfig& kv) const {
  kv.set("gen.samples_per_unseen_class", std::to_string(samples_per_unseen_class));
  kv.set("gen.seen_to_unseen_ratio", std::to_string(ratio_seen) + ":" + std::to_string(ratio_unseen));
  kv.set("gen.classifier_lr", format_double(classifier_lr));
  kv.set("gen.classifier_epochs", std::to_string(classifier_epochs));
  kv.set("gen.classifier_batch", std::to_string(classifier_batch));
  kv.set("gen.seed", std::to_string(seed));
}

std::pair<std::size_t, std::size_t> parse_ratio(std::string_view text) {
  const auto colon = text.find(':');
  if (colon == std::string_view::npos) {
    throw ConfigError("ratio '" + std::string(text) + "' is not of the form S:U");
  }
  long long s = 0, u = 0;
  try {
    s = parse_int(text.substr(0, colon));
    u = parse_int(text.substr(colon + 1));
  } catch (const FormatError&) {
    throw ConfigError("ratio '" + std::string(text) + "' is not of the form S:U");
  }
  if (s < 1 || u < 1) throw ConfigError("ratio parts must be >= 1 in '" + std::string(text) + "'");
  return {static_cast<std::size_t>(s), static_cast<std::size_t>(u)};
}

std::size_t GenerationConfig::samples_per_seen_class() const {
  const double n = static_cast<double>(samples_per_unseen_class) *
                   static_cast<double>(ratio_seen) / static_cast<double>(ratio_unseen);
  return std::max<std::size_t>(1, static_cast<std::size_t>(std::llround(n)));
}

LatentDataset generate_latent_dataset(const Encoder& semantic, const Matrix& attributes,
                                      std::span<const int> seen, std::span<const int> unseen,
                                      const GenerationConfig& gen, Rng& rng) {
  gen.validate();
  std::vector<std::pair<int, std::size_t>> plan;
  for (int c : seen) plan.emplace_back(c, gen.samples_per_seen_class());
  for (int c : unseen) plan.emplace_back(c, gen.samples_per_unseen_class);

  std::vector<int> ids;
  for (const auto& [c, n] : plan) ids.push_back(c);
  const ClassEmbeddings classes = embed_classes(semantic, ids, attributes);

  std::size_t total = 0;
  for (const auto& [c, n] : plan) total += n;
  LatentDataset out;
  out.samples = Matrix(total, semantic.config().latent_dim);
  out.labels.reserve(total);
  std::size_t row = 0;
  for (std::size_t i = 0; i < plan.size(); ++i) {
    const Matrix drawn = sample(classes.embs[i], plan[i].second, rng);
    for (std::size_t r = 0; r < drawn.rows(); ++r, ++row) {
      std::copy(drawn.row(r).begin(), drawn.row(r).end(), out.samples.row(row).begin());
      out.labels.push_back(plan[i].first);
    }
  }
  return out;
}

// ---------------------------------------------------------------------------
// SoftmaxClassifier

SoftmaxClassifier::SoftmaxClassifier(std::size_t input_dim, std::vector<int> class_ids)
    : layer_(input_dim, class_ids.size()), class_ids_(std::move(class_ids)) {
  std::sort(class_ids_.begin(), class_ids_.end());
  class_ids_.erase(std::unique(class_ids_.begin(), class_ids_.end()), class_ids_.end());
  layer_ = LinearLayer(input_dim, class_ids_.size());
  if (class_ids_.empty()) throw ConfigError("softmax classifier needs at least one class");
}

std::vector<std::size_t> SoftmaxClassifier::label_indices(std::span<const int> labels) const {
  std::vector<std::size_t> out;
  out.reserve(labels.size());
  for (int y : labels) {
    auto it = std::lower_bound(class_ids_.begin(), class_ids_.end(), y);
    if (it == class_ids_.end() || *it != y) {
      throw ConfigError("softmax classifier: label " + std::to_string(y) + " not in class list");
    }
    out.push_back(static_cast<std::size_t>(it - class_ids_.begin()));
  }
  return out;
}

Matrix SoftmaxClassifier::logits(const Matrix& samples) const { return layer_.apply(samples); }

double SoftmaxClassifier::loss_and_grad(const Matrix& samples, std::span<const int> labels) {
  if (samples.rows() != labels.size()) {
    throw ShapeError("softmax classifier: samples and labels differ in length");
  }
  if (samples.rows() == 0) return 0.0;
  const auto targets = label_indices(labels);
  Matrix z = layer_.forward(samples);
  const double inv_n = 1.0 / static_cast<double>(samples.rows());
  double loss = 0.0;
  for (std::size_t r = 0; r < z.rows(); ++r) {
    auto row = z.row(r);
    const double zmax = *std::max_element(row.begin(), row.end());
    double sum = 0.0;
    for (double v : row) sum += std::exp(v - zmax);
    const double log_norm = zmax + std::log(sum);
    loss -= row[targets[r]] - log_norm;
    for (std::size_t j = 0; j < row.size(); ++j) {
      const double p = std::exp(row[j] - log_norm);
      row[j] = (p - (j == targets[r] ? 1.0 : 0.0)) * inv_n;
    }
  }
  layer_.backward(z);
  return loss * inv_n;
}

std::vector<int> SoftmaxClassifier::predict(const Matrix& samples) const {
  const Matrix z = logits(samples);
  std::vector<int> out(z.rows());
  for (std::size_t r = 0; r < z.rows(); ++r) {
    auto row = z.row(r);
    // max_element keeps the first maximum, i.e. the lowest class id.
    out[r] = class_ids_[static_cast<std::size_t>(std::max_element(row.begin(), row.end()) -
                                                 row.begin())];
  }
  return out;
}

SoftmaxClassifier SoftmaxClassifier::train(const Matrix& samples, std::span<const int> labels,
                                           std::vector<int> class_ids,
                                           const GenerationConfig& gen, Rng& rng) {
  gen.validate();
  SoftmaxClassifier clf(samples.cols(), std::move(class_ids));
  const auto targets = clf.label_indices(labels);
  std::vector<std::size_t> per_class(clf.class_ids_.size(), 0);
  for (auto t : targets) ++per_class[t];
  for (std::size_t j = 0; j < per_class.size(); ++j) {
    if (per_class[j] == 0) {
      throw ConfigError("softmax classifier: class " + std::to_string(clf.class_ids_[j]) +
                        " has no training sample");
    }
  }

  Adam adam(AdamConfig{.lr = gen.classifier_lr});
  auto params = clf.layer_.parameters("softmax");
  std::vector<std::size_t> order(samples.rows());
  std::iota(order.begin(), order.end(), 0);
  std::vector<int> batch_labels;
  for (std::size_t epoch = 0; epoch < gen.classifier_epochs; ++epoch) {
    std::shuffle(order.begin(), order.end(), rng);
    for (std::size_t start = 0; start < order.size(); start += gen.classifier_batch) {
      const std::size_t end = std::min(order.size(), start + gen.classifier_batch);
      std::span<const std::size_t> idx(order.data() + start, end - start);
      batch_labels.clear();
      for (auto i : idx) batch_labels.push_back(labels[i]);
      clf.layer_.zero_grad();
      clf.loss_and_grad(samples.gather_rows(idx), batch_labels);
      adam.step(params);
    }
  }
  clf.layer_.zero_grad();
  return clf;
}

// ---------------------------------------------------------------------------
// Evaluation

std::string_view to_string(EvalMode mode) {
  switch (mode) {
    case EvalMode::kZsl: return "zsl";
    case EvalMode::kGzslNearest: return "gzsl_nn";
    case EvalMode::kGzslGenerated: return "gzsl_generated";
  }
  return "unknown";
}

EvalMode parse_eval_mode(std::string_view name) {
  if (name == "zsl") return EvalMode::kZsl;
  if (name == "gzsl_nn") return EvalMode::kGzslNearest;
  if (name == "gzsl_generated") return EvalMode::kGzslGenerated;
  throw ConfigError("unknown evaluation mode '" + std::string(name) + "'");
}

namespace {

std::vector<int> labels_of(const ZslDataset& ds, std::span<const std::size_t> rows) {
  std::vector<int> out;
  out.reserve(rows.size());
  for (auto r : rows) out.push_back(ds.labels[r]);
  return out;
}

void merge_into(EvalReport& report, const PerClassAccuracy& acc) {
  for (const auto& [c, a] : acc.accuracy) report.per_class_acc[c] = a;
  for (const auto& [c, n] : acc.count) report.n_evaluated[c] = n;
}

}  // namespace

EvalReport evaluate(const Encoder& visual, const Encoder& semantic, const ZslDataset& dataset,
                    EvalMode mode, DistanceKind kind, const GenerationConfig* gen) {
  if (mode == EvalMode::kGzslGenerated && gen == nullptr) {
    throw ConfigError("gzsl_generated evaluation requires a generation config");
  }
  const auto unseen_rows = dataset.rows_with(Split::kTestUnseen);
  if (unseen_rows.empty()) throw DataError("evaluation needs test_unseen rows");
  const auto seen_rows = dataset.rows_with(Split::kTestSeen);
  if (mode != EvalMode::kZsl && seen_rows.empty()) {
    throw DataError("GZSL evaluation needs test_seen rows");
  }

  EvalReport report;
  report.mode = mode;
  report.distance = kind;

  const auto unseen_truth = labels_of(dataset, unseen_rows);
  const auto seen_truth = labels_of(dataset, seen_rows);
  std::vector<int> unseen_pred, seen_pred;

  if (mode == EvalMode::kZsl) {
    unseen_pred = predict_zsl(visual, semantic, dataset.features.gather_rows(unseen_rows),
                              dataset.unseen_classes(), dataset.attributes, kind);
  } else if (mode == EvalMode::kGzslNearest) {
    std::vector<int> all(dataset.num_classes());
    std::iota(all.begin(), all.end(), 0);
    const ClassEmbeddings classes = embed_classes(semantic, all, dataset.attributes);
    unseen_pred =
        nearest_classes(visual.infer(dataset.features.gather_rows(unseen_rows)), classes, kind);
    seen_pred =
        nearest_classes(visual.infer(dataset.features.gather_rows(seen_rows)), classes, kind);
  } else {
    Rng rng(gen->seed);
    const auto seen = dataset.seen_classes();
    const auto unseen = dataset.unseen_classes();
    const LatentDataset latent =
        generate_latent_dataset(semantic, dataset.attributes, seen, unseen, *gen, rng);
    std::vector<int> all(dataset.num_classes());
    std::iota(all.begin(), all.end(), 0);
    const SoftmaxClassifier clf =
        SoftmaxClassifier::train(latent.samples, latent.labels, all, *gen, rng);
    auto means_of = [&](std::span<const std::size_t> rows) {
      const auto embs = visual.infer(dataset.features.gather_rows(rows));
      Matrix m(embs.size(), visual.config().latent_dim);
      for (std::size_t r = 0; r < embs.size(); ++r) {
        std::copy(embs[r].mean.begin(), embs[r].mean.end(), m.row(r).begin());
      }
      return m;
    };
    unseen_pred = clf.predict(means_of(unseen_rows));
    seen_pred = clf.predict(means_of(seen_rows));
  }

  const PerClassAccuracy u = per_class_top1(unseen_pred, unseen_truth);
  merge_into(report, u);
  report.unseen_top1 = 100.0 * u.mean;
  if (mode != EvalMode::kZsl) {
    const PerClassAccuracy s = per_class_top1(seen_pred, seen_truth);
    merge_into(report, s);
    report.seen_top1 = 100.0 * s.mean;
    report.harmonic = harmonic_mean(*report.seen_top1, report.unseen_top1);
  }
  return report;
}

namespace {

std::string fixed(double v, int digits) {
  std::ostringstream ss;
  ss.setf(std::ios::fixed);
  ss.precision(digits);
  ss << v;
  return ss.str();
}

}  // namespace

std::string format_report_text(const EvalReport& report, const ZslDataset* dataset) {
  std::ostringstream out;
  out << "mode      " << to_string(report.mode) << "\n";
  out << "distance  " << to_string(report.distance) << "\n";
  out << "U         " << fixed(report.unseen_top1, 2) << "\n";
  if (report.seen_top1) out << "S         " << fixed(*report.seen_top1, 2) << "\n";
  if (report.harmonic) out << "H         " << fixed(*report.harmonic, 2) << "\n";
  out << "\nclass  kind    n     top1\n";
  for (const auto& [c, acc] : report.per_class_acc) {
    std::string kind = "-";
    if (dataset && static_cast<std::size_t>(c) < dataset->num_classes()) {
      kind = dataset->class_seen[static_cast<std::size_t>(c)] ? "seen" : "unseen";
    }
    std::string line = std::to_string(c);
    line.resize(7, ' ');
    kind.resize(8, ' ');
    std::string n = std::to_string(report.n_evaluated.at(c));
    n.resize(6, ' ');
    out << line << kind << n << fixed(100.0 * acc, 2) << "\n";
  }
  return out.str();
}

std::string format_report_kv(const EvalReport& report) {
  std::string out;
  out += "mode = " + std::string(to_string(report.mode)) + "\n";
  out += "distance = " + std::string(to_string(report.distance)) + "\n";
  out += "U = " + format_double(report.unseen_top1) + "\n";
  if (report.seen_top1) out += "S = " + format_double(*report.seen_top1) + "\n";
  if (report.harmonic) out += "H = " + format_double(*report.harmonic) + "\n";
  for (const auto& [c, acc] : report.per_class_acc) {
    out += "acc." + std::to_string(c) + " = " + format_double(acc) + "\n";
    out += "n." + std::to_string(c) + " = " + std::to_string(report.n_evaluated.at(c)) + "\n";
  }
  return out;
}

std::string export_embeddings(const Encoder& visual, const Matrix& features,
                              std::span<const int> labels) {
  if (labels.size() != features.rows()) {
    throw ShapeError("export_embeddings: labels count != feature rows");
  }
  const auto embs = visual.infer(features);
  std::string out;
  for (std::size_t r = 0; r < embs.size(); ++r) {
    for (double v : embs[r].mean) out += format_double(v) + ",";
    out += std::to_string(labels[r]) + "\n";
  }
  return out;
}

}  // namespace zsl
