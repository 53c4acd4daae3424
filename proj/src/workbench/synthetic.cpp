#include "zsl/synthetic.hpp"

#include <algorithm>
#include <cmath>

#include "zsl/error.hpp"

namespace zsl {

void SyntheticSpec::validate() const {
  if (n_seen < 2) throw ConfigError("synthetic spec needs at least 2 seen classes");
  if (n_unseen < 1 || feature_dim < 1 || attribute_dim < 1 || examples_per_class < 1) {
    throw ConfigError("synthetic spec counts must be at least 1");
  }
  if (!(attribute_noise >= 0.0) || !(feature_noise >= 0.0)) {
    throw ConfigError("synthetic noise levels must be nonnegative");
  }
  if (!(test_seen_fraction >= 0.0 && test_seen_fraction < 1.0)) {
    throw ConfigError("test_seen_fraction must be in [0,1)");
  }
}

void SyntheticSpec::read(const KeyValueConfig& kv) {
  if (auto v = kv.get_uint("synth.n_seen")) n_seen = *v;
  if (auto v = kv.get_uint("synth.n_unseen")) n_unseen = *v;
  if (auto v = kv.get_uint("synth.feature_dim")) feature_dim = *v;
  if (auto v = kv.get_uint("synth.attribute_dim")) attribute_dim = *v;
  if (auto v = kv.get_uint("synth.examples_per_class")) examples_per_class = *v;
  if (auto v = kv.get_double("synth.attribute_noise")) attribute_noise = *v;
  if (auto v = kv.get_double("synth.feature_noise")) feature_noise = *v;
  if (auto v = kv.get_double("synth.test_seen_fraction")) test_seen_fraction = *v;
  if (auto v = kv.get_uint("synth.seed")) seed = *v;
}

SyntheticDataset make_synthetic(const SyntheticSpec& spec) {
  spec.validate();
  Rng rng(spec.seed);
  std::normal_distribution<double> normal(0.0, 1.0);

  const std::size_t n_classes = spec.n_seen + spec.n_unseen;
  const std::size_t L = spec.attribute_dim;
  const std::size_t D = spec.feature_dim;

  Matrix true_attrs(n_classes, L);
  for (std::size_t c = 0; c < n_classes; ++c) {
    auto row = true_attrs.row(c);
    double norm2 = 0.0;
    do {
      norm2 = 0.0;
      for (double& v : row) {
        v = normal(rng);
        norm2 += v * v;
      }
    } while (norm2 == 0.0);
    const double inv = 1.0 / std::sqrt(norm2);
    for (double& v : row) v *= inv;
  }

  // Entries N(0, 1/L) keep ‖W·a‖² ≈ D/L for unit a.
  Matrix map(D, L);
  const double w_scale = 1.0 / std::sqrt(static_cast<double>(L));
  for (double& v : map.values()) v = w_scale * normal(rng);

  SyntheticDataset out;
  out.class_feature_means = matmul_transposed(true_attrs, map);

  ZslDataset& ds = out.dataset;
  ds.attributes = true_attrs;
  if (spec.attribute_noise > 0.0) {
    for (double& v : ds.attributes.values()) v += spec.attribute_noise * normal(rng);
  }
  for (std::size_t c = 0; c < n_classes; ++c) {
    const bool seen = c < spec.n_seen;
    ds.class_seen.push_back(seen);
    ds.class_names.push_back((seen ? "seen_" : "unseen_") + std::to_string(c));
  }

  const std::size_t per_class = spec.examples_per_class;
  // At least one training row per seen class.
  const auto n_test_seen = std::min(
      per_class - 1, static_cast<std::size_t>(
                         std::llround(spec.test_seen_fraction * static_cast<double>(per_class))));
  ds.features = Matrix(n_classes * per_class, D);
  std::size_t row = 0;
  for (std::size_t c = 0; c < n_classes; ++c) {
    const auto mean = out.class_feature_means.row(c);
    for (std::size_t e = 0; e < per_class; ++e, ++row) {
      auto dst = ds.features.row(row);
      for (std::size_t k = 0; k < D; ++k) dst[k] = mean[k] + spec.feature_noise * normal(rng);
      ds.labels.push_back(static_cast<int>(c));
      if (!ds.class_seen[c]) {
        ds.split.push_back(Split::kTestUnseen);
      } else {
        ds.split.push_back(e + n_test_seen >= per_class ? Split::kTestSeen : Split::kTrainSeen);
      }
    }
  }
  ds.validate();
  return out;
}

}  // namespace zsl
