#pragma once

#include <cstdint>

#include "zsl/config.hpp"
#include "zsl/dataset.hpp"

namespace zsl {

/// Recipe for a desk-scale zero-shot benchmark whose attributes genuinely
/// predict features: class c has attribute a_c uniform on the unit sphere in
/// R^L and feature mean W·a_c for one random map W shared by all classes.
struct SyntheticSpec {
  std::size_t n_seen = 15;
  std::size_t n_unseen = 5;
  std::size_t feature_dim = 64;
  std::size_t attribute_dim = 16;
  std::size_t examples_per_class = 50;
  double attribute_noise = 0.0;  // isotropic noise on the published attribute rows
  double feature_noise = 0.1;    // isotropic noise around each class feature mean
  double test_seen_fraction = 0.2;
  std::uint64_t seed = 7;

  void validate() const;
  /// Reads the synth.* keys.
  void read(const KeyValueConfig& kv);
};

struct SyntheticDataset {
  ZslDataset dataset;
  /// Noise-free feature mean W·a_c for every class (C x D).
  Matrix class_feature_means;
};

/// Classes 0..n_seen−1 are seen, the rest unseen. Per seen class the last
/// round(test_seen_fraction · examples) rows are test_seen, the others
/// train_seen; every unseen row is test_unseen.
SyntheticDataset make_synthetic(const SyntheticSpec& spec);

}  // namespace zsl
