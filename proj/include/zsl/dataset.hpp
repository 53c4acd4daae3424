#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <string_view>
#include <vector>

#include "zsl/core/matrix.hpp"

namespace zsl {

enum class Split : std::uint8_t { kTrainSeen, kTestSeen, kTestUnseen };

std::string_view to_string(Split s);
Split parse_split(std::string_view tag);

/// Features, labels and splits for one zero-shot problem. Class ids are dense
/// 0..C−1; every class is either seen or unseen.
struct ZslDataset {
  Matrix features;                  // N x D
  std::vector<int> labels;          // N
  std::vector<Split> split;         // N
  Matrix attributes;                // C x L, row c describes class c
  std::vector<std::string> class_names;
  std::vector<bool> class_seen;     // C

  std::size_t num_classes() const noexcept { return class_seen.size(); }
  std::size_t feature_dim() const noexcept { return features.cols(); }
  std::size_t attribute_dim() const noexcept { return attributes.cols(); }

  std::vector<int> seen_classes() const;
  std::vector<int> unseen_classes() const;
  /// Row indices carrying the given split tag, ascending.
  std::vector<std::size_t> rows_with(Split s) const;

  /// Throws DataError naming the first violated invariant (and row, if any).
  void validate() const;
};

/// Reads a dataset directory: classes.csv, attributes.csv, labels.csv,
/// split.csv and features.csv (or features.bin). The result is validated.
ZslDataset load_dataset(const std::filesystem::path& dir);

/// Writes the five files (features as CSV unless binary_features is set).
/// Doubles are written in shortest round-trip form, so load(save(d)) == d.
void save_dataset(const ZslDataset& ds, const std::filesystem::path& dir,
                  bool binary_features = false);

/// Row c = mean of per-image attribute rows labeled c. Throws DataError when a
/// class in [0, num_classes) has no image.
Matrix average_class_attributes(const Matrix& per_image_attributes, std::span<const int> labels,
                                std::size_t num_classes);

// Binary feature file: magic "ZSLFEAT1", u64 rows, u64 cols, rows*cols f64,
// all little-endian.
Matrix read_binary_matrix(const std::filesystem::path& path);
void write_binary_matrix(const Matrix& m, const std::filesystem::path& path);

}  // namespace zsl
