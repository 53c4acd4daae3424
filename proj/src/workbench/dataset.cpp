#include "zsl/dataset.hpp"

#include <cmath>
#include <system_error>

#include "zsl/core/binary_io.hpp"
#include "zsl/error.hpp"
#include "zsl/text_io.hpp"

namespace zsl {

namespace fs = std::filesystem;

namespace {

constexpr std::string_view kFeatureMagic = "ZSLFEAT1";

std::string read_required(const fs::path& path) {
  if (!fs::exists(path)) throw DataError("missing dataset file " + path.string());
  return read_file_bytes(path);
}

}  // namespace

std::string_view to_string(Split s) {
  switch (s) {
    case Split::kTrainSeen: return "train_seen";
    case Split::kTestSeen: return "test_seen";
    case Split::kTestUnseen: return "test_unseen";
  }
  return "unknown";
}

Split parse_split(std::string_view tag) {
  tag = trim(tag);
  if (tag == "train_seen") return Split::kTrainSeen;
  if (tag == "test_seen") return Split::kTestSeen;
  if (tag == "test_unseen") return Split::kTestUnseen;
  throw DataError("unknown split tag '" + std::string(tag) + "'");
}

std::vector<int> ZslDataset::seen_classes() const {
  std::vector<int> out;
  for (std::size_t c = 0; c < class_seen.size(); ++c) {
    if (class_seen[c]) out.push_back(static_cast<int>(c));
  }
  return out;
}

std::vector<int> ZslDataset::unseen_classes() const {
  std::vector<int> out;
  for (std::size_t c = 0; c < class_seen.size(); ++c) {
    if (!class_seen[c]) out.push_back(static_cast<int>(c));
  }
  return out;
}

std::vector<std::size_t> ZslDataset::rows_with(Split s) const {
  std::vector<std::size_t> out;
  for (std::size_t i = 0; i < split.size(); ++i) {
    if (split[i] == s) out.push_back(i);
  }
  return out;
}

void ZslDataset::validate() const {
  const std::size_t n = features.rows();
  const std::size_t c = class_seen.size();
  if (labels.size() != n) {
    throw DataError("labels count " + std::to_string(labels.size()) + " != feature rows " +
                    std::to_string(n));
  }
  if (split.size() != n) {
    throw DataError("split count " + std::to_string(split.size()) + " != feature rows " +
                    std::to_string(n));
  }
  if (class_names.size() != c) throw DataError("class names count != class count");
  if (attributes.rows() != c) {
    throw DataError("attribute matrix has " + std::to_string(attributes.rows()) +
                    " rows but there are " + std::to_string(c) + " classes");
  }
  if (!features.all_finite()) throw DataError("features contain non-finite values");
  if (!attributes.all_finite()) throw DataError("attributes contain non-finite values");
  for (std::size_t i = 0; i < n; ++i) {
    const int y = labels[i];
    if (y < 0 || static_cast<std::size_t>(y) >= c) {
      throw DataError("row " + std::to_string(i) + ": label " + std::to_string(y) +
                      " is not a known class");
    }
    const bool seen = class_seen[static_cast<std::size_t>(y)];
    const bool wants_seen = split[i] != Split::kTestUnseen;
    if (seen != wants_seen) {
      throw DataError("row " + std::to_string(i) + ": " + std::string(to_string(split[i])) +
                      " row has " + (seen ? "seen" : "unseen") + " label " + std::to_string(y));
    }
  }
}

Matrix read_binary_matrix(const fs::path& path) {
  const std::string raw = read_file_bytes(path);
  BinaryReader in(raw);
  if (in.bytes(kFeatureMagic.size()) != kFeatureMagic) {
    throw FormatError(path.string() + ": bad magic");
  }
  const std::uint64_t rows = in.u64();
  const std::uint64_t cols = in.u64();
  if (cols != 0 && rows > in.remaining() / 8 / cols) {
    throw FormatError(path.string() + ": truncated payload");
  }
  std::vector<double> data(rows * cols);
  for (auto& v : data) v = in.f64();
  if (!in.at_end()) throw FormatError(path.string() + ": trailing bytes");
  return Matrix(rows, cols, std::move(data));
}

void write_binary_matrix(const Matrix& m, const fs::path& path) {
  BinaryWriter out;
  out.bytes(kFeatureMagic);
  out.u64(m.rows());
  out.u64(m.cols());
  for (double v : m.values()) out.f64(v);
  write_file_atomic(path, out.buffer());
}

ZslDataset load_dataset(const fs::path& dir) {
  ZslDataset ds;

  // classes.csv: "id,name,seen|unseen", ids dense and in order.
  const std::string classes_text = read_required(dir / "classes.csv");
  const auto class_lines = text_lines(classes_text);
  for (std::size_t i = 0; i < class_lines.size(); ++i) {
    const auto f = split_fields(class_lines[i]);
    if (f.size() != 3) throw DataError("classes.csv line " + std::to_string(i) + ": expected 3 fields");
    long long id = 0;
    try {
      id = parse_int(f[0]);
    } catch (const FormatError& e) {
      throw DataError("classes.csv line " + std::to_string(i) + ": " + e.what());
    }
    if (id != static_cast<long long>(i)) {
      throw DataError("classes.csv line " + std::to_string(i) + ": id " + std::to_string(id) +
                      " breaks dense 0..C-1 ordering");
    }
    if (f[2] != "seen" && f[2] != "unseen") {
      throw DataError("classes.csv line " + std::to_string(i) + ": tag must be seen|unseen");
    }
    ds.class_names.emplace_back(f[1]);
    ds.class_seen.push_back(f[2] == "seen");
  }

  ds.attributes = matrix_from_csv(read_required(dir / "attributes.csv"), "attributes.csv");

  const bool has_csv = fs::exists(dir / "features.csv");
  const bool has_bin = fs::exists(dir / "features.bin");
  if (has_csv && has_bin) throw DataError("both features.csv and features.bin present");
  if (has_bin) {
    ds.features = read_binary_matrix(dir / "features.bin");
  } else {
    ds.features = matrix_from_csv(read_required(dir / "features.csv"), "features.csv");
  }

  const std::string labels_text = read_required(dir / "labels.csv");
  const auto label_lines = text_lines(labels_text);
  ds.labels.reserve(label_lines.size());
  for (std::size_t i = 0; i < label_lines.size(); ++i) {
    try {
      ds.labels.push_back(static_cast<int>(parse_int(label_lines[i])));
    } catch (const FormatError& e) {
      throw DataError("labels.csv row " + std::to_string(i) + ": " + e.what());
    }
  }

  const std::string split_text = read_required(dir / "split.csv");
  for (auto line : text_lines(split_text)) ds.split.push_back(parse_split(line));

  ds.validate();
  return ds;
}

void save_dataset(const ZslDataset& ds, const fs::path& dir, bool binary_features) {
  ds.validate();
  fs::create_directories(dir);

  std::string classes;
  for (std::size_t c = 0; c < ds.num_classes(); ++c) {
    classes += std::to_string(c) + "," + ds.class_names[c] + "," +
               (ds.class_seen[c] ? "seen" : "unseen") + "\n";
  }
  write_file_atomic(dir / "classes.csv", classes);
  write_file_atomic(dir / "attributes.csv", matrix_to_csv(ds.attributes));

  if (binary_features) {
    write_binary_matrix(ds.features, dir / "features.bin");
    std::error_code ec;
    fs::remove(dir / "features.csv", ec);
  } else {
    write_file_atomic(dir / "features.csv", matrix_to_csv(ds.features));
    std::error_code ec;
    fs::remove(dir / "features.bin", ec);
  }

  std::string labels;
  for (int y : ds.labels) labels += std::to_string(y) + "\n";
  write_file_atomic(dir / "labels.csv", labels);

  std::string split;
  for (Split s : ds.split) split += std::string(to_string(s)) + "\n";
  write_file_atomic(dir / "split.csv", split);
}

Matrix average_class_attributes(const Matrix& per_image_attributes, std::span<const int> labels,
                                std::size_t num_classes) {
  if (labels.size() != per_image_attributes.rows()) {
    throw ShapeError("average_class_attributes: labels count != attribute rows");
  }
  Matrix sums(num_classes, per_image_attributes.cols());
  std::vector<std::size_t> counts(num_classes, 0);
  for (std::size_t i = 0; i < labels.size(); ++i) {
    if (labels[i] < 0 || static_cast<std::size_t>(labels[i]) >= num_classes) {
      throw DataError("average_class_attributes: row " + std::to_string(i) + " label " +
                      std::to_string(labels[i]) + " out of range");
    }
    const auto c = static_cast<std::size_t>(labels[i]);
    ++counts[c];
    auto dst = sums.row(c);
    auto src = per_image_attributes.row(i);
    for (std::size_t k = 0; k < dst.size(); ++k) dst[k] += src[k];
  }
  for (std::size_t c = 0; c < num_classes; ++c) {
    if (counts[c] == 0) {
      throw DataError("average_class_attributes: class " + std::to_string(c) + " has no images");
    }
    for (double& v : sums.row(c)) v /= static_cast<double>(counts[c]);
  }
  return sums;
}

}  // namespace zsl
