#include <cmath>

#include "zsl/core/binary_io.hpp"
#include "zsl/error.hpp"
#include "zsl/trainer.hpp"

namespace zsl {

namespace {

constexpr std::string_view kMagic{"ZSLCKPT\0", 8};

struct Tensor {
  std::string name;
  std::size_t rows = 0;
  std::size_t cols = 0;
  std::span<const double> data;
};

std::vector<Tensor> tensors_of(const Encoder& enc) {
  auto vec = [](const std::vector<double>& v) { return std::span<const double>(v); };
  std::vector<Tensor> out;
  auto linear = [&](const std::string& name, const LinearLayer& l) {
    out.push_back({name + ".weight", l.weight().rows(), l.weight().cols(), l.weight().values()});
    out.push_back({name + ".bias", l.bias().size(), 1, vec(l.bias())});
  };
  linear("hidden", enc.hidden());
  if (enc.config().use_batchnorm) {
    const BatchNormLayer& bn = enc.batchnorm();
    out.push_back({"batchnorm.gamma", bn.width(), 1, vec(bn.gamma())});
    out.push_back({"batchnorm.beta", bn.width(), 1, vec(bn.beta())});
    out.push_back({"batchnorm.running_mean", bn.width(), 1, vec(bn.running_mean())});
    out.push_back({"batchnorm.running_var", bn.width(), 1, vec(bn.running_var())});
  }
  linear("head_mean", enc.head_mean());
  linear("head_logvar", enc.head_logvar());
  return out;
}

void write_encoder(BinaryWriter& w, const std::string& role, const Encoder& enc) {
  const EncoderConfig& c = enc.config();
  w.str(role);
  w.u64(c.input_dim);
  w.u64(c.hidden_dim);
  w.u64(c.latent_dim);
  w.f64(c.dropout_rate);
  w.u8(c.use_batchnorm ? 1 : 0);
  w.u8(c.batchnorm_small_batch_fallback ? 1 : 0);
  w.f64(enc.batchnorm().momentum());
  w.f64(enc.batchnorm().eps());
  const auto tensors = tensors_of(enc);
  w.u32(static_cast<std::uint32_t>(tensors.size()));
  for (const Tensor& t : tensors) {
    w.str(t.name);
    w.u64(t.rows);
    w.u64(t.cols);
    w.f64_array(t.data);
  }
}

void copy_into(std::span<double> dst, const std::vector<double>& src, const std::string& name) {
  if (dst.size() != src.size()) throw FormatError("tensor '" + name + "' has the wrong length");
  std::copy(src.begin(), src.end(), dst.begin());
}

Encoder read_encoder(BinaryReader& r, const std::string& expected_role) {
  const std::string role = r.str();
  if (role != expected_role) {
    throw FormatError("expected encoder '" + expected_role + "', found '" + role + "'");
  }
  EncoderConfig cfg;
  cfg.input_dim = r.u64();
  cfg.hidden_dim = r.u64();
  cfg.latent_dim = r.u64();
  cfg.dropout_rate = r.f64();
  cfg.use_batchnorm = r.u8() != 0;
  cfg.batchnorm_small_batch_fallback = r.u8() != 0;
  const double momentum = r.f64();
  const double eps = r.f64();
  try {
    cfg.validate();
  } catch (const ConfigError& e) {
    throw FormatError(role + " encoder manifest invalid: " + e.what());
  }
  // Cap widths so a corrupt manifest cannot request absurd allocations.
  const std::size_t budget = r.remaining() / 8 + 1;
  if (cfg.hidden_dim > budget || cfg.latent_dim > budget || cfg.input_dim > budget ||
      cfg.hidden_dim * (cfg.input_dim + 2 * cfg.latent_dim) > budget) {
    throw FormatError(role + " encoder manifest declares widths larger than the payload");
  }

  Rng dummy(0);
  Encoder enc(cfg, dummy);
  try {
    enc.batchnorm() = BatchNormLayer(cfg.hidden_dim, momentum, eps);
  } catch (const ConfigError& e) {
    throw FormatError(role + " batch-norm settings invalid: " + e.what());
  }

  // The expected layout is derived from the manifest; every stored tensor
  // must match it by name and shape.
  const auto expected = tensors_of(enc);
  const std::uint32_t count = r.u32();
  if (count != expected.size()) {
    throw FormatError(role + " encoder: expected " + std::to_string(expected.size()) +
                      " tensors, found " + std::to_string(count));
  }
  std::vector<std::vector<double>> payload;
  for (const Tensor& want : expected) {
    const std::string name = r.str();
    const std::uint64_t rows = r.u64();
    const std::uint64_t cols = r.u64();
    if (name != want.name || rows != want.rows || cols != want.cols) {
      throw FormatError(role + " encoder: tensor '" + name + "' " + std::to_string(rows) + "x" +
                        std::to_string(cols) + " does not match manifest ('" + want.name + "' " +
                        std::to_string(want.rows) + "x" + std::to_string(want.cols) + ")");
    }
    auto data = r.f64_array();
    if (data.size() != rows * cols) throw FormatError("tensor '" + name + "' length mismatch");
    for (double v : data) {
      if (!std::isfinite(v)) throw FormatError("tensor '" + name + "' holds non-finite values");
    }
    payload.push_back(std::move(data));
  }

  std::size_t i = 0;
  copy_into(enc.hidden().weight().values(), payload[i++], "hidden.weight");
  copy_into(enc.hidden().bias(), payload[i++], "hidden.bias");
  if (cfg.use_batchnorm) {
    copy_into(enc.batchnorm().gamma(), payload[i++], "batchnorm.gamma");
    copy_into(enc.batchnorm().beta(), payload[i++], "batchnorm.beta");
    copy_into(enc.batchnorm().running_mean(), payload[i++], "batchnorm.running_mean");
    copy_into(enc.batchnorm().running_var(), payload[i++], "batchnorm.running_var");
    for (double v : enc.batchnorm().running_var()) {
      if (v < 0.0) throw FormatError("negative batch-norm running variance");
    }
  }
  copy_into(enc.head_mean().weight().values(), payload[i++], "head_mean.weight");
  copy_into(enc.head_mean().bias(), payload[i++], "head_mean.bias");
  copy_into(enc.head_logvar().weight().values(), payload[i++], "head_logvar.weight");
  copy_into(enc.head_logvar().bias(), payload[i++], "head_logvar.bias");
  enc.set_mode(Mode::kInference);
  return enc;
}

}  // namespace

void Checkpoint::require_input_dims(std::size_t feature_dim, std::size_t attribute_dim) const {
  if (visual.config().input_dim != feature_dim) {
    throw FormatError("checkpoint visual encoder expects " +
                      std::to_string(visual.config().input_dim) + "-dim features, dataset has " +
                      std::to_string(feature_dim));
  }
  if (semantic.config().input_dim != attribute_dim) {
    throw FormatError("checkpoint semantic encoder expects " +
                      std::to_string(semantic.config().input_dim) +
                      "-dim attributes, dataset has " + std::to_string(attribute_dim));
  }
}

std::string serialize_checkpoint(const Encoder& visual, const Encoder& semantic,
                                 const TrainConfig& config) {
  if (visual.config().latent_dim != semantic.config().latent_dim) {
    throw ShapeError("encoders disagree on latent width");
  }
  BinaryWriter w;
  w.bytes(kMagic);
  w.u32(kCheckpointVersion);
  KeyValueConfig kv;
  config.write(kv);
  w.str(kv.to_text());
  write_encoder(w, "visual", visual);
  write_encoder(w, "semantic", semantic);
  return w.buffer();
}

Checkpoint deserialize_checkpoint(std::string_view bytes) {
  BinaryReader r(bytes);
  if (r.remaining() < kMagic.size() || r.bytes(kMagic.size()) != kMagic) {
    throw FormatError("not a checkpoint (bad magic)");
  }
  const std::uint32_t version = r.u32();
  if (version != kCheckpointVersion) {
    throw FormatError("unsupported checkpoint version " + std::to_string(version));
  }
  TrainConfig config;
  try {
    const KeyValueConfig kv = KeyValueConfig::parse(r.str(), "checkpoint config");
    config.read(kv);
    kv.require_all_used();
    config.validate();
  } catch (const ConfigError& e) {
    throw FormatError(std::string("checkpoint config invalid: ") + e.what());
  }
  Encoder visual = read_encoder(r, "visual");
  Encoder semantic = read_encoder(r, "semantic");
  if (!r.at_end()) throw FormatError("trailing bytes after checkpoint payload");
  if (visual.config().latent_dim != semantic.config().latent_dim) {
    throw FormatError("checkpoint encoders disagree on latent width");
  }
  return Checkpoint{std::move(visual), std::move(semantic), config};
}

void save_checkpoint(const Encoder& visual, const Encoder& semantic, const TrainConfig& config,
                     const std::filesystem::path& path) {
  write_file_atomic(path, serialize_checkpoint(visual, semantic, config));
}

Checkpoint load_checkpoint(const std::filesystem::path& path) {
  return deserialize_checkpoint(read_file_bytes(path));
}

}  // namespace zsl
