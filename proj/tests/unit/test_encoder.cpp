#include "doctest.h"

#include <cmath>

#include "checks.hpp"
#include "oracles.hpp"
#include "zsl/encoder.hpp"
#include "zsl/error.hpp"

using namespace zsl;
using zsl::testing::random_matrix;

namespace {

EncoderConfig small_config(std::size_t in, std::size_t hidden, std::size_t k, double rate = 0.0) {
  EncoderConfig c;
  c.input_dim = in;
  c.hidden_dim = hidden;
  c.latent_dim = k;
  c.dropout_rate = rate;
  return c;
}

double sum_outputs(const std::vector<DiagGaussian>& out) {
  double s = 0.0;
  for (const auto& g : out) {
    for (double v : g.mean) s += v;
    for (double v : g.log_var) s += v;
  }
  return s;
}

void zero_biases(Encoder& e) {
  for (double& b : e.hidden().bias()) b = 0.0;
  for (double& b : e.head_mean().bias()) b = 0.0;
  for (double& b : e.head_logvar().bias()) b = 0.0;
}

}  // namespace

TEST_CASE("config validation") {
  CHECK_THROWS_AS(small_config(0, 4, 2).validate(), ConfigError);
  CHECK_THROWS_AS(small_config(3, 4, 2, 1.0).validate(), ConfigError);
  CHECK_NOTHROW(small_config(3, 4, 2, 0.5).validate());
}

TEST_CASE("inference is deterministic and pure") {
  Rng init(1);
  Encoder enc(small_config(6, 5, 3, 0.5), init);
  enc.set_mode(Mode::kInference);
  Rng rng(2);
  const Matrix x = random_matrix(4, 6, rng);
  const auto a = enc.infer(x);
  const auto b = enc.infer(x);
  CHECK(a == b);
  CHECK(enc.encode(x, rng) == a);
  CHECK(enc.encode(x, rng) == a);
}

TEST_CASE("infer equals encode in inference mode even while training") {
  Rng init(3);
  Encoder enc(small_config(6, 5, 3, 0.5), init);
  Rng rng(4);
  const Matrix x = random_matrix(4, 6, rng);
  enc.encode(x, rng);  // moves running stats away from their initial values
  const auto via_infer = enc.infer(x);
  enc.set_mode(Mode::kInference);
  CHECK(enc.encode(x, rng) == via_infer);
}

TEST_CASE("zero input with zero biases maps to zero means") {
  Rng init(5);
  EncoderConfig c = small_config(4, 6, 3);
  c.use_batchnorm = false;
  Encoder enc(c, init);
  zero_biases(enc);
  Rng rng(6);
  for (const auto& g : enc.encode(Matrix(3, 4), rng)) {
    for (double m : g.mean) CHECK(m == 0.0);
    for (double v : g.log_var) CHECK(v == 0.0);
  }
}

TEST_CASE("log variance is clamped and its gradient stops outside the interval") {
  Rng init(7);
  EncoderConfig c = small_config(2, 3, 2);
  c.use_batchnorm = false;
  Encoder enc(c, init);
  enc.head_logvar().bias() = {50.0, -50.0};
  Rng rng(8);
  const Matrix x = random_matrix(3, 2, rng, 0.1);
  const auto out = enc.encode(x, rng);
  for (const auto& g : out) {
    CHECK(g.log_var[0] == kLogVarMax);
    CHECK(g.log_var[1] == kLogVarMin);
  }
  enc.zero_grad();
  enc.encode_backward(Matrix(3, 2), Matrix(3, 2, 1.0));
  for (double v : enc.head_logvar().grad_bias()) CHECK(v == 0.0);
}

TEST_CASE("single-row training batch with batch-norm is degenerate") {
  Rng init(9);
  Encoder enc(small_config(3, 4, 2), init);
  Rng rng(10);
  CHECK_THROWS_AS(enc.encode(Matrix(1, 3), rng), DegenerateBatchError);
  EncoderConfig c = small_config(3, 4, 2);
  c.batchnorm_small_batch_fallback = true;
  Encoder tolerant(c, init);
  CHECK_NOTHROW(tolerant.encode(Matrix(1, 3), rng));
}

TEST_CASE("width mismatch and stale caches") {
  Rng init(11);
  Encoder enc(small_config(3, 4, 2), init);
  Rng rng(12);
  CHECK_THROWS_AS(enc.encode(Matrix(2, 4), rng), ShapeError);
  CHECK_THROWS_AS(enc.encode_backward(Matrix(2, 2), Matrix(2, 2)), StateError);
  enc.encode(Matrix(2, 3), rng);
  enc.encode_backward(Matrix(2, 2), Matrix(2, 2));
  CHECK_THROWS_AS(enc.encode_backward(Matrix(2, 2), Matrix(2, 2)), StateError);
}

TEST_CASE("zero cotangents give zero parameter gradients") {
  Rng init(13);
  Encoder enc(small_config(4, 5, 3, 0.5), init);
  Rng rng(14);
  enc.zero_grad();
  enc.encode(random_matrix(4, 4, rng), rng);
  enc.encode_backward(Matrix(4, 3), Matrix(4, 3));
  for (auto& p : enc.parameters("e")) {
    for (double g : p.grad) CHECK(g == 0.0);
  }
}

TEST_CASE("mean head alone still drives the trunk") {
  Rng init(15);
  Encoder enc(small_config(4, 5, 3), init);
  Rng rng(16);
  enc.zero_grad();
  enc.encode(random_matrix(4, 4, rng), rng);
  enc.encode_backward(Matrix(4, 3, 1.0), Matrix(4, 3));
  double norm = 0.0;
  for (double g : enc.hidden().grad_weight().values()) norm += g * g;
  CHECK(norm > 0.0);
  for (double g : enc.head_logvar().grad_weight().values()) CHECK(g == 0.0);
}

TEST_CASE("4x6 -> 5 -> 3 encoder gradient matches finite differences") {
  for (bool bn : {true, false}) {
    Rng init(17);
    EncoderConfig c = small_config(6, 5, 3, 0.3);
    c.use_batchnorm = bn;
    Encoder enc(c, init);
    Rng data(18);
    Matrix x = random_matrix(4, 6, data);
    const std::uint64_t mask_seed = 99;
    auto loss = [&] {
      Rng r(mask_seed);
      return sum_outputs(enc.encode(x, r));
    };
    enc.zero_grad();
    Rng r(mask_seed);
    enc.encode(x, r);
    const Matrix gx = enc.encode_backward(Matrix(4, 3, 1.0), Matrix(4, 3, 1.0));
    double worst = zsl::testing::max_gradient_error(x.values(), gx.values(), loss);
    for (auto& p : enc.parameters("e")) {
      const std::vector<double> analytic(p.grad.begin(), p.grad.end());
      worst = std::max(worst, zsl::testing::max_gradient_error(p.value, analytic, loss));
    }
    CHECK(worst < 1e-4);
  }
}

TEST_CASE("identical seeds and configs give identical parameters") {
  Rng a(20), b(20);
  Encoder e1(small_config(7, 9, 4, 0.5), a);
  Encoder e2(small_config(7, 9, 4, 0.5), b);
  CHECK(e1.hidden().weight() == e2.hidden().weight());
  CHECK(e1.head_mean().weight() == e2.head_mean().weight());
  CHECK(e1.head_logvar().weight() == e2.head_logvar().weight());
}

TEST_CASE("mode switches reach every sublayer") {
  Rng init(21);
  Encoder enc(small_config(3, 4, 2, 0.5), init);
  enc.set_mode(Mode::kInference);
  CHECK(enc.batchnorm().mode() == Mode::kInference);
  enc.set_mode(Mode::kTraining);
  CHECK(enc.batchnorm().mode() == Mode::kTraining);
}

TEST_CASE("outputs stay finite and clamped on large random inputs") {
  Rng init(22);
  Encoder enc(small_config(8, 16, 4, 0.5), init);
  Rng rng(23);
  for (int trial = 0; trial < 20; ++trial) {
    for (const auto& g : enc.encode(random_matrix(6, 8, rng, 100.0), rng)) {
      for (double m : g.mean) CHECK(std::isfinite(m));
      for (double v : g.log_var) {
        CHECK(v >= kLogVarMin);
        CHECK(v <= kLogVarMax);
      }
    }
  }
}

TEST_CASE("full objective gradients through both encoders") {
  const auto res = zsl::testing::check_objective_gradients(30, 24);
  INFO(res.worst_where);
  CHECK(res.worst < 1e-4);
}
