#include "doctest.h"

#include <algorithm>
#include <numeric>

#include "checks.hpp"
#include "oracles.hpp"
#include "zsl/error.hpp"
#include "zsl/triplet.hpp"

using namespace zsl;
using zsl::testing::random_gaussian;

namespace {

DiagGaussian unit_at(double mu) { return DiagGaussian({mu}, {0.0}); }

}  // namespace

TEST_CASE("two classes force the other class") {
  Rng rng(1);
  ClassEmbeddings classes{{4, 9}, {random_gaussian(3, rng), random_gaussian(3, rng)}};
  std::vector<DiagGaussian> imgs;
  std::vector<int> labels;
  for (int i = 0; i < 10; ++i) {
    imgs.push_back(random_gaussian(3, rng));
    labels.push_back(i % 2 ? 4 : 9);
  }
  const auto res = mine_negatives(imgs, labels, classes, DistanceKind::kWasserstein2);
  for (std::size_t i = 0; i < imgs.size(); ++i) CHECK(res.negatives[i] == (labels[i] == 4 ? 9 : 4));
}

TEST_CASE("nearest wrong class wins") {
  ClassEmbeddings classes{{0, 1, 2}, {unit_at(0), unit_at(1), unit_at(5)}};
  const std::vector<DiagGaussian> imgs{unit_at(0)};
  const std::vector<int> labels{0};
  CHECK(mine_negatives(imgs, labels, classes, DistanceKind::kWasserstein2).negatives[0] == 1);
}

TEST_CASE("ties go to the lowest class id regardless of supply order") {
  ClassEmbeddings classes{{7, 3, 5}, {unit_at(1), unit_at(-1), unit_at(0)}};
  const std::vector<DiagGaussian> imgs{unit_at(0)};
  const std::vector<int> labels{5};
  CHECK(mine_negatives(imgs, labels, classes, DistanceKind::kWasserstein2).negatives[0] == 3);
}

TEST_CASE("one class is a mining error") {
  ClassEmbeddings classes{{0}, {unit_at(0)}};
  const std::vector<DiagGaussian> imgs{unit_at(0)};
  const std::vector<int> labels{0};
  CHECK_THROWS_AS(mine_negatives(imgs, labels, classes, DistanceKind::kWasserstein2), MiningError);
}

TEST_CASE("anchors of absent classes are skipped and counted") {
  ClassEmbeddings classes{{0, 1}, {unit_at(0), unit_at(1)}};
  const std::vector<DiagGaussian> imgs{unit_at(0), unit_at(1)};
  const std::vector<int> labels{0, 8};
  const auto mined = mine_negatives(imgs, labels, classes, DistanceKind::kWasserstein2);
  CHECK(mined.skipped_anchors == 1);
  CHECK(mined.negatives[1] == kNoClass);
  const auto res = triplet_loss(imgs, labels, classes, mined.negatives, 1.0, DistanceKind::kWasserstein2);
  CHECK(res.active_anchors == 1);
  CHECK(res.loss == doctest::Approx(0.0));  // d_pos 0, d_neg 1, margin 1
}

TEST_CASE("mining matches the exhaustive scan, ties included") {
  const auto res = zsl::testing::check_mining_oracle(100, 2);
  CHECK(res.mismatches == 0);
  CHECK(res.tie_instances > 10);
}

TEST_CASE("mining is invariant to the order of class embeddings") {
  Rng rng(3);
  for (int trial = 0; trial < 50; ++trial) {
    ClassEmbeddings classes;
    for (int c = 0; c < 12; ++c) {
      classes.ids.push_back(c * 3);
      // Half the time duplicate an earlier class to force ties.
      if (c > 0 && trial % 2 == 0 && c % 3 == 0) classes.embs.push_back(classes.embs[c - 1]);
      else classes.embs.push_back(random_gaussian(4, rng));
    }
    std::vector<DiagGaussian> imgs;
    std::vector<int> labels;
    for (int i = 0; i < 16; ++i) {
      imgs.push_back(random_gaussian(4, rng));
      labels.push_back(classes.ids[static_cast<std::size_t>(i) % 12]);
    }
    const auto base = mine_negatives(imgs, labels, classes, DistanceKind::kWasserstein2).negatives;
    std::vector<std::size_t> perm(12);
    std::iota(perm.begin(), perm.end(), 0);
    std::shuffle(perm.begin(), perm.end(), rng);
    ClassEmbeddings shuffled;
    for (std::size_t j : perm) {
      shuffled.ids.push_back(classes.ids[j]);
      shuffled.embs.push_back(classes.embs[j]);
    }
    CHECK(mine_negatives(imgs, labels, shuffled, DistanceKind::kWasserstein2).negatives == base);
  }
}

TEST_CASE("hinge arithmetic") {
  CHECK(hinge_term(0.5, 2.0, 1.0) == 0.0);
  CHECK(hinge_term(1.5, 1.0, 1.0) == doctest::Approx(1.5));
}

TEST_CASE("satisfied triplets produce zero loss and zero gradients") {
  ClassEmbeddings classes{{0, 1}, {unit_at(0), unit_at(3)}};
  const std::vector<DiagGaussian> imgs{unit_at(0.1), unit_at(2.9)};
  const std::vector<int> labels{0, 1};
  const std::vector<int> negs{1, 0};
  const auto res = triplet_loss(imgs, labels, classes, negs, 1.0, DistanceKind::kWasserstein2);
  CHECK(res.loss == 0.0);
  CHECK(res.violated == 0);
  for (const auto& g : res.image_grads) CHECK(g.is_zero());
  for (const auto& g : res.class_grads) CHECK(g.is_zero());
}

TEST_CASE("loss is the batch mean of hinge terms") {
  // d_pos = 1, d_neg = 0.25 for the first anchor; d_pos = 0, d_neg = 4 for the second.
  ClassEmbeddings classes{{0, 1}, {unit_at(0), unit_at(1.5)}};
  const std::vector<DiagGaussian> imgs{unit_at(1), unit_at(1.5)};
  const std::vector<int> labels{0, 1};
  const std::vector<int> negs{1, 0};
  const auto res = triplet_loss(imgs, labels, classes, negs, 1.0, DistanceKind::kWasserstein2);
  CHECK(res.loss == doctest::Approx((1.0 - 0.25 + 1.0 + 0.0) / 2.0));
  CHECK(res.violated == 1);
  CHECK(res.violated_fraction() == doctest::Approx(0.5));
}

TEST_CASE("nonpositive margin is a config error") {
  ClassEmbeddings classes{{0, 1}, {unit_at(0), unit_at(1)}};
  const std::vector<DiagGaussian> imgs{unit_at(0)};
  const std::vector<int> labels{0};
  const std::vector<int> negs{1};
  CHECK_THROWS_AS(triplet_loss(imgs, labels, classes, negs, 0.0, DistanceKind::kWasserstein2), ConfigError);
}

TEST_CASE("loss is nonnegative and invariant under relabeling class ids") {
  Rng rng(4);
  for (int trial = 0; trial < 50; ++trial) {
    const int n_classes = 6;
    ClassEmbeddings classes;
    for (int c = 0; c < n_classes; ++c) {
      classes.ids.push_back(c);
      classes.embs.push_back(random_gaussian(5, rng));
    }
    std::vector<DiagGaussian> imgs;
    std::vector<int> labels;
    for (int i = 0; i < 10; ++i) {
      imgs.push_back(random_gaussian(5, rng));
      labels.push_back(static_cast<int>(rng() % n_classes));
    }
    const auto negs = mine_negatives(imgs, labels, classes, DistanceKind::kWasserstein2).negatives;
    const double loss = triplet_loss(imgs, labels, classes, negs, 1.0, DistanceKind::kWasserstein2).loss;
    CHECK(loss >= 0.0);

    // Relabel with distinct random ids; mining and loss must follow.
    std::vector<int> fresh(100);
    std::iota(fresh.begin(), fresh.end(), 0);
    std::shuffle(fresh.begin(), fresh.end(), rng);
    auto relabel = [&](int id) { return fresh[static_cast<std::size_t>(id)]; };
    ClassEmbeddings renamed = classes;
    for (int& id : renamed.ids) id = relabel(id);
    std::vector<int> new_labels;
    for (int l : labels) new_labels.push_back(relabel(l));
    // Distances are continuous, so exact ties are impossible here and the
    // mined classes correspond one to one.
    const auto new_negs = mine_negatives(imgs, new_labels, renamed, DistanceKind::kWasserstein2).negatives;
    for (std::size_t i = 0; i < negs.size(); ++i) CHECK(new_negs[i] == relabel(negs[i]));
    CHECK(triplet_loss(imgs, new_labels, renamed, new_negs, 1.0, DistanceKind::kWasserstein2).loss == loss);
  }
}

TEST_CASE("triplet gradients match finite differences with mining frozen") {
  const auto res = zsl::testing::check_triplet_gradients(40, 5);
  INFO(res.worst_where);
  CHECK(res.worst < 1e-4);
}
