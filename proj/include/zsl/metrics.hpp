#pragma once

#include <cstddef>
#include <map>
#include <span>

namespace zsl {

struct PerClassAccuracy {
  std::map<int, double> accuracy;      // fraction in [0,1] per class
  std::map<int, std::size_t> count;    // examples evaluated per class
  double mean = 0.0;                   // unweighted mean over classes
};

/// Average per-class top-1 accuracy over the classes present in `truths`.
/// Throws MetricError when truths is empty or lengths differ.
PerClassAccuracy per_class_top1(std::span<const int> predictions, std::span<const int> truths);

/// Same, but over an explicit class list; a listed class with no example in
/// `truths` is a MetricError.
PerClassAccuracy per_class_top1(std::span<const int> predictions, std::span<const int> truths,
                                std::span<const int> classes);

/// 2SU/(S+U), or 0 when S+U = 0. Scale-free: pass fractions or percents.
double harmonic_mean(double seen, double unseen);

}  // namespace zsl
