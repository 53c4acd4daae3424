#include "zsl/metrics.hpp"

#include <string>

#include "zsl/error.hpp"

namespace zsl {

namespace {

PerClassAccuracy finish(const std::map<int, std::size_t>& correct,
                        const std::map<int, std::size_t>& count) {
  PerClassAccuracy out;
  out.count = count;
  double sum = 0.0;
  for (const auto& [c, n] : count) {
    const auto it = correct.find(c);
    const double acc =
        static_cast<double>(it == correct.end() ? 0 : it->second) / static_cast<double>(n);
    out.accuracy[c] = acc;
    sum += acc;
  }
  out.mean = sum / static_cast<double>(count.size());
  return out;
}

}  // namespace

PerClassAccuracy per_class_top1(std::span<const int> predictions, std::span<const int> truths) {
  if (predictions.size() != truths.size()) {
    throw MetricError("per_class_top1: predictions and truths differ in length");
  }
  if (truths.empty()) throw MetricError("per_class_top1: no examples to evaluate");
  std::map<int, std::size_t> correct, count;
  for (std::size_t i = 0; i < truths.size(); ++i) {
    ++count[truths[i]];
    if (predictions[i] == truths[i]) ++correct[truths[i]];
  }
  return finish(correct, count);
}

PerClassAccuracy per_class_top1(std::span<const int> predictions, std::span<const int> truths,
                                std::span<const int> classes) {
  if (classes.empty()) throw MetricError("per_class_top1: empty class list");
  PerClassAccuracy all = per_class_top1(predictions, truths);
  std::map<int, std::size_t> correct, count;
  for (int c : classes) {
    auto it = all.count.find(c);
    if (it == all.count.end()) {
      throw MetricError("per_class_top1: class " + std::to_string(c) + " has no evaluated example");
    }
    count[c] = it->second;
  }
  for (std::size_t i = 0; i < truths.size(); ++i) {
    if (count.contains(truths[i]) && predictions[i] == truths[i]) ++correct[truths[i]];
  }
  return finish(correct, count);
}

double harmonic_mean(double seen, double unseen) {
  const double denom = seen + unseen;
  if (denom == 0.0) return 0.0;
  return 2.0 * seen * unseen / denom;
}

}  // namespace zsl
