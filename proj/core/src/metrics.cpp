#include "lpgnet/metrics.hpp"

#include <cstdint>
#include <stdexcept>
#include <vector>

namespace lpgnet {

double micro_f1(std::span<const int> predictions, std::span<const int> truth, int num_classes) {
  if (predictions.size() != truth.size())
    throw std::invalid_argument("micro_f1: length mismatch");
  if (predictions.empty()) throw std::invalid_argument("micro_f1: empty input");

  int64_t tp = 0, fp = 0, fn = 0;
  for (size_t i = 0; i < truth.size(); ++i) {
    const int p = predictions[i], t = truth[i];
    if (p < 0 || p >= num_classes || t < 0 || t >= num_classes)
      throw std::invalid_argument("micro_f1: label out of range");
    if (p == t) {
      ++tp;
    } else {
      ++fp;  // counted for class p
      ++fn;  // counted for class t
    }
  }
  const double precision = static_cast<double>(tp) / static_cast<double>(tp + fp);
  const double recall = static_cast<double>(tp) / static_cast<double>(tp + fn);
  if (precision + recall == 0.0) return 0.0;
  return 2.0 * precision * recall / (precision + recall);
}

double rare_f1(std::span<const int> predictions, std::span<const int> truth) {
  if (predictions.size() != truth.size()) throw std::invalid_argument("rare_f1: length mismatch");
  if (predictions.empty()) throw std::invalid_argument("rare_f1: empty input");
  int64_t count1 = 0;
  for (size_t i = 0; i < truth.size(); ++i) {
    if ((truth[i] != 0 && truth[i] != 1) || (predictions[i] != 0 && predictions[i] != 1))
      throw std::invalid_argument("rare_f1: labels must be binary");
    count1 += truth[i];
  }
  const int64_t count0 = static_cast<int64_t>(truth.size()) - count1;
  const int positive = count1 <= count0 ? 1 : 0;  // tie -> class 1

  int64_t tp = 0, fp = 0, fn = 0;
  for (size_t i = 0; i < truth.size(); ++i) {
    const bool t = truth[i] == positive;
    const bool p = predictions[i] == positive;
    if (t && p) ++tp;
    else if (!t && p) ++fp;
    else if (t && !p) ++fn;
  }
  const int64_t denom = 2 * tp + fp + fn;
  if (denom == 0) return 0.0;
  return 2.0 * static_cast<double>(tp) / static_cast<double>(denom);
}

}  // namespace lpgnet
