#pragma once

#include <span>

namespace lpgnet {

/// Micro-averaged F1: harmonic mean of micro precision and micro recall.
/// For single-label prediction this equals plain accuracy.
double micro_f1(std::span<const int> predictions, std::span<const int> truth, int num_classes);

/// Binary F1 with the minority class of `truth` as the positive class
/// (ties in class frequency make class 1 positive). Degenerate cases with
/// no true or predicted positives score 0.
double rare_f1(std::span<const int> predictions, std::span<const int> truth);

}  // namespace lpgnet
