#pragma once

#include <cstdint>
#include <span>
#include <vector>

namespace lpgnet {

/// Row-major dense real matrix. The only tensor type in the toolkit; all
/// shapes here are desk-scale, so clarity and bitwise reproducibility win
/// over vectorization tricks.
class DenseMatrix {
 public:
  DenseMatrix() = default;
  DenseMatrix(int rows, int cols) : rows_(rows), cols_(cols), values_(size(), 0.0) {}
  DenseMatrix(int rows, int cols, std::vector<double> values);

  int rows() const { return rows_; }
  int cols() const { return cols_; }
  size_t size() const { return static_cast<size_t>(rows_) * static_cast<size_t>(cols_); }

  double& at(int r, int c) { return values_[static_cast<size_t>(r) * cols_ + c]; }
  double at(int r, int c) const { return values_[static_cast<size_t>(r) * cols_ + c]; }

  std::span<double> row(int r) { return {values_.data() + static_cast<size_t>(r) * cols_, static_cast<size_t>(cols_)}; }
  std::span<const double> row(int r) const {
    return {values_.data() + static_cast<size_t>(r) * cols_, static_cast<size_t>(cols_)};
  }

  std::vector<double>& values() { return values_; }
  const std::vector<double>& values() const { return values_; }

  bool all_finite() const;

  bool operator==(const DenseMatrix&) const = default;

 private:
  int rows_ = 0;
  int cols_ = 0;
  std::vector<double> values_;
};

/// C = A * B.
DenseMatrix matmul(const DenseMatrix& a, const DenseMatrix& b);
/// C = A^T * B.
DenseMatrix matmul_at_b(const DenseMatrix& a, const DenseMatrix& b);
/// C = A * B^T.
DenseMatrix matmul_a_bt(const DenseMatrix& a, const DenseMatrix& b);

/// Horizontal concatenation [A | B] (equal row counts).
DenseMatrix concat_cols(const DenseMatrix& a, const DenseMatrix& b);

/// New matrix holding the given rows of `a`, in order.
DenseMatrix take_rows(const DenseMatrix& a, std::span<const int> rows);

/// In-place row-wise softmax.
void softmax_rows(DenseMatrix& m);

/// Index of the row maximum per row; ties break to the lowest index.
std::vector<int> argmax_rows(const DenseMatrix& m);

}  // namespace lpgnet
