#include "lpgnet/matrix.hpp"

#include <cmath>
#include <stdexcept>

namespace lpgnet {

DenseMatrix::DenseMatrix(int rows, int cols, std::vector<double> values)
    : rows_(rows), cols_(cols), values_(std::move(values)) {
  if (values_.size() != size()) throw std::invalid_argument("DenseMatrix: values length != rows*cols");
}

bool DenseMatrix::all_finite() const {
  for (double v : values_)
    if (!std::isfinite(v)) return false;
  return true;
}

DenseMatrix matmul(const DenseMatrix& a, const DenseMatrix& b) {
  if (a.cols() != b.rows()) throw std::invalid_argument("matmul: inner dimensions differ");
  DenseMatrix c(a.rows(), b.cols());
  for (int i = 0; i < a.rows(); ++i) {
    const auto ai = a.row(i);
    auto ci = c.row(i);
    for (int k = 0; k < a.cols(); ++k) {
      const double aik = ai[static_cast<size_t>(k)];
      if (aik == 0.0) continue;
      const auto bk = b.row(k);
      for (int j = 0; j < b.cols(); ++j) ci[static_cast<size_t>(j)] += aik * bk[static_cast<size_t>(j)];
    }
  }
  return c;
}

DenseMatrix matmul_at_b(const DenseMatrix& a, const DenseMatrix& b) {
  if (a.rows() != b.rows()) throw std::invalid_argument("matmul_at_b: row counts differ");
  DenseMatrix c(a.cols(), b.cols());
  for (int k = 0; k < a.rows(); ++k) {
    const auto ak = a.row(k);
    const auto bk = b.row(k);
    for (int i = 0; i < a.cols(); ++i) {
      const double aki = ak[static_cast<size_t>(i)];
      if (aki == 0.0) continue;
      auto ci = c.row(i);
      for (int j = 0; j < b.cols(); ++j) ci[static_cast<size_t>(j)] += aki * bk[static_cast<size_t>(j)];
    }
  }
  return c;
}

DenseMatrix matmul_a_bt(const DenseMatrix& a, const DenseMatrix& b) {
  if (a.cols() != b.cols()) throw std::invalid_argument("matmul_a_bt: col counts differ");
  DenseMatrix c(a.rows(), b.rows());
  for (int i = 0; i < a.rows(); ++i) {
    const auto ai = a.row(i);
    auto ci = c.row(i);
    for (int j = 0; j < b.rows(); ++j) {
      const auto bj = b.row(j);
      double acc = 0.0;
      for (int k = 0; k < a.cols(); ++k) acc += ai[static_cast<size_t>(k)] * bj[static_cast<size_t>(k)];
      ci[static_cast<size_t>(j)] = acc;
    }
  }
  return c;
}

DenseMatrix concat_cols(const DenseMatrix& a, const DenseMatrix& b) {
  if (a.rows() != b.rows()) throw std::invalid_argument("concat_cols: row counts differ");
  DenseMatrix c(a.rows(), a.cols() + b.cols());
  for (int i = 0; i < a.rows(); ++i) {
    auto ci = c.row(i);
    const auto ai = a.row(i);
    const auto bi = b.row(i);
    for (int j = 0; j < a.cols(); ++j) ci[static_cast<size_t>(j)] = ai[static_cast<size_t>(j)];
    for (int j = 0; j < b.cols(); ++j) ci[static_cast<size_t>(a.cols() + j)] = bi[static_cast<size_t>(j)];
  }
  return c;
}

DenseMatrix take_rows(const DenseMatrix& a, std::span<const int> rows) {
  DenseMatrix c(static_cast<int>(rows.size()), a.cols());
  for (size_t i = 0; i < rows.size(); ++i) {
    const auto src = a.row(rows[i]);
    auto dst = c.row(static_cast<int>(i));
    for (int j = 0; j < a.cols(); ++j) dst[static_cast<size_t>(j)] = src[static_cast<size_t>(j)];
  }
  return c;
}

void softmax_rows(DenseMatrix& m) {
  for (int i = 0; i < m.rows(); ++i) {
    auto r = m.row(i);
    double mx = r[0];
    for (double v : r) mx = std::max(mx, v);
    double sum = 0.0;
    for (double& v : r) {
      v = std::exp(v - mx);
      sum += v;
    }
    for (double& v : r) v /= sum;
  }
}

std::vector<int> argmax_rows(const DenseMatrix& m) {
  std::vector<int> out(static_cast<size_t>(m.rows()));
  for (int i = 0; i < m.rows(); ++i) {
    const auto r = m.row(i);
    int best = 0;
    for (int j = 1; j < m.cols(); ++j)
      if (r[static_cast<size_t>(j)] > r[static_cast<size_t>(best)]) best = j;
    out[static_cast<size_t>(i)] = best;
  }
  return out;
}

}  // namespace lpgnet
