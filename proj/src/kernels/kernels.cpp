#include "cmi/kernels/kernels.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>

namespace cmi::kernels {

float Dot(const float* a, const float* b, int n) {
  float acc = 0.0f;
#pragma omp simd reduction(+ : acc)
  for (int i = 0; i < n; ++i) acc += a[i] * b[i];
  return acc;
}

void Axpy(float alpha, const float* x, float* y, int n) {
#pragma omp simd
  for (int i = 0; i < n; ++i) y[i] += alpha * x[i];
}

namespace {

// Parallel regions are only worth their fork cost above this many flops.
constexpr long kParallelFlops = 1L << 16;

inline void RowNN(const float* a, const float* b, float* c, int i, int k, int n,
                  bool accumulate) {
  float* crow = c + static_cast<long>(i) * n;
  if (!accumulate) std::memset(crow, 0, sizeof(float) * n);
  const float* arow = a + static_cast<long>(i) * k;
  for (int kk = 0; kk < k; ++kk) {
    const float aik = arow[kk];
    if (aik == 0.0f) continue;
    Axpy(aik, b + static_cast<long>(kk) * n, crow, n);
  }
}

inline void RowNT(const float* a, const float* b, float* c, int i, int k, int n,
                  bool accumulate) {
  float* crow = c + static_cast<long>(i) * n;
  const float* arow = a + static_cast<long>(i) * k;
  for (int j = 0; j < n; ++j) {
    const float v = Dot(arow, b + static_cast<long>(j) * k, k);
    crow[j] = accumulate ? crow[j] + v : v;
  }
}

inline void RowTN(const float* a, const float* b, float* c, int i, int m, int k, int n,
                  bool accumulate) {
  float* crow = c + static_cast<long>(i) * n;
  if (!accumulate) std::memset(crow, 0, sizeof(float) * n);
  for (int kk = 0; kk < k; ++kk) {
    const float aki = a[static_cast<long>(kk) * m + i];
    if (aki == 0.0f) continue;
    Axpy(aki, b + static_cast<long>(kk) * n, crow, n);
  }
}

inline void SoftmaxRow(float* row, int cols) {
  float mx = row[0];
  for (int j = 1; j < cols; ++j) mx = std::max(mx, row[j]);
  float sum = 0.0f;
  for (int j = 0; j < cols; ++j) {
    row[j] = std::exp(row[j] - mx);
    sum += row[j];
  }
  const float inv = 1.0f / sum;
  for (int j = 0; j < cols; ++j) row[j] *= inv;
}

inline void NormalizeRow(const float* x, float* xhat, float* rstd, int i, int cols, float eps) {
  const float* row = x + static_cast<long>(i) * cols;
  float* out = xhat + static_cast<long>(i) * cols;
  float mean = 0.0f;
  for (int j = 0; j < cols; ++j) mean += row[j];
  mean /= static_cast<float>(cols);
  float var = 0.0f;
  for (int j = 0; j < cols; ++j) {
    const float d = row[j] - mean;
    var += d * d;
  }
  var /= static_cast<float>(cols);
  const float r = 1.0f / std::sqrt(var + eps);
  rstd[i] = r;
  for (int j = 0; j < cols; ++j) out[j] = (row[j] - mean) * r;
}

}  // namespace

namespace serial {

void GemmNN(const float* a, const float* b, float* c, int m, int k, int n, bool accumulate) {
  for (int i = 0; i < m; ++i) RowNN(a, b, c, i, k, n, accumulate);
}

void GemmNT(const float* a, const float* b, float* c, int m, int k, int n, bool accumulate) {
  for (int i = 0; i < m; ++i) RowNT(a, b, c, i, k, n, accumulate);
}

void GemmTN(const float* a, const float* b, float* c, int m, int k, int n, bool accumulate) {
  for (int i = 0; i < m; ++i) RowTN(a, b, c, i, m, k, n, accumulate);
}

void SoftmaxRows(float* x, int rows, int cols) {
  for (int i = 0; i < rows; ++i) SoftmaxRow(x + static_cast<long>(i) * cols, cols);
}

void NormalizeRows(const float* x, float* xhat, float* rstd, int rows, int cols, float eps) {
  for (int i = 0; i < rows; ++i) NormalizeRow(x, xhat, rstd, i, cols, eps);
}

}  // namespace serial

namespace parallel {

void GemmNN(const float* a, const float* b, float* c, int m, int k, int n, bool accumulate) {
  const bool wide = static_cast<long>(m) * k * n >= kParallelFlops;
#pragma omp parallel for schedule(static) if (wide)
  for (int i = 0; i < m; ++i) RowNN(a, b, c, i, k, n, accumulate);
}

void GemmNT(const float* a, const float* b, float* c, int m, int k, int n, bool accumulate) {
  const bool wide = static_cast<long>(m) * k * n >= kParallelFlops;
#pragma omp parallel for schedule(static) if (wide)
  for (int i = 0; i < m; ++i) RowNT(a, b, c, i, k, n, accumulate);
}

void GemmTN(const float* a, const float* b, float* c, int m, int k, int n, bool accumulate) {
  const bool wide = static_cast<long>(m) * k * n >= kParallelFlops;
#pragma omp parallel for schedule(static) if (wide)
  for (int i = 0; i < m; ++i) RowTN(a, b, c, i, m, k, n, accumulate);
}

void SoftmaxRows(float* x, int rows, int cols) {
  const bool wide = static_cast<long>(rows) * cols >= kParallelFlops / 8;
#pragma omp parallel for schedule(static) if (wide)
  for (int i = 0; i < rows; ++i) SoftmaxRow(x + static_cast<long>(i) * cols, cols);
}

void NormalizeRows(const float* x, float* xhat, float* rstd, int rows, int cols, float eps) {
  const bool wide = static_cast<long>(rows) * cols >= kParallelFlops / 8;
#pragma omp parallel for schedule(static) if (wide)
  for (int i = 0; i < rows; ++i) NormalizeRow(x, xhat, rstd, i, cols, eps);
}

}  // namespace parallel

}  // namespace cmi::kernels
