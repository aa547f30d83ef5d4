#pragma once

// Dense row-major float kernels used by every model in the project.
//
// Each kernel exists twice: `serial` is the straight reference kept for
// testing, `parallel` splits the outermost output-row loop across OpenMP
// threads. Both compute every output element with the same operation order,
// so their results are bitwise identical; tests/unit/kernels_test.cpp holds
// them to that.

namespace cmi::kernels {

namespace serial {

// c[m,n] (+)= a[m,k] * b[k,n]
void GemmNN(const float* a, const float* b, float* c, int m, int k, int n, bool accumulate);
// c[m,n] (+)= a[m,k] * b[n,k]^T
void GemmNT(const float* a, const float* b, float* c, int m, int k, int n, bool accumulate);
// c[m,n] (+)= a[k,m]^T * b[k,n]
void GemmTN(const float* a, const float* b, float* c, int m, int k, int n, bool accumulate);

void SoftmaxRows(float* x, int rows, int cols);

// Per-row normalisation to zero mean and unit variance. Writes the
// normalised values to `xhat` and 1/sqrt(var + eps) per row to `rstd`.
void NormalizeRows(const float* x, float* xhat, float* rstd, int rows, int cols, float eps);

}  // namespace serial

namespace parallel {

void GemmNN(const float* a, const float* b, float* c, int m, int k, int n, bool accumulate);
void GemmNT(const float* a, const float* b, float* c, int m, int k, int n, bool accumulate);
void GemmTN(const float* a, const float* b, float* c, int m, int k, int n, bool accumulate);
void SoftmaxRows(float* x, int rows, int cols);
void NormalizeRows(const float* x, float* xhat, float* rstd, int rows, int cols, float eps);

}  // namespace parallel

// Default entry points used by the models.
inline void GemmNN(const float* a, const float* b, float* c, int m, int k, int n,
                   bool accumulate = false) {
  parallel::GemmNN(a, b, c, m, k, n, accumulate);
}
inline void GemmNT(const float* a, const float* b, float* c, int m, int k, int n,
                   bool accumulate = false) {
  parallel::GemmNT(a, b, c, m, k, n, accumulate);
}
inline void GemmTN(const float* a, const float* b, float* c, int m, int k, int n,
                   bool accumulate = false) {
  parallel::GemmTN(a, b, c, m, k, n, accumulate);
}
inline void SoftmaxRows(float* x, int rows, int cols) { parallel::SoftmaxRows(x, rows, cols); }
inline void NormalizeRows(const float* x, float* xhat, float* rstd, int rows, int cols,
                          float eps) {
  parallel::NormalizeRows(x, xhat, rstd, rows, cols, eps);
}

// Dot product with a fixed SIMD reduction order.
float Dot(const float* a, const float* b, int n);

// y += alpha * x
void Axpy(float alpha, const float* x, float* y, int n);

}  // namespace cmi::kernels
