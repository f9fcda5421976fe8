#include <cmath>

#include "cooccur/kernels.hpp"

// Reference kernels. Accumulations run in index order; per-element arithmetic
// uses std::fma with the same expression structure as the SIMD variants, so
// the elementwise kernels are bit-identical across backends.

namespace cooccur::kern::scalar {

double dot(const double* a, const double* b, std::size_t n) {
  double acc = 0.0;
  for (std::size_t i = 0; i < n; ++i) acc = std::fma(a[i], b[i], acc);
  return acc;
}

void axpy(double a, const double* x, double* y, std::size_t n) {
  for (std::size_t i = 0; i < n; ++i) y[i] = std::fma(a, x[i], y[i]);
}

double sqdist(const double* a, const double* b, std::size_t n) {
  double acc = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    const double d = a[i] - b[i];
    acc = std::fma(d, d, acc);
  }
  return acc;
}

double sum(const double* x, std::size_t n) {
  double acc = 0.0;
  for (std::size_t i = 0; i < n; ++i) acc += x[i];
  return acc;
}

void scale(double* x, double a, std::size_t n) {
  for (std::size_t i = 0; i < n; ++i) x[i] *= a;
}

void rot(double* x, double* y, double c, double s, std::size_t n) {
  for (std::size_t i = 0; i < n; ++i) {
    const double sy = s * y[i];
    const double sx = s * x[i];
    const double xn = std::fma(c, x[i], -sy);
    const double yn = std::fma(c, y[i], sx);
    x[i] = xn;
    y[i] = yn;
  }
}

}  // namespace cooccur::kern::scalar
