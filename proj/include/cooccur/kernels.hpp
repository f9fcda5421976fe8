#pragma once

#include <cstddef>

// Data-parallel f64 inner loops used by the network, the eigensolver, k-means
// and the baseline measures. Scalar reference implementations plus SIMD
// variants (AVX2 on x86-64, NEON on aarch64) selected at runtime.
//
// Elementwise kernels (axpy, scale, rot) are bit-identical across backends:
// every backend evaluates the same fused-multiply-add expression per element.
// Reduction kernels (dot, sum, sqdist) reassociate across SIMD lanes and are
// equivalence-tested against the scalar reference to a tight tolerance.

namespace cooccur::kern {

enum class Backend { Scalar, Avx2, Neon };

// Active backend. Defaults to the best available; COOCCUR_KERNELS=scalar|avx2|
// neon|auto overrides at startup.
Backend active_backend();
const char* backend_name(Backend b);
bool backend_available(Backend b);
// Returns false (and leaves the dispatch untouched) if b is unavailable.
bool set_backend(Backend b);

// sum_i a[i]*b[i]
double dot(const double* a, const double* b, std::size_t n);
// y[i] += a*x[i]
void axpy(double a, const double* x, double* y, std::size_t n);
// sum_i (a[i]-b[i])^2
double sqdist(const double* a, const double* b, std::size_t n);
// sum_i x[i]
double sum(const double* x, std::size_t n);
// x[i] *= a
void scale(double* x, double a, std::size_t n);
// Plane rotation: (x[i], y[i]) <- (c*x[i] - s*y[i], s*x[i] + c*y[i])
void rot(double* x, double* y, double c, double s, std::size_t n);

// Scalar reference implementations, callable directly (equivalence tests).
namespace scalar {
double dot(const double* a, const double* b, std::size_t n);
void axpy(double a, const double* x, double* y, std::size_t n);
double sqdist(const double* a, const double* b, std::size_t n);
double sum(const double* x, std::size_t n);
void scale(double* x, double a, std::size_t n);
void rot(double* x, double* y, double c, double s, std::size_t n);
}  // namespace scalar

}  // namespace cooccur::kern
