#include "cooccur/kernels.hpp"

#include <cstdlib>
#include <cstring>

namespace cooccur::kern {

#if defined(__x86_64__) || defined(_M_X64)
namespace avx2 {
double dot(const double*, const double*, std::size_t);
void axpy(double, const double*, double*, std::size_t);
double sqdist(const double*, const double*, std::size_t);
double sum(const double*, std::size_t);
void scale(double*, double, std::size_t);
void rot(double*, double*, double, double, std::size_t);
}  // namespace avx2
#endif

#if defined(__aarch64__)
namespace neon {
double dot(const double*, const double*, std::size_t);
void axpy(double, const double*, double*, std::size_t);
double sqdist(const double*, const double*, std::size_t);
double sum(const double*, std::size_t);
void scale(double*, double, std::size_t);
void rot(double*, double*, double, double, std::size_t);
}  // namespace neon
#endif

namespace {

struct Table {
  double (*dot)(const double*, const double*, std::size_t);
  void (*axpy)(double, const double*, double*, std::size_t);
  double (*sqdist)(const double*, const double*, std::size_t);
  double (*sum)(const double*, std::size_t);
  void (*scale)(double*, double, std::size_t);
  void (*rot)(double*, double*, double, double, std::size_t);
};

constexpr Table kScalarTable = {scalar::dot, scalar::axpy, scalar::sqdist,
                                scalar::sum, scalar::scale, scalar::rot};

Table table_for(Backend b) {
  switch (b) {
#if defined(__x86_64__) || defined(_M_X64)
    case Backend::Avx2:
      return {avx2::dot, avx2::axpy, avx2::sqdist,
              avx2::sum, avx2::scale, avx2::rot};
#endif
#if defined(__aarch64__)
    case Backend::Neon:
      return {neon::dot, neon::axpy, neon::sqdist,
              neon::sum, neon::scale, neon::rot};
#endif
    default:
      return kScalarTable;
  }
}

Backend best_available() {
#if defined(__x86_64__) || defined(_M_X64)
  if (__builtin_cpu_supports("avx2") && __builtin_cpu_supports("fma"))
    return Backend::Avx2;
#elif defined(__aarch64__)
  return Backend::Neon;
#endif
  return Backend::Scalar;
}

Backend env_choice(Backend fallback) {
  const char* env = std::getenv("COOCCUR_KERNELS");
  if (!env) return fallback;
  if (std::strcmp(env, "scalar") == 0) return Backend::Scalar;
  if (std::strcmp(env, "avx2") == 0 && backend_available(Backend::Avx2))
    return Backend::Avx2;
  if (std::strcmp(env, "neon") == 0 && backend_available(Backend::Neon))
    return Backend::Neon;
  return fallback;
}

struct Dispatch {
  Backend backend;
  Table table;
  Dispatch() : backend(env_choice(best_available())), table(table_for(backend)) {}
};

Dispatch& dispatch() {
  static Dispatch d;
  return d;
}

}  // namespace

Backend active_backend() { return dispatch().backend; }

const char* backend_name(Backend b) {
  switch (b) {
    case Backend::Scalar: return "scalar";
    case Backend::Avx2: return "avx2";
    case Backend::Neon: return "neon";
  }
  return "scalar";
}

bool backend_available(Backend b) {
  switch (b) {
    case Backend::Scalar:
      return true;
    case Backend::Avx2:
#if defined(__x86_64__) || defined(_M_X64)
      return __builtin_cpu_supports("avx2") && __builtin_cpu_supports("fma");
#else
      return false;
#endif
    case Backend::Neon:
#if defined(__aarch64__)
      return true;
#else
      return false;
#endif
  }
  return false;
}

bool set_backend(Backend b) {
  if (!backend_available(b)) return false;
  dispatch().backend = b;
  dispatch().table = table_for(b);
  return true;
}

double dot(const double* a, const double* b, std::size_t n) {
  return dispatch().table.dot(a, b, n);
}
void axpy(double a, const double* x, double* y, std::size_t n) {
  dispatch().table.axpy(a, x, y, n);
}
double sqdist(const double* a, const double* b, std::size_t n) {
  return dispatch().table.sqdist(a, b, n);
}
double sum(const double* x, std::size_t n) { return dispatch().table.sum(x, n); }
void scale(double* x, double a, std::size_t n) { dispatch().table.scale(x, a, n); }
void rot(double* x, double* y, double c, double s, std::size_t n) {
  dispatch().table.rot(x, y, c, s, n);
}

}  // namespace cooccur::kern
