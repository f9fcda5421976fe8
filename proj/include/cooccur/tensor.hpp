#pragma once

#include <cmath>
#include <cstddef>
#include <initializer_list>
#include <numeric>
#include <vector>

#include "cooccur/errors.hpp"

namespace cooccur {

// Dense row-major f64 array. Carries activations, parameters and gradients.
struct Tensor {
  std::vector<std::size_t> shape;
  std::vector<double> data;

  Tensor() = default;
  explicit Tensor(std::vector<std::size_t> s) : shape(std::move(s)) {
    data.assign(numel_of(shape), 0.0);
  }
  Tensor(std::initializer_list<std::size_t> s)
      : Tensor(std::vector<std::size_t>(s)) {}

  static std::size_t numel_of(const std::vector<std::size_t>& s) {
    return std::accumulate(s.begin(), s.end(), std::size_t{1},
                           std::multiplies<>());
  }

  std::size_t numel() const { return data.size(); }
  bool empty() const { return data.empty(); }

  double* ptr() { return data.data(); }
  const double* ptr() const { return data.data(); }

  // (h, w, c) accessor for rank-3 tensors.
  double& at3(std::size_t y, std::size_t x, std::size_t c) {
    return data[(y * shape[1] + x) * shape[2] + c];
  }
  double at3(std::size_t y, std::size_t x, std::size_t c) const {
    return data[(y * shape[1] + x) * shape[2] + c];
  }

  void fill(double v) { std::fill(data.begin(), data.end(), v); }

  bool same_shape(const Tensor& o) const { return shape == o.shape; }

  bool all_finite() const {
    for (double v : data)
      if (!std::isfinite(v)) return false;
    return true;
  }
};

inline void require_shape(const Tensor& t, std::size_t side,
                          const char* what) {
  if (t.shape.size() != 3 || t.shape[0] != side || t.shape[1] != side ||
      t.shape[2] != 3)
    fail(ErrorCategory::InputShape, std::string(what) + ": expected " +
                                        std::to_string(side) + "x" +
                                        std::to_string(side) + "x3 input");
}

}  // namespace cooccur
