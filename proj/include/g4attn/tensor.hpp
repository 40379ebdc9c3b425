#pragma once

#include <cmath>
#include <cstddef>
#include <numeric>
#include <vector>

#include "g4attn/common.hpp"

namespace g4attn {

// Dense row-major double tensor. Shapes are small and fixed per model, so
// this stays deliberately minimal.
struct Tensor {
  std::vector<size_t> shape;
  std::vector<double> data;

  Tensor() = default;
  explicit Tensor(std::vector<size_t> s) : shape(std::move(s)) {
    data.assign(numel_of(shape), 0.0);
  }

  static size_t numel_of(const std::vector<size_t>& s) {
    size_t n = 1;
    for (const size_t d : s) n *= d;
    return n;
  }

  size_t numel() const { return data.size(); }
  bool empty() const { return data.empty(); }

  double& at(size_t i) { return data[i]; }
  double at(size_t i) const { return data[i]; }
  double& at(size_t i, size_t j) { return data[i * shape[1] + j]; }
  double at(size_t i, size_t j) const { return data[i * shape[1] + j]; }
  double& at(size_t i, size_t j, size_t k) { return data[(i * shape[1] + j) * shape[2] + k]; }
  double at(size_t i, size_t j, size_t k) const {
    return data[(i * shape[1] + j) * shape[2] + k];
  }

  void zero() { std::fill(data.begin(), data.end(), 0.0); }

  bool all_finite() const {
    for (const double v : data)
      if (!std::isfinite(v)) return false;
    return true;
  }

  bool operator==(const Tensor&) const = default;
};

}  // namespace g4attn
