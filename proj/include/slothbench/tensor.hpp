#pragma once

#include <cmath>
#include <cstddef>
#include <numeric>
#include <string>
#include <vector>

#include "slothbench/error.hpp"

namespace sloth {

// Dense row-major float tensor. Everything in the toolkit is rank 1 or 2.
struct Tensor {
  std::vector<int> shape;
  std::vector<float> data;

  Tensor() = default;
  Tensor(std::vector<int> s, std::vector<float> d) : shape(std::move(s)), data(std::move(d)) {}

  static Tensor zeros(std::vector<int> s) {
    std::size_t n = 1;
    for (int d : s) n *= static_cast<std::size_t>(d);
    return Tensor(std::move(s), std::vector<float>(n, 0.f));
  }

  static Tensor scalar(float v) { return Tensor({1}, {v}); }

  std::size_t size() const { return data.size(); }
  int rows() const { return shape.size() == 2 ? shape[0] : 1; }
  int cols() const { return shape.size() == 2 ? shape[1] : shape[0]; }

  float& at(int r, int c) { return data[static_cast<std::size_t>(r) * cols() + c]; }
  float at(int r, int c) const { return data[static_cast<std::size_t>(r) * cols() + c]; }

  bool same_shape(const Tensor& other) const { return shape == other.shape; }

  bool all_finite() const {
    for (float v : data)
      if (!std::isfinite(v)) return false;
    return true;
  }
};

inline std::string shape_str(const Tensor& t) {
  std::string s = "[";
  for (std::size_t i = 0; i < t.shape.size(); ++i) {
    if (i) s += "x";
    s += std::to_string(t.shape[i]);
  }
  return s + "]";
}

}  // namespace sloth
