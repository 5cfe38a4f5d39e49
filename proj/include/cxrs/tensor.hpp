#pragma once

#include <cstddef>
#include <numeric>
#include <string>
#include <vector>

#include "cxrs/error.hpp"

namespace cxrs {

inline std::size_t shape_numel(const std::vector<std::size_t>& shape) {
  std::size_t n = 1;
  for (std::size_t d : shape) n *= d;
  return n;
}

inline std::string shape_to_string(const std::vector<std::size_t>& shape) {
  std::string s = "(";
  for (std::size_t i = 0; i < shape.size(); ++i) {
    if (i) s += ", ";
    s += std::to_string(shape[i]);
  }
  return s + ")";
}

// Dense n-dimensional array of 64-bit reals, row-major. The carrier for all
// network math; gradients live beside values in autograd nodes.
struct Tensor {
  std::vector<std::size_t> shape;
  std::vector<double> data;

  Tensor() = default;

  explicit Tensor(std::vector<std::size_t> s, double fill = 0.0)
      : shape(std::move(s)), data(shape_numel(shape), fill) {
    if (shape.empty()) throw ValidationError("tensor shape must have at least one dimension");
    for (std::size_t d : shape) {
      if (d == 0) throw ValidationError("tensor shape " + shape_to_string(shape) +
                                        " has a zero dimension");
    }
  }

  static Tensor from_values(std::vector<std::size_t> s, std::vector<double> values) {
    Tensor t(std::move(s));
    if (values.size() != t.numel()) {
      throw ValidationError("value count " + std::to_string(values.size()) +
                            " does not match shape " + shape_to_string(t.shape));
    }
    t.data = std::move(values);
    return t;
  }

  std::size_t numel() const { return data.size(); }
  std::size_t rank() const { return shape.size(); }

  // Rank-4 NCHW accessors.
  double& at4(std::size_t n, std::size_t c, std::size_t h, std::size_t w) {
    return data[((n * shape[1] + c) * shape[2] + h) * shape[3] + w];
  }
  double at4(std::size_t n, std::size_t c, std::size_t h, std::size_t w) const {
    return data[((n * shape[1] + c) * shape[2] + h) * shape[3] + w];
  }

  // Rank-2 accessors.
  double& at2(std::size_t i, std::size_t j) { return data[i * shape[1] + j]; }
  double at2(std::size_t i, std::size_t j) const { return data[i * shape[1] + j]; }

  bool same_shape(const Tensor& other) const { return shape == other.shape; }
};

}  // namespace cxrs
