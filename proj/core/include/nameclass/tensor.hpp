#pragma once

#include <cassert>
#include <cstddef>
#include <vector>

namespace nameclass {

// Dense row-major matrix of doubles; the unit of parameter storage and
// serialization. Bias vectors are stored as 1 x n tensors so that every
// trainable parameter is a Tensor2.
struct Tensor2 {
  int rows = 0;
  int cols = 0;
  std::vector<double> data;  // rows * cols, row-major

  Tensor2() = default;
  Tensor2(int r, int c)
      : rows(r), cols(c), data(static_cast<std::size_t>(r) * static_cast<std::size_t>(c), 0.0) {}

  double& at(int r, int c) {
    assert(r >= 0 && r < rows && c >= 0 && c < cols);
    return data[static_cast<std::size_t>(r) * cols + c];
  }
  double at(int r, int c) const {
    assert(r >= 0 && r < rows && c >= 0 && c < cols);
    return data[static_cast<std::size_t>(r) * cols + c];
  }

  double* row(int r) { return data.data() + static_cast<std::size_t>(r) * cols; }
  const double* row(int r) const { return data.data() + static_cast<std::size_t>(r) * cols; }

  std::size_t size() const { return data.size(); }

  bool all_finite() const;
};

}  // namespace nameclass
