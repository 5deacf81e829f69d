#include "nameclass/tensor.hpp"

#include <cmath>

namespace nameclass {

bool Tensor2::all_finite() const {
  for (double v : data) {
    if (!std::isfinite(v)) return false;
  }
  return true;
}

}  // namespace nameclass
