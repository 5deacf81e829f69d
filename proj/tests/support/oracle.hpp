#pragma once

#include <span>

#include "nameclass/model.hpp"

// Straight-line, loop-based reimplementation of the forward pass, written
// independently of the engine (no Eigen, no shared kernels). Used as the
// reference in equivalence tests.
namespace oracle {

nameclass::Vec4 model_logits(const nameclass::Model& model, std::span<const int> indices);
nameclass::Vec4 model_probs(const nameclass::Model& model, std::span<const int> indices);

}  // namespace oracle
