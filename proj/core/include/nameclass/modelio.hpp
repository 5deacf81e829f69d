#pragma once

#include <filesystem>
#include <stdexcept>
#include <string>
#include <string_view>

#include "nameclass/model.hpp"

namespace nameclass {

inline constexpr int kModelFormatVersion = 1;

enum class ModelIoErrc {
  unsupported_version,
  dictionary_mismatch,
  dim_mismatch,
  non_finite_weight,
  parse_error,   // unparseable or truncated file
  schema_error,  // missing/invalid fields, class names, spec violations
  io_error,
};

std::string_view to_string(ModelIoErrc code);

class ModelIoError : public std::runtime_error {
 public:
  ModelIoError(ModelIoErrc code, const std::string& message)
      : std::runtime_error(std::string(to_string(code)) + ": " + message), code_(code) {}

  ModelIoErrc code() const noexcept { return code_; }

 private:
  ModelIoErrc code_;
};

// Versioned JSON model file. Weights are stored at 32-bit precision
// (round-trips bit-exactly after the float cast on save); key order and
// number rendering are canonical, so serialization is byte-deterministic.
std::string serialize_model(const Model& model);
Model parse_model(std::string_view json_text);

// Refuses to write anything when the model fails validation (including any
// non-finite weight).
void save_model(const Model& model, const std::filesystem::path& path);
Model load_model(const std::filesystem::path& path);

}  // namespace nameclass
