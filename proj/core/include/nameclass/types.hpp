#pragma once

#include <array>
#include <cstdint>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>

namespace nameclass {

// Which name components a model consumes. Fixes the encoded input length.
enum class NameMode { lastname, fullname };

inline constexpr int kLastnameLength = 10;
inline constexpr int kFullnameLength = 20;

constexpr int input_length(NameMode mode) {
  return mode == NameMode::lastname ? kLastnameLength : kFullnameLength;
}

constexpr std::string_view to_string(NameMode mode) {
  return mode == NameMode::lastname ? "lastname" : "fullname";
}

std::optional<NameMode> parse_mode(std::string_view text);

enum class Race : int { asian = 0, black = 1, hispanic = 2, white = 3 };
enum class Gender : int { female = 0, male = 1 };

inline constexpr int kNumClasses = 4;
inline constexpr std::array<std::string_view, kNumClasses> kClassNames{
    "asian", "black", "hispanic", "white"};
inline constexpr std::array<std::string_view, 2> kGenderNames{"female", "male"};

constexpr std::string_view to_string(Race race) {
  return kClassNames[static_cast<int>(race)];
}
constexpr std::string_view to_string(Gender gender) {
  return kGenderNames[static_cast<int>(gender)];
}

// Case-insensitive, whitespace-trimmed label parsing. Race accepts only the
// four class names; gender accepts female/male/f/m.
std::optional<Race> parse_race(std::string_view label);
std::optional<Gender> parse_gender(std::string_view label);

using Vec4 = std::array<double, 4>;

// Ties broken toward the lowest class index.
int argmax4(const Vec4& values);

std::string_view trim(std::string_view text);
std::string to_lower(std::string_view text);

// Data or file content that violates a pipeline contract (missing values,
// empty cells, mode mismatches, malformed input files).
class DataError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

}  // namespace nameclass
