#include "nameclass/types.hpp"

#include <cctype>

namespace nameclass {

std::string_view trim(std::string_view text) {
  std::size_t begin = 0;
  std::size_t end = text.size();
  while (begin < end && std::isspace(static_cast<unsigned char>(text[begin]))) ++begin;
  while (end > begin && std::isspace(static_cast<unsigned char>(text[end - 1]))) --end;
  return text.substr(begin, end - begin);
}

std::string to_lower(std::string_view text) {
  std::string out(text);
  for (char& c : out) {
    c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
  }
  return out;
}

std::optional<NameMode> parse_mode(std::string_view text) {
  const std::string t = to_lower(trim(text));
  if (t == "lastname") return NameMode::lastname;
  if (t == "fullname") return NameMode::fullname;
  return std::nullopt;
}

std::optional<Race> parse_race(std::string_view label) {
  const std::string t = to_lower(trim(label));
  for (int i = 0; i < kNumClasses; ++i) {
    if (t == kClassNames[i]) return static_cast<Race>(i);
  }
  return std::nullopt;
}

std::optional<Gender> parse_gender(std::string_view label) {
  const std::string t = to_lower(trim(label));
  if (t == "female" || t == "f") return Gender::female;
  if (t == "male" || t == "m") return Gender::male;
  return std::nullopt;
}

int argmax4(const Vec4& values) {
  int best = 0;
  for (int i = 1; i < 4; ++i) {
    if (values[i] > values[best]) best = i;
  }
  return best;
}

}  // namespace nameclass
