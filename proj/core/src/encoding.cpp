#include "nameclass/encoding.hpp"

#include <cassert>

namespace nameclass {

namespace {

bool is_ascii_space(char c) {
  return c == ' ' || c == '\t' || c == '\n' || c == '\v' || c == '\f' || c == '\r';
}

std::string_view strip_outer_whitespace(std::string_view s) {
  std::size_t begin = 0;
  std::size_t end = s.size();
  while (begin < end && is_ascii_space(s[begin])) ++begin;
  while (end > begin && is_ascii_space(s[end - 1])) --end;
  return s.substr(begin, end - begin);
}

// Length of a valid UTF-8 sequence starting at position i, or 0 if invalid.
std::size_t utf8_sequence_length(std::string_view s, std::size_t i) {
  const auto byte = static_cast<unsigned char>(s[i]);
  std::size_t len = 0;
  if ((byte & 0xE0u) == 0xC0u) len = 2;
  else if ((byte & 0xF0u) == 0xE0u) len = 3;
  else if ((byte & 0xF8u) == 0xF0u) len = 4;
  else return 0;
  if (i + len > s.size()) return 0;
  for (std::size_t k = 1; k < len; ++k) {
    if ((static_cast<unsigned char>(s[i + k]) & 0xC0u) != 0x80u) return 0;
  }
  return len;
}

}  // namespace

const CharDictionary& char_dictionary() {
  static const CharDictionary dict = [] {
    CharDictionary d{};
    d.symbols[kPadIndex] = kPadSymbol;
    for (int i = 0; i < 26; ++i) d.symbols[1 + i] = static_cast<char>('a' + i);
    d.symbols[kSpaceIndex] = ' ';
    d.symbols[kUnknownIndex] = kUnknownSymbol;
    return d;
  }();
  return dict;
}

int CharDictionary::index_of(char c) const {
  if (c == kPadSymbol) return kPadIndex;
  if (c == kUnknownSymbol) return kUnknownIndex;
  if (c >= 'a' && c <= 'z') return 1 + (c - 'a');
  if (c == ' ') return kSpaceIndex;
  // fall back to the normalization rules so the map stays total
  if (c >= 'A' && c <= 'Z') return 1 + (c - 'A');
  if (c >= '0' && c <= '9') return kUnknownIndex;
  if (static_cast<unsigned char>(c) < 0x80u) return kSpaceIndex;  // ASCII punctuation
  return kUnknownIndex;                                           // non-ASCII byte
}

std::string normalize(std::string_view raw) {
  const std::string_view s = strip_outer_whitespace(raw);
  std::string out;
  out.reserve(s.size());
  std::size_t i = 0;
  while (i < s.size()) {
    const char c = s[i];
    const auto byte = static_cast<unsigned char>(c);
    if (byte < 0x80u) {
      if (c >= 'a' && c <= 'z') {
        out.push_back(c);
      } else if (c >= 'A' && c <= 'Z') {
        out.push_back(static_cast<char>(c - 'A' + 'a'));
      } else if (c >= '0' && c <= '9') {
        out.push_back(kUnknownSymbol);
      } else {
        out.push_back(' ');  // punctuation, including ' ' itself and controls
      }
      ++i;
      continue;
    }
    // one unknown per multi-byte sequence; invalid bytes count individually
    const std::size_t len = utf8_sequence_length(s, i);
    out.push_back(kUnknownSymbol);
    i += (len == 0) ? 1 : len;
  }
  return out;
}

std::vector<int> encode_component(std::string_view normalized, int len) {
  assert(len >= 1);
  const auto& dict = char_dictionary();
  std::vector<int> indices(static_cast<std::size_t>(len), kPadIndex);
  const std::size_t n = std::min(normalized.size(), static_cast<std::size_t>(len));
  for (std::size_t i = 0; i < n; ++i) {
    indices[i] = dict.index_of(normalized[i]);
  }
  return indices;
}

EncodedName encode_lastname(std::string_view last_raw) {
  EncodedName encoded;
  encoded.mode = NameMode::lastname;
  encoded.indices = encode_component(normalize(last_raw), kComponentLength);
  return encoded;
}

EncodedName encode_fullname(std::string_view first_raw, std::string_view last_raw) {
  EncodedName encoded;
  encoded.mode = NameMode::fullname;
  encoded.indices = encode_component(normalize(first_raw), kComponentLength);
  std::vector<int> last = encode_component(normalize(last_raw), kComponentLength);
  encoded.indices.insert(encoded.indices.end(), last.begin(), last.end());
  return encoded;
}

}  // namespace nameclass
