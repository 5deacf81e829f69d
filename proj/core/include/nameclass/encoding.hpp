#pragma once

#include <array>
#include <string>
#include <string_view>
#include <vector>

#include "nameclass/types.hpp"

namespace nameclass {

inline constexpr int kDictionarySize = 29;
inline constexpr int kPadIndex = 0;
inline constexpr int kSpaceIndex = 27;
inline constexpr int kUnknownIndex = 28;
inline constexpr char kPadSymbol = 'E';
inline constexpr char kUnknownSymbol = 'U';
inline constexpr int kComponentLength = 10;

// The fixed 29-symbol inventory: 'E' (pad) = 0, 'a'..'z' = 1..26, ' ' = 27,
// 'U' (unknown) = 28. The ordering is part of the model file contract and
// must never change without a format version bump.
struct CharDictionary {
  std::array<char, kDictionarySize> symbols;

  // Total over all bytes. Dictionary symbols map to their own index ('E' -> 0,
  // 'U' -> 28); any other byte goes through the normalization rules, so e.g.
  // 'K' -> 11, '-' -> 27, '3' -> 28. Normalized text only ever contains
  // dictionary symbols.
  int index_of(char c) const;
};

const CharDictionary& char_dictionary();

// Lowercases A-Z, replaces ASCII punctuation (any non-alphanumeric,
// non-space ASCII byte) with ' ', and replaces digits and non-ASCII input
// (one 'U' per UTF-8 sequence, or per byte when the sequence is invalid)
// with 'U'. Leading/trailing ASCII whitespace is stripped first; interior
// spaces are kept as-is.
std::string normalize(std::string_view raw);

// `normalized` must already be normalize() output. Maps characters to
// dictionary indices, pads with 'E' (index 0) up to len, truncates on the
// right beyond len.
std::vector<int> encode_component(std::string_view normalized, int len);

// Fixed-length integer input vector: length 10 in lastname mode, 20 in
// fullname mode with the last-name block always starting at offset 10.
struct EncodedName {
  std::vector<int> indices;
  NameMode mode = NameMode::lastname;
};

EncodedName encode_lastname(std::string_view last_raw);
EncodedName encode_fullname(std::string_view first_raw, std::string_view last_raw);

}  // namespace nameclass
