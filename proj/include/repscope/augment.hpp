#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "repscope/rng.hpp"

namespace repscope {

/// Per-stage probabilities of the split -> random-char -> keyboard chain.
struct AugmentConfig {
  double p_split = 0.3;
  double p_char = 0.3;
  double p_keyboard = 0.3;
  std::uint64_t seed = 0;

  void validate() const;
};

/// Splits each word (maximal non-whitespace run) of at least two characters
/// with probability p, at a uniform interior position.
std::string split_aug(std::string_view text, double p, Rng& rng);

/// Each non-whitespace character is selected with probability p and then
/// gets one of: insert a random character after it, substitute, swap with
/// the next character, delete. Replacements come from printable ASCII.
std::string random_char_aug(std::string_view text, double p, Rng& rng);

/// Each letter is replaced with probability p by a uniformly chosen QWERTY
/// neighbour, keeping its case. Other characters are untouched.
std::string keyboard_aug(std::string_view text, double p, Rng& rng);

/// Two independent passes of the full chain, each stage with its own seed
/// derived from cfg.seed. Both returned strings are augmented.
std::pair<std::string, std::string> augment_pair(std::string_view text, const AugmentConfig& cfg);

/// Lowercase adjacency table parsed from the shipped data file.
const std::map<char32_t, std::vector<char32_t>>& qwerty_neighbors();

/// UTF-8 helpers; decoding throws ValidationError on malformed input.
std::u32string decode_utf8(std::string_view text);
std::string encode_utf8(std::u32string_view text);

}  // namespace repscope
