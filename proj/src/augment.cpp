#include "repscope/augment.hpp"

#include <sstream>

#include "repscope/error.hpp"
#include "repscope/qwerty_table.hpp"

namespace repscope {

namespace {

bool is_space(char32_t c) {
  return c == U' ' || c == U'\t' || c == U'\n' || c == U'\r' || c == U'\v' || c == U'\f' || c == 0x00A0 ||
         c == 0x3000 || (c >= 0x2000 && c <= 0x200A);
}

char32_t random_printable(Rng& rng) { return static_cast<char32_t>(0x21 + rng.below(0x7E - 0x21 + 1)); }

void check_probability(double p, const char* name) {
  if (!(p >= 0.0 && p <= 1.0)) throw ValidationError(std::string(name) + " must be in [0, 1]");
}

std::map<char32_t, std::vector<char32_t>> parse_table(const char* text) {
  std::map<char32_t, std::vector<char32_t>> table;
  std::istringstream in(text);
  std::string line;
  while (std::getline(in, line)) {
    if (line.empty() || line[0] == '#') continue;
    const auto space = line.find(' ');
    if (space != 1) throw Error("malformed keyboard table line: " + line);
    auto& list = table[static_cast<char32_t>(line[0])];
    for (char c : line.substr(space + 1)) list.push_back(static_cast<char32_t>(c));
  }
  return table;
}

}  // namespace

void AugmentConfig::validate() const {
  check_probability(p_split, "p_split");
  check_probability(p_char, "p_char");
  check_probability(p_keyboard, "p_keyboard");
}

std::u32string decode_utf8(std::string_view s) {
  std::u32string out;
  out.reserve(s.size());
  for (std::size_t i = 0; i < s.size();) {
    const auto b0 = static_cast<unsigned char>(s[i]);
    std::size_t len = 0;
    char32_t cp = 0;
    if (b0 < 0x80) {
      len = 1;
      cp = b0;
    } else if ((b0 >> 5) == 0x6) {
      len = 2;
      cp = b0 & 0x1F;
    } else if ((b0 >> 4) == 0xE) {
      len = 3;
      cp = b0 & 0x0F;
    } else if ((b0 >> 3) == 0x1E) {
      len = 4;
      cp = b0 & 0x07;
    } else {
      throw ValidationError("invalid UTF-8 lead byte at offset " + std::to_string(i));
    }
    if (i + len > s.size()) throw ValidationError("truncated UTF-8 sequence at offset " + std::to_string(i));
    for (std::size_t k = 1; k < len; ++k) {
      const auto b = static_cast<unsigned char>(s[i + k]);
      if ((b >> 6) != 0x2) throw ValidationError("invalid UTF-8 continuation at offset " + std::to_string(i + k));
      cp = (cp << 6) | (b & 0x3F);
    }
    out.push_back(cp);
    i += len;
  }
  return out;
}

std::string encode_utf8(std::u32string_view s) {
  std::string out;
  out.reserve(s.size());
  for (char32_t c : s) {
    if (c < 0x80) {
      out.push_back(static_cast<char>(c));
    } else if (c < 0x800) {
      out.push_back(static_cast<char>(0xC0 | (c >> 6)));
      out.push_back(static_cast<char>(0x80 | (c & 0x3F)));
    } else if (c < 0x10000) {
      out.push_back(static_cast<char>(0xE0 | (c >> 12)));
      out.push_back(static_cast<char>(0x80 | ((c >> 6) & 0x3F)));
      out.push_back(static_cast<char>(0x80 | (c & 0x3F)));
    } else {
      out.push_back(static_cast<char>(0xF0 | (c >> 18)));
      out.push_back(static_cast<char>(0x80 | ((c >> 12) & 0x3F)));
      out.push_back(static_cast<char>(0x80 | ((c >> 6) & 0x3F)));
      out.push_back(static_cast<char>(0x80 | (c & 0x3F)));
    }
  }
  return out;
}

const std::map<char32_t, std::vector<char32_t>>& qwerty_neighbors() {
  static const auto table = parse_table(detail::kQwertyTableV1);
  return table;
}

std::string split_aug(std::string_view text, double p, Rng& rng) {
  check_probability(p, "split probability");
  const std::u32string in = decode_utf8(text);
  std::u32string out;
  out.reserve(in.size() + in.size() / 2);
  std::size_t i = 0;
  while (i < in.size()) {
    if (is_space(in[i])) {
      out.push_back(in[i++]);
      continue;
    }
    std::size_t end = i;
    while (end < in.size() && !is_space(in[end])) ++end;
    const std::size_t len = end - i;
    if (len >= 2 && rng.bernoulli(p)) {
      const std::size_t cut = 1 + static_cast<std::size_t>(rng.below(len - 1));
      out.append(in, i, cut);
      out.push_back(U' ');
      out.append(in, i + cut, len - cut);
    } else {
      out.append(in, i, len);
    }
    i = end;
  }
  return encode_utf8(out);
}

std::string random_char_aug(std::string_view text, double p, Rng& rng) {
  check_probability(p, "character probability");
  const std::u32string in = decode_utf8(text);
  std::u32string out;
  out.reserve(in.size() + 8);
  for (std::size_t i = 0; i < in.size(); ++i) {
    const char32_t c = in[i];
    if (is_space(c) || !rng.bernoulli(p)) {
      out.push_back(c);
      continue;
    }
    switch (rng.below(4)) {
      case 0:  // insert
        out.push_back(c);
        out.push_back(random_printable(rng));
        break;
      case 1:  // substitute
        out.push_back(random_printable(rng));
        break;
      case 2:  // swap with next
        if (i + 1 < in.size() && !is_space(in[i + 1])) {
          out.push_back(in[i + 1]);
          out.push_back(c);
          ++i;
        } else {
          out.push_back(c);
        }
        break;
      default:  // delete
        break;
    }
  }
  return encode_utf8(out);
}

std::string keyboard_aug(std::string_view text, double p, Rng& rng) {
  check_probability(p, "keyboard probability");
  const auto& table = qwerty_neighbors();
  std::u32string s = decode_utf8(text);
  for (char32_t& c : s) {
    const bool upper = c >= U'A' && c <= U'Z';
    const char32_t lower = upper ? c - U'A' + U'a' : c;
    const auto it = table.find(lower);
    if (it == table.end() || it->second.empty()) continue;
    if (!rng.bernoulli(p)) continue;
    const char32_t repl = it->second[rng.below(it->second.size())];
    c = upper ? repl - U'a' + U'A' : repl;
  }
  return encode_utf8(s);
}

std::pair<std::string, std::string> augment_pair(std::string_view text, const AugmentConfig& cfg) {
  cfg.validate();
  auto run_branch = [&](std::uint64_t branch) {
    const std::uint64_t branch_seed = derive_seed(cfg.seed, branch);
    Rng split_rng(derive_seed(branch_seed, 0));
    Rng char_rng(derive_seed(branch_seed, 1));
    Rng key_rng(derive_seed(branch_seed, 2));
    std::string s = split_aug(text, cfg.p_split, split_rng);
    s = random_char_aug(s, cfg.p_char, char_rng);
    return keyboard_aug(s, cfg.p_keyboard, key_rng);
  };
  return {run_branch(0), run_branch(1)};
}

}  // namespace repscope
