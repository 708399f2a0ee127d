// SPDX-License-Identifier: Apache-2.0
#include <cstdint>
#include <optional>
#include <string_view>
#include <vector>

#include "reflex/corpus.hpp"

namespace reflex {
namespace {

std::optional<std::vector<char32_t>> decode_utf8(std::string_view text) {
  std::vector<char32_t> out;
  for (std::size_t i = 0; i < text.size();) {
    const auto lead = static_cast<unsigned char>(text[i]);
    std::size_t len = 0;
    char32_t cp = 0;
    if (lead < 0x80) {
      len = 1;
      cp = lead;
    } else if ((lead >> 5) == 0x6) {
      len = 2;
      cp = lead & 0x1f;
    } else if ((lead >> 4) == 0xe) {
      len = 3;
      cp = lead & 0x0f;
    } else if ((lead >> 3) == 0x1e) {
      len = 4;
      cp = lead & 0x07;
    } else {
      return std::nullopt;
    }
    if (i + len > text.size()) return std::nullopt;
    for (std::size_t k = 1; k < len; ++k) {
      const auto cont = static_cast<unsigned char>(text[i + k]);
      if ((cont >> 6) != 0x2) return std::nullopt;
      cp = (cp << 6) | (cont & 0x3f);
    }
    out.push_back(cp);
    i += len;
  }
  return out;
}

bool is_prosodic_mark(char32_t cp) {
  return cp == 0x02C8     // primary stress
         || cp == 0x02CC  // secondary stress
         || (cp >= 0x02E5 && cp <= 0x02E9);  // tone letters
}

}  // namespace

bool is_suprasegmental_symbol(std::string_view symbol) {
  auto cps = decode_utf8(symbol);
  if (!cps || cps->empty()) return false;
  for (char32_t cp : *cps) {
    if (!is_prosodic_mark(cp)) return false;
  }
  return true;
}

}  // namespace reflex
