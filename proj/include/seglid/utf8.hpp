#pragma once

// UTF-8 <-> Unicode scalar value conversion. All segment offsets in this
// library are measured in scalar values, never in bytes.

#include <cstdint>
#include <stdexcept>
#include <string>
#include <string_view>

namespace seglid {

struct Utf8Error : std::runtime_error {
  explicit Utf8Error(const std::string& what) : std::runtime_error(what) {}
};

// Decodes one scalar value starting at s[i]; advances i past it.
inline char32_t utf8_next(std::string_view s, size_t& i) {
  auto byte = [&](size_t k) -> uint32_t { return static_cast<unsigned char>(s[k]); };
  auto cont = [&](size_t k) {
    if (k >= s.size() || (byte(k) & 0xC0u) != 0x80u) throw Utf8Error("truncated or malformed UTF-8 sequence");
    return byte(k) & 0x3Fu;
  };
  uint32_t b0 = byte(i);
  if (b0 < 0x80u) { i += 1; return static_cast<char32_t>(b0); }
  if ((b0 & 0xE0u) == 0xC0u) {
    uint32_t cp = ((b0 & 0x1Fu) << 6) | cont(i + 1);
    if (cp < 0x80u) throw Utf8Error("overlong UTF-8 encoding");
    i += 2;
    return static_cast<char32_t>(cp);
  }
  if ((b0 & 0xF0u) == 0xE0u) {
    uint32_t cp = ((b0 & 0x0Fu) << 12) | (cont(i + 1) << 6) | cont(i + 2);
    if (cp < 0x800u) throw Utf8Error("overlong UTF-8 encoding");
    if (cp >= 0xD800u && cp <= 0xDFFFu) throw Utf8Error("surrogate code point in UTF-8");
    i += 3;
    return static_cast<char32_t>(cp);
  }
  if ((b0 & 0xF8u) == 0xF0u) {
    uint32_t cp = ((b0 & 0x07u) << 18) | (cont(i + 1) << 12) | (cont(i + 2) << 6) | cont(i + 3);
    if (cp < 0x10000u || cp > 0x10FFFFu) throw Utf8Error("out-of-range UTF-8 encoding");
    i += 4;
    return static_cast<char32_t>(cp);
  }
  throw Utf8Error("invalid UTF-8 lead byte");
}

inline std::u32string utf8_decode(std::string_view s) {
  std::u32string out;
  out.reserve(s.size());
  size_t i = 0;
  while (i < s.size()) out.push_back(utf8_next(s, i));
  return out;
}

inline void utf8_append(std::string& out, char32_t c) {
  uint32_t cp = static_cast<uint32_t>(c);
  if (cp < 0x80u) {
    out.push_back(static_cast<char>(cp));
  } else if (cp < 0x800u) {
    out.push_back(static_cast<char>(0xC0u | (cp >> 6)));
    out.push_back(static_cast<char>(0x80u | (cp & 0x3Fu)));
  } else if (cp < 0x10000u) {
    out.push_back(static_cast<char>(0xE0u | (cp >> 12)));
    out.push_back(static_cast<char>(0x80u | ((cp >> 6) & 0x3Fu)));
    out.push_back(static_cast<char>(0x80u | (cp & 0x3Fu)));
  } else {
    out.push_back(static_cast<char>(0xF0u | (cp >> 18)));
    out.push_back(static_cast<char>(0x80u | ((cp >> 12) & 0x3Fu)));
    out.push_back(static_cast<char>(0x80u | ((cp >> 6) & 0x3Fu)));
    out.push_back(static_cast<char>(0x80u | (cp & 0x3Fu)));
  }
}

inline std::string utf8_encode(std::u32string_view s) {
  std::string out;
  out.reserve(s.size());
  for (char32_t c : s) utf8_append(out, c);
  return out;
}

// Number of scalar values in a UTF-8 string.
inline size_t utf8_length(std::string_view s) {
  size_t n = 0, i = 0;
  while (i < s.size()) { utf8_next(s, i); ++n; }
  return n;
}

// Byte range of scalar-value range [from, to).
inline std::string utf8_substr(std::string_view s, size_t from, size_t to) {
  size_t i = 0, k = 0, begin = 0;
  while (k < from) { utf8_next(s, i); ++k; }
  begin = i;
  while (k < to) { utf8_next(s, i); ++k; }
  return std::string(s.substr(begin, i - begin));
}

}  // namespace seglid
