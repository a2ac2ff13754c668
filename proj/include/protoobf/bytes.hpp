#pragma once

#include <cstdint>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

namespace protoobf {

using Bytes = std::vector<std::uint8_t>;

// Domain error carrying a stable rule id, e.g. "wire.truncated".
class ProtoError : public std::runtime_error {
public:
  ProtoError(std::string rule, const std::string& msg)
      : std::runtime_error(rule + ": " + msg), rule_(std::move(rule)) {}
  const std::string& rule() const { return rule_; }

private:
  std::string rule_;
};

inline std::string to_hex(const Bytes& b) {
  static const char* digits = "0123456789abcdef";
  std::string out;
  out.reserve(b.size() * 2);
  for (std::uint8_t c : b) {
    out.push_back(digits[c >> 4]);
    out.push_back(digits[c & 0xf]);
  }
  return out;
}

inline Bytes from_hex(std::string_view s) {
  auto nibble = [](char c) -> int {
    if (c >= '0' && c <= '9') return c - '0';
    if (c >= 'a' && c <= 'f') return c - 'a' + 10;
    if (c >= 'A' && c <= 'F') return c - 'A' + 10;
    return -1;
  };
  if (s.size() % 2 != 0) throw ProtoError("bytes.hex", "odd hex length");
  Bytes out;
  out.reserve(s.size() / 2);
  for (std::size_t i = 0; i < s.size(); i += 2) {
    int hi = nibble(s[i]), lo = nibble(s[i + 1]);
    if (hi < 0 || lo < 0) throw ProtoError("bytes.hex", "bad hex digit");
    out.push_back(static_cast<std::uint8_t>(hi << 4 | lo));
  }
  return out;
}

// Big-endian modular arithmetic over equal-width byte strings (mod 2^(8w)).
inline Bytes be_add(const Bytes& a, const Bytes& b) {
  Bytes out(a.size());
  int carry = 0;
  for (std::size_t i = a.size(); i-- > 0;) {
    int s = a[i] + b[i] + carry;
    out[i] = static_cast<std::uint8_t>(s & 0xff);
    carry = s >> 8;
  }
  return out;
}

inline Bytes be_sub(const Bytes& a, const Bytes& b) {
  Bytes out(a.size());
  int borrow = 0;
  for (std::size_t i = a.size(); i-- > 0;) {
    int s = a[i] - b[i] - borrow;
    borrow = s < 0 ? 1 : 0;
    out[i] = static_cast<std::uint8_t>(s & 0xff);
  }
  return out;
}

inline Bytes be_xor(const Bytes& a, const Bytes& b) {
  Bytes out(a.size());
  for (std::size_t i = 0; i < a.size(); ++i) out[i] = a[i] ^ b[i];
  return out;
}

inline Bytes be_encode(std::uint64_t v, std::size_t width) {
  Bytes out(width, 0);
  for (std::size_t i = width; i-- > 0 && v != 0;) {
    out[i] = static_cast<std::uint8_t>(v & 0xff);
    v >>= 8;
  }
  return out;
}

// Big-endian unsigned decode; widths beyond 8 bytes must have zero high bytes.
inline std::uint64_t be_decode(const Bytes& b) {
  std::size_t start = 0;
  if (b.size() > 8) {
    for (std::size_t i = 0; i + 8 < b.size(); ++i)
      if (b[i] != 0) throw ProtoError("bytes.decode", "value exceeds 64 bits");
    start = b.size() - 8;
  }
  std::uint64_t v = 0;
  for (std::size_t i = start; i < b.size(); ++i) v = v << 8 | b[i];
  return v;
}

inline bool contains_subseq(const Bytes& haystack, const Bytes& needle) {
  if (needle.empty() || needle.size() > haystack.size()) return false;
  for (std::size_t i = 0; i + needle.size() <= haystack.size(); ++i) {
    bool hit = true;
    for (std::size_t j = 0; j < needle.size(); ++j)
      if (haystack[i + j] != needle[j]) {
        hit = false;
        break;
      }
    if (hit) return true;
  }
  return false;
}

inline std::uint64_t fnv1a(std::string_view s) {
  std::uint64_t h = 0xcbf29ce484222325ull;
  for (char c : s) {
    h ^= static_cast<std::uint8_t>(c);
    h *= 0x100000001b3ull;
  }
  return h;
}

}  // namespace protoobf
