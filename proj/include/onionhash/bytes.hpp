#pragma once

#include <array>
#include <cstddef>
#include <cstdint>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace onionhash {

using Bytes = std::vector<std::uint8_t>;
using ByteView = std::span<const std::uint8_t>;

inline ByteView as_bytes(std::string_view s) {
  return {reinterpret_cast<const std::uint8_t*>(s.data()), s.size()};
}

inline Bytes to_bytes(std::string_view s) {
  auto v = as_bytes(s);
  return {v.begin(), v.end()};
}

// Lowercase, zero-padded, no separators.
std::string to_hex(ByteView data);

// Strict: even length, [0-9a-f] only. Throws Error{kMalformedHex}.
Bytes from_hex(std::string_view hex);

// Standard alphabet with '=' padding.
std::string base64_encode(ByteView data);

// Rejects anything that would not re-encode to the same text. Throws
// Error{kMalformedLine} with the offending offset inside `text`.
Bytes base64_decode(std::string_view text);

bool constant_time_equal(ByteView a, ByteView b);

// Cryptographically strong randomness (OpenSSL DRBG).
void fill_random(std::span<std::uint8_t> out);

template <std::size_t N>
std::array<std::uint8_t, N> random_array() {
  std::array<std::uint8_t, N> out{};
  fill_random(out);
  return out;
}

}  // namespace onionhash
