#include "onionhash/bytes.hpp"

#include <openssl/crypto.h>
#include <openssl/evp.h>
#include <openssl/rand.h>

#include "onionhash/error.hpp"

namespace onionhash {

std::string_view errc_name(Errc code) {
  switch (code) {
    case Errc::kInvalidParams: return "invalid-params";
    case Errc::kPasswordTooLong: return "password-too-long";
    case Errc::kInvalidSpec: return "invalid-spec";
    case Errc::kVersionMismatch: return "version-mismatch";
    case Errc::kMalformedHex: return "malformed-hex";
    case Errc::kIncompatibleSpec: return "incompatible-spec";
    case Errc::kIncompatibleVersions: return "incompatible-versions";
    case Errc::kIoFailure: return "io-failure";
    case Errc::kInvalidRecord: return "invalid-record";
    case Errc::kMalformedLine: return "malformed-line";
    case Errc::kUnknownVersion: return "unknown-version";
    case Errc::kDuplicateUsername: return "duplicate-username";
    case Errc::kUnknownUser: return "unknown-user";
    case Errc::kIdenticalInputs: return "identical-inputs";
    case Errc::kOutOfRange: return "out-of-range";
    case Errc::kUnknownChain: return "unknown-chain";
    case Errc::kBindFailure: return "bind-failure";
    case Errc::kNetworkFailure: return "network-failure";
    case Errc::kPropagationFailure: return "propagation-failure";
  }
  return "unknown";
}

std::string to_hex(ByteView data) {
  static constexpr char kDigits[] = "0123456789abcdef";
  std::string out;
  out.reserve(data.size() * 2);
  for (auto b : data) {
    out.push_back(kDigits[b >> 4]);
    out.push_back(kDigits[b & 0x0f]);
  }
  return out;
}

namespace {

int hex_value(char c) {
  if (c >= '0' && c <= '9') return c - '0';
  if (c >= 'a' && c <= 'f') return c - 'a' + 10;
  return -1;
}

}  // namespace

Bytes from_hex(std::string_view hex) {
  if (hex.size() % 2 != 0) {
    throw Error(Errc::kMalformedHex, "hex string has odd length", hex.size());
  }
  Bytes out(hex.size() / 2);
  for (std::size_t i = 0; i < hex.size(); i += 2) {
    int hi = hex_value(hex[i]);
    int lo = hex_value(hex[i + 1]);
    if (hi < 0 || lo < 0) {
      throw Error(Errc::kMalformedHex, "invalid hex digit", hi < 0 ? i : i + 1);
    }
    out[i / 2] = static_cast<std::uint8_t>((hi << 4) | lo);
  }
  return out;
}

std::string base64_encode(ByteView data) {
  std::string out(4 * ((data.size() + 2) / 3), '\0');
  int n = EVP_EncodeBlock(reinterpret_cast<unsigned char*>(out.data()),
                          data.data(), static_cast<int>(data.size()));
  out.resize(static_cast<std::size_t>(n));
  return out;
}

Bytes base64_decode(std::string_view text) {
  auto is_alpha = [](char c) {
    return (c >= 'A' && c <= 'Z') || (c >= 'a' && c <= 'z') ||
           (c >= '0' && c <= '9') || c == '+' || c == '/';
  };
  if (text.size() % 4 != 0) {
    throw Error(Errc::kMalformedLine, "base64 length is not a multiple of 4",
                text.size());
  }
  std::size_t padding = 0;
  for (std::size_t i = 0; i < text.size(); ++i) {
    char c = text[i];
    if (c == '=' && i + 2 >= text.size()) {
      ++padding;
      continue;
    }
    if (!is_alpha(c) || padding > 0) {
      throw Error(Errc::kMalformedLine, "invalid base64 character", i);
    }
  }
  Bytes out(text.size() / 4 * 3);
  int n = EVP_DecodeBlock(out.data(),
                          reinterpret_cast<const unsigned char*>(text.data()),
                          static_cast<int>(text.size()));
  if (n < 0) throw Error(Errc::kMalformedLine, "invalid base64", 0);
  out.resize(static_cast<std::size_t>(n) - padding);
  if (base64_encode(out) != text) {
    throw Error(Errc::kMalformedLine, "non-canonical base64", text.size());
  }
  return out;
}

bool constant_time_equal(ByteView a, ByteView b) {
  if (a.size() != b.size()) return false;
  return CRYPTO_memcmp(a.data(), b.data(), a.size()) == 0;
}

void fill_random(std::span<std::uint8_t> out) {
  if (out.empty()) return;
  if (RAND_bytes(out.data(), static_cast<int>(out.size())) != 1) {
    throw std::runtime_error("RAND_bytes failed");
  }
}

}  // namespace onionhash
