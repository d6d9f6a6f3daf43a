#pragma once

#include <cstddef>
#include <cstdint>
#include <string>
#include <string_view>

#include "onionhash/bytes.hpp"

namespace onionhash {

enum class HashAlgorithm { kMd5, kSha1, kSha256 };

constexpr std::size_t digest_size(HashAlgorithm alg) {
  switch (alg) {
    case HashAlgorithm::kMd5: return 16;
    case HashAlgorithm::kSha1: return 20;
    case HashAlgorithm::kSha256: return 32;
  }
  return 0;
}

// MD5 and SHA-1 exist to model legacy stores. The analyzer keys its
// deprecation findings off this marker.
constexpr bool is_legacy(HashAlgorithm alg) {
  return alg == HashAlgorithm::kMd5 || alg == HashAlgorithm::kSha1;
}

std::string_view algorithm_name(HashAlgorithm alg);

/// Fixed-width hash output tagged with the algorithm that produced it.
class Digest {
 public:
  // Throws Error{kInvalidParams} if the length does not match `alg`.
  Digest(HashAlgorithm alg, ByteView bytes);

  HashAlgorithm algorithm() const { return alg_; }
  ByteView bytes() const& { return {bytes_.data(), bytes_.size()}; }
  // On a temporary, hand back an owning copy instead of a dangling view.
  Bytes bytes() const&& { return bytes_; }
  std::size_t size() const { return bytes_.size(); }
  std::string hex() const { return to_hex(bytes()); }

  friend bool operator==(const Digest&, const Digest&) = default;

 private:
  HashAlgorithm alg_;
  Bytes bytes_;
};

Digest md5(ByteView message);
Digest sha1(ByteView message);
Digest sha256(ByteView message);
Digest hmac_sha256(ByteView key, ByteView message);

inline Digest md5(std::string_view s) { return md5(as_bytes(s)); }
inline Digest sha1(std::string_view s) { return sha1(as_bytes(s)); }
inline Digest sha256(std::string_view s) { return sha256(as_bytes(s)); }

struct ScryptParams {
  std::uint64_t n = 1u << 14;
  std::uint32_t r = 8;
  std::uint32_t p = 1;
  std::size_t dk_len = 64;

  friend bool operator==(const ScryptParams&, const ScryptParams&) = default;
};

// Throws Error{kInvalidParams}: n must be a power of two > 1, r and p >= 1,
// r * p < 2^30, dk_len >= 16.
void validate(const ScryptParams& params);

// Memory use of one evaluation in octets (128 * r * n).
std::uint64_t scrypt_memory_bytes(const ScryptParams& params);

// Parameters are validated before any work is done.
Bytes scrypt_kdf(ByteView password, ByteView salt, const ScryptParams& params);

}  // namespace onionhash
