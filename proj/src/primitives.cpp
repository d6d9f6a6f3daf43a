#include "onionhash/primitives.hpp"

#include <openssl/evp.h>
#include <openssl/hmac.h>

#include <memory>
#include <stdexcept>

#include "onionhash/error.hpp"

namespace onionhash {

std::string_view algorithm_name(HashAlgorithm alg) {
  switch (alg) {
    case HashAlgorithm::kMd5: return "md5";
    case HashAlgorithm::kSha1: return "sha1";
    case HashAlgorithm::kSha256: return "sha256";
  }
  return "unknown";
}

Digest::Digest(HashAlgorithm alg, ByteView bytes)
    : alg_(alg), bytes_(bytes.begin(), bytes.end()) {
  if (bytes_.size() != digest_size(alg)) {
    throw Error(Errc::kInvalidParams,
                std::string("digest length does not match ") +
                    std::string(algorithm_name(alg)));
  }
}

namespace {

const EVP_MD* evp_for(HashAlgorithm alg) {
  switch (alg) {
    case HashAlgorithm::kMd5: return EVP_md5();
    case HashAlgorithm::kSha1: return EVP_sha1();
    case HashAlgorithm::kSha256: return EVP_sha256();
  }
  return nullptr;
}

Digest evp_digest(HashAlgorithm alg, ByteView message) {
  unsigned char out[EVP_MAX_MD_SIZE];
  unsigned int len = 0;
  if (EVP_Digest(message.data(), message.size(), out, &len, evp_for(alg),
                 nullptr) != 1) {
    throw std::runtime_error("EVP_Digest failed");
  }
  return Digest(alg, ByteView(out, len));
}

}  // namespace

Digest md5(ByteView message) { return evp_digest(HashAlgorithm::kMd5, message); }
Digest sha1(ByteView message) { return evp_digest(HashAlgorithm::kSha1, message); }
Digest sha256(ByteView message) {
  return evp_digest(HashAlgorithm::kSha256, message);
}

Digest hmac_sha256(ByteView key, ByteView message) {
  unsigned char out[EVP_MAX_MD_SIZE];
  unsigned int len = 0;
  // HMAC() rejects a null key pointer even when the length is zero.
  static const unsigned char kEmpty = 0;
  const unsigned char* key_ptr = key.empty() ? &kEmpty : key.data();
  if (HMAC(EVP_sha256(), key_ptr, static_cast<int>(key.size()), message.data(),
           message.size(), out, &len) == nullptr) {
    throw std::runtime_error("HMAC failed");
  }
  return Digest(HashAlgorithm::kSha256, ByteView(out, len));
}

void validate(const ScryptParams& params) {
  if (params.n <= 1 || (params.n & (params.n - 1)) != 0) {
    throw Error(Errc::kInvalidParams, "scrypt n must be a power of two > 1");
  }
  if (params.r < 1 || params.p < 1) {
    throw Error(Errc::kInvalidParams, "scrypt r and p must be >= 1");
  }
  if (static_cast<std::uint64_t>(params.r) * params.p >= (1ull << 30)) {
    throw Error(Errc::kInvalidParams, "scrypt r * p must be < 2^30");
  }
  if (params.dk_len < 16) {
    throw Error(Errc::kInvalidParams, "scrypt dk_len must be >= 16");
  }
  // RFC 7914: n < 2^(128 * r / 8).
  if (params.r < 4 && params.n >= (1ull << (16 * params.r))) {
    throw Error(Errc::kInvalidParams, "scrypt n too large for r");
  }
}

std::uint64_t scrypt_memory_bytes(const ScryptParams& params) {
  return 128ull * params.r * params.n;
}

Bytes scrypt_kdf(ByteView password, ByteView salt, const ScryptParams& params) {
  validate(params);
  Bytes out(params.dk_len);
  // The default 32 MiB cap would reject p > 1 at n=2^14, r=8.
  std::uint64_t max_mem =
      scrypt_memory_bytes(params) * (params.p + 1) + (1u << 20);
  static const unsigned char kEmpty = 0;
  if (EVP_PBE_scrypt(
          password.empty() ? reinterpret_cast<const char*>(&kEmpty)
                           : reinterpret_cast<const char*>(password.data()),
          password.size(), salt.empty() ? &kEmpty : salt.data(), salt.size(),
          params.n, params.r, params.p, max_mem, out.data(), out.size()) != 1) {
    throw Error(Errc::kInvalidParams, "scrypt evaluation rejected parameters");
  }
  return out;
}

}  // namespace onionhash
