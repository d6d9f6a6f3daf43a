#pragma once

#include <array>
#include <cstddef>
#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "onionhash/bytes.hpp"
#include "onionhash/primitives.hpp"

namespace onionhash {

inline constexpr std::size_t kMaxPasswordLength = 4096;
inline constexpr std::size_t kSha1SaltSize = 20;
inline constexpr std::size_t kScryptSaltSize = 32;
inline constexpr std::size_t kPepperSize = 32;

enum class StageKind { kMd5Plain, kSha1Salted, kHmacSha256Peppered, kScrypt, kSha256Plain };

// How the previous stage's output is fed into a stage. The first stage
// always sees the password octets.
enum class InputEncoding { kRawBytes, kLowerHex };

// Which per-user salt a stage prefixes (or, for scrypt, uses as its salt).
enum class SaltRole { kNone, kSha1Salt, kScryptSalt };

struct StageSpec {
  StageKind kind = StageKind::kSha256Plain;
  InputEncoding input_encoding = InputEncoding::kLowerHex;
  SaltRole salt_role = SaltRole::kNone;
  std::optional<ScryptParams> scrypt;

  friend bool operator==(const StageSpec&, const StageSpec&) = default;
};

std::string_view stage_name(StageKind kind);
std::size_t stage_output_bits(const StageSpec& stage);

// Hash algorithm a stage is built on, used for deprecation analysis.
// Scrypt reports SHA-256 (its PBKDF2 core).
HashAlgorithm stage_algorithm(StageKind kind);

struct ChainSpec {
  std::string version;
  std::vector<StageSpec> stages;
  std::size_t output_width_bits = 0;

  friend bool operator==(const ChainSpec&, const ChainSpec&) = default;
};

// Builds a spec with output_width_bits derived from the final stage.
ChainSpec make_chain(std::string version, std::vector<StageSpec> stages);

// Throws Error{kInvalidSpec}.
void validate(const ChainSpec& spec);

/// md5 -> salted sha1 -> peppered hmac-sha256 -> scrypt(2^14, 8, 1, 64) -> sha256.
ChainSpec facebook2014_chain();

/// Single salted SHA-256 over the raw password; the non-vulnerable control.
ChainSpec sha256_v1_chain();

/// Unsalted MD5 hex as stored by pre-upgrade systems.
ChainSpec md5_legacy_chain();

// Versions parse_record accepts: "fb2014", "sha256-v1", "md5".
bool is_known_version(std::string_view version);

// Throws Error{kUnknownChain}.
ChainSpec builtin_chain(std::string_view version);

struct SaltSet {
  std::array<std::uint8_t, kSha1SaltSize> sha1_salt{};
  std::array<std::uint8_t, kScryptSaltSize> scrypt_salt{};

  static SaltSet random();

  friend bool operator==(const SaltSet&, const SaltSet&) = default;
};

/// Service-wide secret key. Lives only in process memory.
class Pepper {
 public:
  Pepper() = default;
  explicit Pepper(const std::array<std::uint8_t, kPepperSize>& secret) : secret_(secret) {}

  // Exactly 64 lowercase or uppercase hex characters.
  static Pepper from_hex(std::string_view hex);
  static Pepper random();

  ByteView bytes() const { return {secret_.data(), secret_.size()}; }

  friend bool operator==(const Pepper&, const Pepper&) = default;

 private:
  std::array<std::uint8_t, kPepperSize> secret_{};
};

struct StageOutput {
  StageKind kind;
  Bytes bytes;

  friend bool operator==(const StageOutput&, const StageOutput&) = default;
};

/// Intermediate outputs of one evaluation, one entry per stage in order.
/// For fb2014 these are m, s1, s2, s3 and value.
struct StageTrace {
  std::vector<StageOutput> stages;

  const Bytes& value() const { return stages.back().bytes; }

  friend bool operator==(const StageTrace&, const StageTrace&) = default;
};

struct CredentialRecord {
  std::string username;
  std::string version;
  SaltSet salts;
  Bytes stored_value;

  friend bool operator==(const CredentialRecord&, const CredentialRecord&) = default;
};

enum class VerificationOutcome { kAccept, kReject };

StageTrace evaluate_chain(const ChainSpec& spec, ByteView password,
                          const SaltSet& salts, const Pepper& pepper);

inline StageTrace evaluate_chain(const ChainSpec& spec, std::string_view password,
                                 const SaltSet& salts, const Pepper& pepper) {
  return evaluate_chain(spec, as_bytes(password), salts, pepper);
}

// Runs stages [first_stage, end) taking `prior` as the output of stage
// first_stage - 1. The returned trace starts with `prior`.
StageTrace resume_chain(const ChainSpec& spec, std::size_t first_stage,
                        StageOutput prior, const SaltSet& salts,
                        const Pepper& pepper);

// Throws Error{kVersionMismatch} when record.version != spec.version.
VerificationOutcome verify(const ChainSpec& spec, ByteView candidate,
                           const CredentialRecord& record, const Pepper& pepper);

inline VerificationOutcome verify(const ChainSpec& spec, std::string_view candidate,
                                  const CredentialRecord& record,
                                  const Pepper& pepper) {
  return verify(spec, as_bytes(candidate), record, pepper);
}

std::vector<std::pair<std::string, std::string>> stage_trace_hex(const StageTrace& trace);

}  // namespace onionhash
