#pragma once

#include <cstddef>
#include <string>
#include <string_view>

#include "onionhash/chain.hpp"
#include "onionhash/credstore.hpp"

namespace onionhash {

enum class LegacyKind { kMd5Hex };

struct LegacyRecord {
  std::string username;
  LegacyKind legacy_kind = LegacyKind::kMd5Hex;
  std::string legacy_value;  // 32 lowercase hex characters
};

// One line of the legacy import format: `username:md5hex`. Throws
// Error{kMalformedLine} or Error{kMalformedHex}.
LegacyRecord parse_legacy_line(std::string_view line);

// Enters `spec` at its second stage with m taken from the legacy digest, so
// the result equals a full evaluation of any password whose MD5 matches.
// Throws Error{kMalformedHex} or Error{kIncompatibleSpec}.
CredentialRecord wrap_legacy(const LegacyRecord& legacy, const SaltSet& salts,
                             const Pepper& pepper, const ChainSpec& spec);

struct MigrationReport {
  std::size_t migrated = 0;
  std::size_t skipped = 0;
  std::size_t failed = 0;

  friend bool operator==(const MigrationReport&, const MigrationReport&) = default;
};

// Rewrites every `spec_from` record as a wrapped `spec_to` record with fresh
// salts, in one atomic store rewrite. Records already on `spec_to` are
// skipped; a record that fails to wrap is left untouched. Only the unsalted
// MD5 -> MD5-first chain upgrade is supported.
MigrationReport upgrade_store(CredentialStore& store, const ChainSpec& spec_from,
                              const ChainSpec& spec_to, const Pepper& pepper,
                              const std::function<SaltSet()>& salt_source = SaltSet::random);

}  // namespace onionhash
