#include "onionhash/migration.hpp"

#include "onionhash/error.hpp"

namespace onionhash {

namespace {

bool starts_with_md5(const ChainSpec& spec) {
  return !spec.stages.empty() && spec.stages.front().kind == StageKind::kMd5Plain &&
         spec.stages.front().input_encoding == InputEncoding::kRawBytes;
}

Bytes parse_md5_hex(std::string_view hex) {
  if (hex.size() != 2 * digest_size(HashAlgorithm::kMd5)) {
    throw Error(Errc::kMalformedHex, "legacy MD5 value must be 32 hex characters");
  }
  return from_hex(hex);
}

}  // namespace

LegacyRecord parse_legacy_line(std::string_view line) {
  auto colon = line.find(':');
  if (colon == std::string_view::npos) {
    throw Error(Errc::kMalformedLine, "expected username:md5hex", line.size());
  }
  LegacyRecord record{std::string(line.substr(0, colon)), LegacyKind::kMd5Hex,
                      std::string(line.substr(colon + 1))};
  if (!is_valid_username(record.username)) {
    throw Error(Errc::kMalformedLine, "invalid username", 0);
  }
  parse_md5_hex(record.legacy_value);
  return record;
}

CredentialRecord wrap_legacy(const LegacyRecord& legacy, const SaltSet& salts,
                             const Pepper& pepper, const ChainSpec& spec) {
  Bytes m = parse_md5_hex(legacy.legacy_value);
  validate(spec);
  if (!starts_with_md5(spec)) {
    throw Error(Errc::kIncompatibleSpec, "target chain does not start with MD5");
  }
  StageTrace trace = resume_chain(spec, 1, {StageKind::kMd5Plain, std::move(m)}, salts, pepper);
  return {legacy.username, spec.version, salts, trace.value()};
}

MigrationReport upgrade_store(CredentialStore& store, const ChainSpec& spec_from,
                              const ChainSpec& spec_to, const Pepper& pepper,
                              const std::function<SaltSet()>& salt_source) {
  validate(spec_from);
  validate(spec_to);
  if (spec_from.stages != md5_legacy_chain().stages || !starts_with_md5(spec_to)) {
    throw Error(Errc::kIncompatibleSpec,
                "only unsalted MD5 records can be wrapped into an MD5-first chain");
  }
  if (!store.opaque_lines().empty()) {
    throw Error(Errc::kIncompatibleVersions, "store holds records of unknown versions");
  }
  MigrationReport report;
  store.transact([&](std::vector<CredentialRecord>& records) {
    report = {};
    for (const auto& r : records) {
      if (r.version != spec_from.version && r.version != spec_to.version) {
        throw Error(Errc::kIncompatibleVersions,
                    "record " + r.username + " has version " + r.version);
      }
    }
    for (auto& r : records) {
      if (r.version == spec_to.version) {
        ++report.skipped;
        continue;
      }
      try {
        LegacyRecord legacy{r.username, LegacyKind::kMd5Hex, to_hex(r.stored_value)};
        r = wrap_legacy(legacy, salt_source(), pepper, spec_to);
        ++report.migrated;
      } catch (const Error&) {
        ++report.failed;
      }
    }
  });
  return report;
}

}  // namespace onionhash
