#include "onionhash/chain.hpp"

#include <algorithm>
#include <cctype>

#include "onionhash/error.hpp"

namespace onionhash {

std::string_view stage_name(StageKind kind) {
  switch (kind) {
    case StageKind::kMd5Plain: return "md5";
    case StageKind::kSha1Salted: return "sha1";
    case StageKind::kHmacSha256Peppered: return "hmac_sha256";
    case StageKind::kScrypt: return "scrypt";
    case StageKind::kSha256Plain: return "sha256";
  }
  return "unknown";
}

HashAlgorithm stage_algorithm(StageKind kind) {
  switch (kind) {
    case StageKind::kMd5Plain: return HashAlgorithm::kMd5;
    case StageKind::kSha1Salted: return HashAlgorithm::kSha1;
    default: return HashAlgorithm::kSha256;
  }
}

std::size_t stage_output_bits(const StageSpec& stage) {
  if (stage.kind == StageKind::kScrypt) {
    return stage.scrypt ? 8 * stage.scrypt->dk_len : 0;
  }
  return 8 * digest_size(stage_algorithm(stage.kind));
}

ChainSpec make_chain(std::string version, std::vector<StageSpec> stages) {
  ChainSpec spec{std::move(version), std::move(stages), 0};
  if (!spec.stages.empty()) spec.output_width_bits = stage_output_bits(spec.stages.back());
  return spec;
}

void validate(const ChainSpec& spec) {
  auto fail = [](const std::string& why) { throw Error(Errc::kInvalidSpec, why); };
  if (spec.version.empty() ||
      spec.version.find_first_of("$:, \t\r\n") != std::string::npos) {
    fail("chain version must be a nonempty token without '$', ':', ',' or whitespace");
  }
  if (spec.stages.empty()) fail("chain has no stages");
  if (spec.stages.front().input_encoding != InputEncoding::kRawBytes) {
    fail("first stage must consume the raw password");
  }
  for (const auto& stage : spec.stages) {
    bool is_scrypt = stage.kind == StageKind::kScrypt;
    if (is_scrypt != stage.scrypt.has_value()) {
      fail("scrypt parameters must be present exactly on scrypt stages");
    }
    switch (stage.kind) {
      case StageKind::kMd5Plain:
      case StageKind::kHmacSha256Peppered:
        if (stage.salt_role != SaltRole::kNone) fail("unsalted stage carries a salt role");
        break;
      case StageKind::kSha1Salted:
      case StageKind::kScrypt:
        if (stage.salt_role == SaltRole::kNone) fail("salted stage has no salt role");
        break;
      case StageKind::kSha256Plain:
        break;
    }
    if (is_scrypt) {
      try {
        validate(*stage.scrypt);
      } catch (const Error& e) {
        fail(e.what());
      }
    }
  }
  if (spec.output_width_bits != stage_output_bits(spec.stages.back())) {
    fail("output_width_bits does not match the final stage");
  }
}

ChainSpec facebook2014_chain() {
  return make_chain(
      "fb2014",
      {
          {StageKind::kMd5Plain, InputEncoding::kRawBytes, SaltRole::kNone, std::nullopt},
          {StageKind::kSha1Salted, InputEncoding::kLowerHex, SaltRole::kSha1Salt, std::nullopt},
          {StageKind::kHmacSha256Peppered, InputEncoding::kLowerHex, SaltRole::kNone,
           std::nullopt},
          {StageKind::kScrypt, InputEncoding::kLowerHex, SaltRole::kScryptSalt,
           ScryptParams{1u << 14, 8, 1, 64}},
          {StageKind::kSha256Plain, InputEncoding::kLowerHex, SaltRole::kNone, std::nullopt},
      });
}

ChainSpec sha256_v1_chain() {
  return make_chain("sha256-v1", {{StageKind::kSha256Plain, InputEncoding::kRawBytes,
                                   SaltRole::kScryptSalt, std::nullopt}});
}

ChainSpec md5_legacy_chain() {
  return make_chain("md5", {{StageKind::kMd5Plain, InputEncoding::kRawBytes,
                             SaltRole::kNone, std::nullopt}});
}

bool is_known_version(std::string_view version) {
  return version == "fb2014" || version == "sha256-v1" || version == "md5";
}

ChainSpec builtin_chain(std::string_view version) {
  if (version == "fb2014") return facebook2014_chain();
  if (version == "sha256-v1") return sha256_v1_chain();
  if (version == "md5") return md5_legacy_chain();
  throw Error(Errc::kUnknownChain, "unknown chain version: " + std::string(version));
}

SaltSet SaltSet::random() {
  SaltSet s;
  fill_random(s.sha1_salt);
  fill_random(s.scrypt_salt);
  return s;
}

Pepper Pepper::from_hex(std::string_view hex) {
  if (hex.size() != 2 * kPepperSize) {
    throw Error(Errc::kMalformedHex, "pepper must be 64 hex characters");
  }
  std::string lowered(hex);
  std::transform(lowered.begin(), lowered.end(), lowered.begin(),
                 [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
  Bytes raw = onionhash::from_hex(lowered);
  std::array<std::uint8_t, kPepperSize> secret{};
  std::copy(raw.begin(), raw.end(), secret.begin());
  return Pepper(secret);
}

Pepper Pepper::random() { return Pepper(random_array<kPepperSize>()); }

namespace {

ByteView salt_for(SaltRole role, const SaltSet& salts) {
  switch (role) {
    case SaltRole::kSha1Salt: return salts.sha1_salt;
    case SaltRole::kScryptSalt: return salts.scrypt_salt;
    case SaltRole::kNone: break;
  }
  return {};
}

Bytes concat(ByteView a, ByteView b) {
  Bytes out;
  out.reserve(a.size() + b.size());
  out.insert(out.end(), a.begin(), a.end());
  out.insert(out.end(), b.begin(), b.end());
  return out;
}

Bytes digest_bytes(const Digest& d) { return {d.bytes().begin(), d.bytes().end()}; }

Bytes run_stage(const StageSpec& stage, ByteView input, const SaltSet& salts,
                const Pepper& pepper) {
  ByteView salt = salt_for(stage.salt_role, salts);
  switch (stage.kind) {
    case StageKind::kMd5Plain:
      return digest_bytes(md5(input));
    case StageKind::kSha1Salted:
      return digest_bytes(sha1(concat(salt, input)));
    case StageKind::kHmacSha256Peppered:
      return digest_bytes(hmac_sha256(pepper.bytes(), input));
    case StageKind::kScrypt:
      return scrypt_kdf(input, salt, *stage.scrypt);
    case StageKind::kSha256Plain:
      return digest_bytes(sha256(salt.empty() ? Bytes(input.begin(), input.end())
                                              : concat(salt, input)));
  }
  return {};
}

void run_from(const ChainSpec& spec, std::size_t first_stage, StageTrace& trace,
              const SaltSet& salts, const Pepper& pepper) {
  for (std::size_t i = first_stage; i < spec.stages.size(); ++i) {
    const auto& stage = spec.stages[i];
    const Bytes& prev = trace.stages.back().bytes;
    Bytes out;
    if (stage.input_encoding == InputEncoding::kLowerHex) {
      out = run_stage(stage, as_bytes(to_hex(prev)), salts, pepper);
    } else {
      out = run_stage(stage, prev, salts, pepper);
    }
    trace.stages.push_back({stage.kind, std::move(out)});
  }
}

}  // namespace

StageTrace evaluate_chain(const ChainSpec& spec, ByteView password,
                          const SaltSet& salts, const Pepper& pepper) {
  validate(spec);
  if (password.size() > kMaxPasswordLength) {
    throw Error(Errc::kPasswordTooLong, "password exceeds 4096 octets");
  }
  StageTrace trace;
  trace.stages.reserve(spec.stages.size());
  trace.stages.push_back(
      {spec.stages.front().kind, run_stage(spec.stages.front(), password, salts, pepper)});
  run_from(spec, 1, trace, salts, pepper);
  return trace;
}

StageTrace resume_chain(const ChainSpec& spec, std::size_t first_stage,
                        StageOutput prior, const SaltSet& salts,
                        const Pepper& pepper) {
  validate(spec);
  if (first_stage == 0 || first_stage > spec.stages.size()) {
    throw Error(Errc::kIncompatibleSpec, "resume point outside the chain");
  }
  const auto& expected = spec.stages[first_stage - 1];
  if (prior.kind != expected.kind || prior.bytes.size() * 8 != stage_output_bits(expected)) {
    throw Error(Errc::kIncompatibleSpec, "prior output does not match the preceding stage");
  }
  StageTrace trace;
  trace.stages.push_back(std::move(prior));
  run_from(spec, first_stage, trace, salts, pepper);
  return trace;
}

VerificationOutcome verify(const ChainSpec& spec, ByteView candidate,
                           const CredentialRecord& record, const Pepper& pepper) {
  if (record.version != spec.version) {
    throw Error(Errc::kVersionMismatch,
                "record version " + record.version + " does not match chain " + spec.version);
  }
  StageTrace trace = evaluate_chain(spec, candidate, record.salts, pepper);
  return constant_time_equal(trace.value(), record.stored_value)
             ? VerificationOutcome::kAccept
             : VerificationOutcome::kReject;
}

std::vector<std::pair<std::string, std::string>> stage_trace_hex(const StageTrace& trace) {
  std::vector<std::pair<std::string, std::string>> out;
  out.reserve(trace.stages.size());
  for (const auto& s : trace.stages) {
    out.emplace_back(std::string(stage_name(s.kind)), to_hex(s.bytes));
  }
  return out;
}

}  // namespace onionhash
