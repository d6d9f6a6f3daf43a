#pragma once

#include <cstddef>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>

namespace onionhash {

enum class Errc {
  kInvalidParams,
  kPasswordTooLong,
  kInvalidSpec,
  kVersionMismatch,
  kMalformedHex,
  kIncompatibleSpec,
  kIncompatibleVersions,
  kIoFailure,
  kInvalidRecord,
  kMalformedLine,
  kUnknownVersion,
  kDuplicateUsername,
  kUnknownUser,
  kIdenticalInputs,
  kOutOfRange,
  kUnknownChain,
  kBindFailure,
  kNetworkFailure,
  kPropagationFailure,
};

std::string_view errc_name(Errc code);

/// Every library failure is reported as an Error carrying a stable code.
/// Parse errors additionally carry the octet offset where parsing stopped.
class Error : public std::runtime_error {
 public:
  Error(Errc code, const std::string& what,
        std::optional<std::size_t> position = std::nullopt)
      : std::runtime_error(what), code_(code), position_(position) {}

  Errc code() const noexcept { return code_; }
  std::optional<std::size_t> position() const noexcept { return position_; }

 private:
  Errc code_;
  std::optional<std::size_t> position_;
};

}  // namespace onionhash
