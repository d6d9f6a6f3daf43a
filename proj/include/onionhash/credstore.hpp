#pragma once

#include <sys/types.h>

#include <ctime>
#include <filesystem>
#include <functional>
#include <optional>
#include <shared_mutex>
#include <string>
#include <string_view>
#include <vector>

#include "onionhash/chain.hpp"

namespace onionhash {

inline constexpr std::string_view kStoreHeader = "#onionstore v1";
inline constexpr std::size_t kMaxUsernameLength = 64;

// 1-64 octets of valid UTF-8; no ':', no control characters, no leading or
// trailing space.
bool is_valid_username(std::string_view username);

// `username:$onion$<version>$s1=<b64>,s2=<b64>$<b64 value>`. Legacy "md5"
// records carry no salts and leave the parameter field empty.
// Throws Error{kInvalidRecord}.
std::string serialize_record(const CredentialRecord& record);

// Strict inverse of serialize_record. Throws Error{kMalformedLine} with the
// octet offset, or Error{kUnknownVersion} for a well-formed line whose
// version this build does not know.
CredentialRecord parse_record(std::string_view line);

/// Parsed contents of a store file. Lines with an unknown version are kept
/// verbatim so they survive a rewrite.
struct StoreContents {
  std::vector<CredentialRecord> records;
  std::vector<std::string> opaque_lines;
};

// Throws Error{kMalformedLine} naming the 1-based line number.
StoreContents parse_store(std::string_view text);
std::string serialize_store(const StoreContents& contents);

/// Single-file credential store. Every mutation re-reads the file under an
/// exclusive advisory lock and replaces it with write-to-temp plus rename,
/// so readers see either the old or the new file.
class CredentialStore {
 public:
  struct Options {
    bool create_if_missing = false;
    // Chains used to verify records, looked up by version. The first entry
    // is the default for dummy evaluations and legacy password resets.
    std::vector<ChainSpec> chains = {facebook2014_chain(), sha256_v1_chain(),
                                     md5_legacy_chain()};
    std::function<SaltSet()> salt_source = SaltSet::random;
  };

  explicit CredentialStore(std::filesystem::path path);
  CredentialStore(std::filesystem::path path, Options options);

  CredentialStore(const CredentialStore&) = delete;
  CredentialStore& operator=(const CredentialStore&) = delete;

  const std::filesystem::path& path() const { return path_; }

  // Throws Error{kUnknownVersion}.
  const ChainSpec& chain_for(std::string_view version) const;

  CredentialRecord create_account(std::string_view username, ByteView password,
                                  const ChainSpec& spec, const Pepper& pepper);
  CredentialRecord create_account(std::string_view username, std::string_view password,
                                  const ChainSpec& spec, const Pepper& pepper) {
    return create_account(username, as_bytes(password), spec, pepper);
  }

  // Unknown users are rejected after a full chain evaluation against a
  // dummy record.
  VerificationOutcome authenticate(std::string_view username, ByteView candidate,
                                   const Pepper& pepper);
  VerificationOutcome authenticate(std::string_view username, std::string_view candidate,
                                   const Pepper& pepper) {
    return authenticate(username, as_bytes(candidate), pepper);
  }

  CredentialRecord set_password(std::string_view username, ByteView new_password,
                                const Pepper& pepper);
  CredentialRecord set_password(std::string_view username, std::string_view new_password,
                                const Pepper& pepper) {
    return set_password(username, as_bytes(new_password), pepper);
  }

  // Adds a prebuilt record, e.g. an imported legacy digest.
  void insert(const CredentialRecord& record);

  // Applies `mutate` to the freshly loaded records and persists the result
  // atomically. Usernames must remain unique.
  void transact(const std::function<void(std::vector<CredentialRecord>&)>& mutate);

  std::optional<CredentialRecord> find(std::string_view username);
  std::vector<CredentialRecord> records();
  std::vector<std::string> opaque_lines();

  void reload();

 private:
  struct FileStamp {
    ino_t inode = 0;
    off_t size = -1;
    timespec mtime{};
    bool operator==(const FileStamp& o) const {
      return inode == o.inode && size == o.size && mtime.tv_sec == o.mtime.tv_sec &&
             mtime.tv_nsec == o.mtime.tv_nsec;
    }
  };

  void refresh_if_changed();
  StoreContents load_locked(FileStamp& stamp) const;
  void commit_locked(const StoreContents& contents);
  std::filesystem::path lock_path() const;

  std::filesystem::path path_;
  Options options_;
  mutable std::shared_mutex mutex_;
  StoreContents contents_;
  FileStamp stamp_;
};

}  // namespace onionhash
