#include "onionhash/credstore.hpp"

#include <fcntl.h>
#include <sys/file.h>
#include <sys/stat.h>
#include <unistd.h>

#include <atomic>
#include <cerrno>
#include <cstring>
#include <mutex>
#include <unordered_set>

#include "onionhash/error.hpp"

namespace onionhash {

namespace {

constexpr std::string_view kTag = "$onion$";

bool is_valid_utf8(std::string_view s) {
  std::size_t i = 0;
  while (i < s.size()) {
    auto c = static_cast<unsigned char>(s[i]);
    std::size_t extra = 0;
    std::uint32_t cp = 0;
    if (c < 0x80) {
      ++i;
      continue;
    } else if ((c & 0xe0) == 0xc0) {
      extra = 1;
      cp = c & 0x1f;
    } else if ((c & 0xf0) == 0xe0) {
      extra = 2;
      cp = c & 0x0f;
    } else if ((c & 0xf8) == 0xf0) {
      extra = 3;
      cp = c & 0x07;
    } else {
      return false;
    }
    if (i + extra >= s.size()) return false;
    for (std::size_t k = 1; k <= extra; ++k) {
      auto cc = static_cast<unsigned char>(s[i + k]);
      if ((cc & 0xc0) != 0x80) return false;
      cp = (cp << 6) | (cc & 0x3f);
    }
    static constexpr std::uint32_t kMin[] = {0, 0x80, 0x800, 0x10000};
    if (cp < kMin[extra] || cp > 0x10ffff || (cp >= 0xd800 && cp <= 0xdfff)) return false;
    i += extra + 1;
  }
  return true;
}

std::size_t value_octets(std::string_view version) {
  return version == "md5" ? 16 : 32;
}

[[noreturn]] void malformed(const std::string& why, std::size_t pos) {
  throw Error(Errc::kMalformedLine, why + " at offset " + std::to_string(pos), pos);
}

Bytes decode_field(std::string_view text, std::size_t offset, std::size_t expected,
                   const char* what) {
  Bytes out;
  try {
    out = base64_decode(text);
  } catch (const Error& e) {
    malformed(std::string(what) + ": " + e.what(), offset + e.position().value_or(0));
  }
  if (out.size() != expected) {
    malformed(std::string(what) + " has wrong length", offset);
  }
  return out;
}

}  // namespace

bool is_valid_username(std::string_view username) {
  if (username.empty() || username.size() > kMaxUsernameLength) return false;
  if (username.front() == ' ' || username.back() == ' ') return false;
  for (char c : username) {
    auto u = static_cast<unsigned char>(c);
    if (c == ':' || u < 0x20 || u == 0x7f) return false;
  }
  return is_valid_utf8(username);
}

std::string serialize_record(const CredentialRecord& record) {
  if (!is_valid_username(record.username)) {
    throw Error(Errc::kInvalidRecord, "invalid username");
  }
  if (!is_known_version(record.version)) {
    throw Error(Errc::kInvalidRecord, "unknown chain version " + record.version);
  }
  if (record.stored_value.size() != value_octets(record.version)) {
    throw Error(Errc::kInvalidRecord, "stored value width does not match chain");
  }
  std::string line = record.username;
  line += ':';
  line += kTag;
  line += record.version;
  line += '$';
  if (record.version != "md5") {
    line += "s1=" + base64_encode(record.salts.sha1_salt);
    line += ",s2=" + base64_encode(record.salts.scrypt_salt);
  }
  line += '$';
  line += base64_encode(record.stored_value);
  return line;
}

CredentialRecord parse_record(std::string_view line) {
  auto colon = line.find(':');
  if (colon == std::string_view::npos) malformed("missing ':' separator", line.size());
  CredentialRecord record;
  record.username = std::string(line.substr(0, colon));
  if (!is_valid_username(record.username)) malformed("invalid username", 0);

  std::size_t pos = colon + 1;
  if (line.substr(pos, kTag.size()) != kTag) malformed("missing $onion$ tag", pos);
  pos += kTag.size();

  auto version_end = line.find('$', pos);
  if (version_end == std::string_view::npos) malformed("missing parameter field", line.size());
  record.version = std::string(line.substr(pos, version_end - pos));
  if (record.version.empty() ||
      record.version.find_first_of(":, \t\r\n") != std::string::npos) {
    malformed("invalid version", pos);
  }

  std::size_t params_pos = version_end + 1;
  auto params_end = line.find('$', params_pos);
  if (params_end == std::string_view::npos) malformed("missing value field", line.size());
  std::string_view params = line.substr(params_pos, params_end - params_pos);
  std::size_t value_pos = params_end + 1;
  std::string_view value = line.substr(value_pos);
  if (auto extra = value.find('$'); extra != std::string_view::npos) {
    malformed("unexpected '$'", value_pos + extra);
  }

  if (!is_known_version(record.version)) {
    throw Error(Errc::kUnknownVersion, "unknown chain version " + record.version,
                colon + 1 + kTag.size());
  }

  if (record.version == "md5") {
    if (!params.empty()) malformed("md5 records take no parameters", params_pos);
  } else {
    constexpr std::string_view kS1 = "s1=";
    constexpr std::string_view kS2 = ",s2=";
    if (params.substr(0, kS1.size()) != kS1) malformed("expected s1=", params_pos);
    auto sep = params.find(kS2);
    if (sep == std::string_view::npos) malformed("expected ,s2=", params_pos + params.size());
    std::size_t s1_pos = kS1.size();
    auto s1 = decode_field(params.substr(s1_pos, sep - s1_pos), params_pos + s1_pos,
                           kSha1SaltSize, "s1 salt");
    std::size_t s2_pos = sep + kS2.size();
    auto s2 = decode_field(params.substr(s2_pos), params_pos + s2_pos, kScryptSaltSize,
                           "s2 salt");
    std::copy(s1.begin(), s1.end(), record.salts.sha1_salt.begin());
    std::copy(s2.begin(), s2.end(), record.salts.scrypt_salt.begin());
  }
  record.stored_value =
      decode_field(value, value_pos, value_octets(record.version), "stored value");
  return record;
}

StoreContents parse_store(std::string_view text) {
  StoreContents contents;
  std::size_t line_no = 0;
  std::size_t pos = 0;
  std::unordered_set<std::string> seen;
  while (pos < text.size()) {
    auto end = text.find('\n', pos);
    if (end == std::string_view::npos) {
      malformed("line " + std::to_string(line_no + 1) + " lacks a trailing newline", pos);
    }
    std::string_view line = text.substr(pos, end - pos);
    ++line_no;
    if (line_no == 1) {
      if (line != kStoreHeader) malformed("line 1: missing #onionstore v1 header", pos);
    } else {
      std::string username;
      try {
        auto record = parse_record(line);
        username = record.username;
        contents.records.push_back(std::move(record));
      } catch (const Error& e) {
        if (e.code() != Errc::kUnknownVersion) {
          throw Error(Errc::kMalformedLine,
                      "line " + std::to_string(line_no) + ": " + e.what(),
                      pos + e.position().value_or(0));
        }
        username = std::string(line.substr(0, line.find(':')));
        contents.opaque_lines.emplace_back(line);
      }
      if (!seen.insert(username).second) {
        malformed("line " + std::to_string(line_no) + ": duplicate username", pos);
      }
    }
    pos = end + 1;
  }
  if (line_no == 0) malformed("empty store file", 0);
  return contents;
}

std::string serialize_store(const StoreContents& contents) {
  std::string out(kStoreHeader);
  out += '\n';
  for (const auto& r : contents.records) {
    out += serialize_record(r);
    out += '\n';
  }
  for (const auto& l : contents.opaque_lines) {
    out += l;
    out += '\n';
  }
  return out;
}

namespace {

[[noreturn]] void io_failure(const std::string& what) {
  throw Error(Errc::kIoFailure, what + ": " + std::strerror(errno));
}

class FileLock {
 public:
  FileLock(const std::filesystem::path& path, bool exclusive) {
    fd_ = ::open(path.c_str(), O_RDWR | O_CREAT | O_CLOEXEC, 0600);
    if (fd_ < 0) io_failure("cannot open lock file " + path.string());
    while (::flock(fd_, exclusive ? LOCK_EX : LOCK_SH) != 0) {
      if (errno != EINTR) {
        ::close(fd_);
        io_failure("cannot lock " + path.string());
      }
    }
  }
  ~FileLock() {
    ::flock(fd_, LOCK_UN);
    ::close(fd_);
  }
  FileLock(const FileLock&) = delete;
  FileLock& operator=(const FileLock&) = delete;

 private:
  int fd_ = -1;
};

class Fd {
 public:
  explicit Fd(int fd) : fd_(fd) {}
  ~Fd() {
    if (fd_ >= 0) ::close(fd_);
  }
  Fd(const Fd&) = delete;
  Fd& operator=(const Fd&) = delete;
  int get() const { return fd_; }

 private:
  int fd_;
};

void write_all(int fd, std::string_view data, const std::string& what) {
  while (!data.empty()) {
    ssize_t n = ::write(fd, data.data(), data.size());
    if (n < 0) {
      if (errno == EINTR) continue;
      io_failure("write to " + what);
    }
    data.remove_prefix(static_cast<std::size_t>(n));
  }
}

std::atomic<unsigned> temp_counter{0};

}  // namespace

CredentialStore::CredentialStore(std::filesystem::path path)
    : CredentialStore(std::move(path), Options{}) {}

CredentialStore::CredentialStore(std::filesystem::path path, Options options)
    : path_(std::move(path)), options_(std::move(options)) {
  if (options_.chains.empty()) throw Error(Errc::kInvalidSpec, "store has no chains");
  for (const auto& c : options_.chains) validate(c);
  FileLock lock(lock_path(), options_.create_if_missing);
  if (options_.create_if_missing && !std::filesystem::exists(path_)) {
    commit_locked(StoreContents{});
    return;
  }
  contents_ = load_locked(stamp_);
}

std::filesystem::path CredentialStore::lock_path() const {
  auto p = path_;
  p += ".lock";
  return p;
}

const ChainSpec& CredentialStore::chain_for(std::string_view version) const {
  for (const auto& c : options_.chains) {
    if (c.version == version) return c;
  }
  throw Error(Errc::kUnknownVersion, "no chain registered for version " + std::string(version));
}

StoreContents CredentialStore::load_locked(FileStamp& stamp) const {
  Fd fd(::open(path_.c_str(), O_RDONLY | O_CLOEXEC));
  if (fd.get() < 0) io_failure("cannot open store " + path_.string());
  struct stat st {};
  if (::fstat(fd.get(), &st) != 0) io_failure("cannot stat store " + path_.string());
  std::string text(static_cast<std::size_t>(st.st_size), '\0');
  std::size_t got = 0;
  while (got < text.size()) {
    ssize_t n = ::read(fd.get(), text.data() + got, text.size() - got);
    if (n < 0) {
      if (errno == EINTR) continue;
      io_failure("cannot read store " + path_.string());
    }
    if (n == 0) break;
    got += static_cast<std::size_t>(n);
  }
  text.resize(got);
  stamp = FileStamp{st.st_ino, st.st_size, st.st_mtim};
  return parse_store(text);
}

void CredentialStore::commit_locked(const StoreContents& contents) {
  std::string text = serialize_store(contents);
  auto tmp = path_;
  tmp += ".tmp." + std::to_string(::getpid()) + "." + std::to_string(temp_counter++);
  {
    Fd fd(::open(tmp.c_str(), O_WRONLY | O_CREAT | O_EXCL | O_CLOEXEC, 0600));
    if (fd.get() < 0) io_failure("cannot create " + tmp.string());
    try {
      write_all(fd.get(), text, tmp.string());
      if (::fsync(fd.get()) != 0) io_failure("fsync " + tmp.string());
    } catch (...) {
      ::unlink(tmp.c_str());
      throw;
    }
  }
  if (::rename(tmp.c_str(), path_.c_str()) != 0) {
    int saved = errno;
    ::unlink(tmp.c_str());
    errno = saved;
    io_failure("cannot replace " + path_.string());
  }
  auto dir = path_.parent_path().empty() ? std::filesystem::path(".") : path_.parent_path();
  Fd dfd(::open(dir.c_str(), O_RDONLY | O_DIRECTORY | O_CLOEXEC));
  if (dfd.get() >= 0) ::fsync(dfd.get());

  struct stat st {};
  if (::stat(path_.c_str(), &st) != 0) io_failure("cannot stat store " + path_.string());
  contents_ = contents;
  stamp_ = FileStamp{st.st_ino, st.st_size, st.st_mtim};
}

void CredentialStore::transact(
    const std::function<void(std::vector<CredentialRecord>&)>& mutate) {
  std::unique_lock guard(mutex_);
  FileLock lock(lock_path(), true);
  FileStamp stamp;
  StoreContents contents = load_locked(stamp);
  mutate(contents.records);
  std::unordered_set<std::string> seen;
  for (const auto& l : contents.opaque_lines) seen.insert(l.substr(0, l.find(':')));
  for (const auto& r : contents.records) {
    if (!seen.insert(r.username).second) {
      throw Error(Errc::kDuplicateUsername, "username already exists: " + r.username);
    }
    serialize_record(r);
  }
  commit_locked(contents);
}

CredentialRecord CredentialStore::create_account(std::string_view username,
                                                 ByteView password,
                                                 const ChainSpec& spec,
                                                 const Pepper& pepper) {
  if (!is_valid_username(username)) throw Error(Errc::kInvalidRecord, "invalid username");
  if (chain_for(spec.version) != spec) {
    throw Error(Errc::kInvalidSpec, "chain does not match the store's " + spec.version);
  }
  CredentialRecord record{std::string(username), spec.version, options_.salt_source(), {}};
  record.stored_value = evaluate_chain(spec, password, record.salts, pepper).value();
  insert(record);
  return record;
}

void CredentialStore::insert(const CredentialRecord& record) {
  serialize_record(record);
  transact([&](std::vector<CredentialRecord>& records) {
    for (const auto& r : records) {
      if (r.username == record.username) {
        throw Error(Errc::kDuplicateUsername, "username already exists: " + r.username);
      }
    }
    records.push_back(record);
  });
}

VerificationOutcome CredentialStore::authenticate(std::string_view username,
                                                  ByteView candidate,
                                                  const Pepper& pepper) {
  refresh_if_changed();
  std::optional<CredentialRecord> record;
  {
    std::shared_lock guard(mutex_);
    for (const auto& r : contents_.records) {
      if (r.username == username) {
        record = r;
        break;
      }
    }
  }
  const ChainSpec* spec = nullptr;
  if (record) {
    try {
      spec = &chain_for(record->version);
    } catch (const Error&) {
      record.reset();
    }
  }
  if (!record) {
    const ChainSpec& dummy_spec = options_.chains.front();
    CredentialRecord dummy{"", dummy_spec.version, SaltSet{},
                           Bytes(dummy_spec.output_width_bits / 8)};
    if (candidate.size() <= kMaxPasswordLength) verify(dummy_spec, candidate, dummy, pepper);
    return VerificationOutcome::kReject;
  }
  if (candidate.size() > kMaxPasswordLength) return VerificationOutcome::kReject;
  return verify(*spec, candidate, *record, pepper);
}

CredentialRecord CredentialStore::set_password(std::string_view username,
                                               ByteView new_password,
                                               const Pepper& pepper) {
  std::optional<CredentialRecord> updated;
  transact([&](std::vector<CredentialRecord>& records) {
    for (auto& r : records) {
      if (r.username != username) continue;
      const ChainSpec& spec =
          r.version == "md5" ? options_.chains.front() : chain_for(r.version);
      CredentialRecord next{r.username, spec.version, options_.salt_source(), {}};
      next.stored_value = evaluate_chain(spec, new_password, next.salts, pepper).value();
      r = next;
      updated = std::move(next);
      return;
    }
    throw Error(Errc::kUnknownUser, "no such user: " + std::string(username));
  });
  return *updated;
}

std::optional<CredentialRecord> CredentialStore::find(std::string_view username) {
  refresh_if_changed();
  std::shared_lock guard(mutex_);
  for (const auto& r : contents_.records) {
    if (r.username == username) return r;
  }
  return std::nullopt;
}

std::vector<CredentialRecord> CredentialStore::records() {
  refresh_if_changed();
  std::shared_lock guard(mutex_);
  return contents_.records;
}

std::vector<std::string> CredentialStore::opaque_lines() {
  refresh_if_changed();
  std::shared_lock guard(mutex_);
  return contents_.opaque_lines;
}

void CredentialStore::reload() {
  std::unique_lock guard(mutex_);
  FileLock lock(lock_path(), false);
  contents_ = load_locked(stamp_);
}

void CredentialStore::refresh_if_changed() {
  struct stat st {};
  if (::stat(path_.c_str(), &st) != 0) io_failure("cannot stat store " + path_.string());
  FileStamp current{st.st_ino, st.st_size, st.st_mtim};
  {
    std::shared_lock guard(mutex_);
    if (current == stamp_) return;
  }
  reload();
}

}  // namespace onionhash
