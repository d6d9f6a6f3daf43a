#pragma once

#include <filesystem>
#include <functional>
#include <memory>
#include <string>
#include <string_view>
#include <vector>

#include "onionhash/chain.hpp"
#include "onionhash/credstore.hpp"

namespace onionhash {

inline constexpr std::size_t kMaxRequestBody = 8 * 1024;
inline constexpr std::string_view kDefaultBind = "127.0.0.1:8731";

struct BindAddress {
  std::string host;
  int port = 0;
};

// "host:port". Throws Error{kBindFailure} on malformed input.
BindAddress parse_bind_address(std::string_view text);

/// Register/login service over HTTP/1.1 with JSON bodies:
///   POST /register      {"username", "password"}
///   POST /login         {"username", "password"}
///   POST /set_password  {"username", "password", "new_password"}
/// 200 {"ok":true}; 401 invalid_credentials; 409 duplicate_username;
/// 400 bad_request; 413 when the body exceeds 8 KiB. No sessions.
class AuthServer {
 public:
  // Log lines carry method, path and status only.
  using Logger = std::function<void(const std::string&)>;

  AuthServer(std::shared_ptr<CredentialStore> store, ChainSpec spec, Pepper pepper,
             Logger logger = {});
  ~AuthServer();

  AuthServer(const AuthServer&) = delete;
  AuthServer& operator=(const AuthServer&) = delete;

  // Port 0 picks a free port. Returns the bound port. Throws Error{kBindFailure}.
  int bind(const BindAddress& address);

  // Blocks until stop().
  void run();
  void stop();
  void wait_until_ready() const;

 private:
  struct Impl;
  std::unique_ptr<Impl> impl_;
};

// Opens (or creates) the store, binds, and serves until SIGINT or SIGTERM.
// Throws Error{kIoFailure} or Error{kBindFailure} before serving.
void serve(const BindAddress& address, const std::filesystem::path& store_path,
           const Pepper& pepper, const ChainSpec& spec, AuthServer::Logger logger = {});

struct DemoStep {
  std::string name;
  int expected_status = 0;
  int observed_status = 0;
  bool pass = false;
};

struct DemoReport {
  std::string username;
  std::vector<DemoStep> steps;
  bool pass = false;  // string-b login accepted and control login rejected
};

// Registers a fresh account with collision string a, then logs in with
// string b and with a random control string, each over a new connection.
// Throws Error{kNetworkFailure} when the server cannot be reached.
DemoReport exploit_demo(const BindAddress& server);

}  // namespace onionhash
