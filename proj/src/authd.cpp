#include "onionhash/authd.hpp"

#include <pthread.h>
#include <signal.h>

#include <charconv>
#include <thread>

#include <httplib.h>
#include <json.hpp>

#include "onionhash/collision_pair.hpp"
#include "onionhash/error.hpp"

namespace onionhash {

using nlohmann::json;

BindAddress parse_bind_address(std::string_view text) {
  auto colon = text.rfind(':');
  if (colon == std::string_view::npos || colon == 0) {
    throw Error(Errc::kBindFailure, "bind address must be host:port");
  }
  BindAddress addr{std::string(text.substr(0, colon)), 0};
  auto port_text = text.substr(colon + 1);
  auto [ptr, ec] = std::from_chars(port_text.data(), port_text.data() + port_text.size(),
                                   addr.port);
  if (ec != std::errc() || ptr != port_text.data() + port_text.size() || addr.port < 0 ||
      addr.port > 65535) {
    throw Error(Errc::kBindFailure, "invalid port in bind address");
  }
  return addr;
}

struct AuthServer::Impl {
  std::shared_ptr<CredentialStore> store;
  ChainSpec spec;
  Pepper pepper;
  Logger logger;
  httplib::Server server;
};

namespace {

void reply(httplib::Response& res, int status, const char* error = nullptr) {
  res.status = status;
  json body = {{"ok", error == nullptr}};
  if (error) body["error"] = error;
  res.set_content(body.dump(), "application/json");
}

struct Credentials {
  std::string username;
  std::string password;
  std::string new_password;
};

// Nothing from the request body is ever echoed back.
bool parse_request(const httplib::Request& req, std::string_view action, bool needs_new,
                   Credentials& out) {
  json body = json::parse(req.body, nullptr, false);
  if (body.is_discarded() || !body.is_object()) return false;
  if (body.contains("action") &&
      (!body["action"].is_string() || body["action"].get<std::string>() != action)) {
    return false;
  }
  auto field = [&](const char* key, std::string& dst) {
    auto it = body.find(key);
    if (it == body.end() || !it->is_string()) return false;
    dst = it->get<std::string>();
    return true;
  };
  if (!field("username", out.username) || !field("password", out.password)) return false;
  if (needs_new && !field("new_password", out.new_password)) return false;
  return true;
}

}  // namespace

AuthServer::AuthServer(std::shared_ptr<CredentialStore> store, ChainSpec spec, Pepper pepper,
                       Logger logger)
    : impl_(std::make_unique<Impl>()) {
  validate(spec);
  impl_->store = std::move(store);
  impl_->spec = std::move(spec);
  impl_->pepper = pepper;
  impl_->logger = std::move(logger);

  auto& srv = impl_->server;
  Impl* self = impl_.get();
  srv.set_payload_max_length(kMaxRequestBody);

  srv.Post("/register", [self](const httplib::Request& req, httplib::Response& res) {
    Credentials c;
    if (!parse_request(req, "register", false, c)) return reply(res, 400, "bad_request");
    try {
      self->store->create_account(c.username, c.password, self->spec, self->pepper);
      reply(res, 200);
    } catch (const Error& e) {
      switch (e.code()) {
        case Errc::kDuplicateUsername: return reply(res, 409, "duplicate_username");
        case Errc::kInvalidRecord: return reply(res, 400, "invalid_username");
        case Errc::kPasswordTooLong: return reply(res, 400, "password_too_long");
        default: return reply(res, 500, "store_failure");
      }
    }
  });

  srv.Post("/login", [self](const httplib::Request& req, httplib::Response& res) {
    Credentials c;
    if (!parse_request(req, "login", false, c)) return reply(res, 400, "bad_request");
    try {
      auto outcome = self->store->authenticate(c.username, c.password, self->pepper);
      if (outcome == VerificationOutcome::kAccept) return reply(res, 200);
      reply(res, 401, "invalid_credentials");
    } catch (const Error&) {
      reply(res, 500, "store_failure");
    }
  });

  srv.Post("/set_password", [self](const httplib::Request& req, httplib::Response& res) {
    Credentials c;
    if (!parse_request(req, "set_password", true, c)) return reply(res, 400, "bad_request");
    try {
      if (self->store->authenticate(c.username, c.password, self->pepper) !=
          VerificationOutcome::kAccept) {
        return reply(res, 401, "invalid_credentials");
      }
      self->store->set_password(c.username, c.new_password, self->pepper);
      reply(res, 200);
    } catch (const Error& e) {
      if (e.code() == Errc::kPasswordTooLong) return reply(res, 400, "password_too_long");
      reply(res, 500, "store_failure");
    }
  });

  // SO_REUSEADDR only; httplib's default also sets SO_REUSEPORT, which would let
  // a second instance share the port instead of failing to bind.
  srv.set_socket_options([](socket_t sock) {
    int yes = 1;
    ::setsockopt(sock, SOL_SOCKET, SO_REUSEADDR, &yes, sizeof(yes));
  });

  srv.set_error_handler([](const httplib::Request&, httplib::Response& res) {
    if (!res.body.empty()) return;
    switch (res.status) {
      case 413: return reply(res, 413, "payload_too_large");
      case 404: return reply(res, 404, "not_found");
      default: return reply(res, res.status, "bad_request");
    }
  });

  if (impl_->logger) {
    srv.set_logger([self](const httplib::Request& req, const httplib::Response& res) {
      self->logger(req.method + " " + req.path + " " + std::to_string(res.status));
    });
  }
}

AuthServer::~AuthServer() { stop(); }

int AuthServer::bind(const BindAddress& address) {
  int port = address.port;
  if (port == 0) {
    port = impl_->server.bind_to_any_port(address.host);
  } else if (!impl_->server.bind_to_port(address.host, port)) {
    port = -1;
  }
  if (port < 0) {
    throw Error(Errc::kBindFailure,
                "cannot bind " + address.host + ":" + std::to_string(address.port));
  }
  return port;
}

void AuthServer::run() { impl_->server.listen_after_bind(); }

void AuthServer::stop() {
  if (impl_ && impl_->server.is_running()) impl_->server.stop();
}

void AuthServer::wait_until_ready() const { impl_->server.wait_until_ready(); }

void serve(const BindAddress& address, const std::filesystem::path& store_path,
           const Pepper& pepper, const ChainSpec& spec, AuthServer::Logger logger) {
  CredentialStore::Options options;
  options.create_if_missing = true;
  std::vector<ChainSpec> chains{spec};
  for (auto& c : options.chains) {
    if (c.version != spec.version) chains.push_back(c);
  }
  options.chains = std::move(chains);
  auto store = std::make_shared<CredentialStore>(store_path, std::move(options));

  // Block the shutdown signals before the worker pool exists so only the
  // watcher thread receives them.
  sigset_t signals;
  sigemptyset(&signals);
  sigaddset(&signals, SIGINT);
  sigaddset(&signals, SIGTERM);
  sigset_t previous;
  pthread_sigmask(SIG_BLOCK, &signals, &previous);

  AuthServer server(store, spec, pepper, logger);
  int port = server.bind(address);
  if (logger) logger("listening on " + address.host + ":" + std::to_string(port));

  std::thread watcher([&] {
    int sig = 0;
    sigwait(&signals, &sig);
    server.stop();
  });
  server.run();
  // run() only returns after stop(); wake the watcher if it is still waiting.
  pthread_kill(watcher.native_handle(), SIGTERM);
  watcher.join();
  pthread_sigmask(SIG_SETMASK, &previous, nullptr);
  // Every mutation is already durable; nothing is buffered.
}

namespace {

int post(const BindAddress& server, const std::string& path, const json& body) {
  // A fresh client per request: no connection or session reuse.
  httplib::Client client(server.host, server.port);
  client.set_connection_timeout(5);
  client.set_read_timeout(60);
  auto res = client.Post(path, body.dump(), "application/json");
  if (!res) {
    throw Error(Errc::kNetworkFailure,
                "request to " + server.host + ":" + std::to_string(server.port) + path +
                    " failed: " + httplib::to_string(res.error()));
  }
  return res->status;
}

}  // namespace

DemoReport exploit_demo(const BindAddress& server) {
  DemoReport report;
  report.username = "eve-" + to_hex(random_array<6>());
  std::string control = "control-" + to_hex(random_array<12>());

  auto step = [&](std::string name, const std::string& path, std::string_view password,
                  int expected) {
    json body = {{"username", report.username}, {"password", password}};
    int status = post(server, path, body);
    report.steps.push_back({std::move(name), expected, status, status == expected});
    return status;
  };
  int reg = step("register with string a", "/register", kCollisionA, 200);
  int login_b = step("login with string b", "/login", kCollisionB, 200);
  int ctrl = step("control login with a random string", "/login", control, 401);
  report.pass = reg == 200 && login_b == 200 && ctrl == 401;
  return report;
}

}  // namespace onionhash
