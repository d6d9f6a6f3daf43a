#include "onionhash/cli.hpp"

#include <termios.h>
#include <unistd.h>

#include <cstdlib>
#include <fstream>
#include <iostream>
#include <memory>
#include <optional>
#include <sstream>

#include <CLI11.hpp>

#include "onionhash/analyzer.hpp"
#include "onionhash/authd.hpp"
#include "onionhash/collision_pair.hpp"
#include "onionhash/credstore.hpp"
#include "onionhash/error.hpp"
#include "onionhash/migration.hpp"

namespace onionhash {

namespace {

struct CliConfig {
  std::string store_path;
  std::string chain = "fb2014";
  std::string format = "human";
  bool password_stdin = false;
  bool fixed_salts = false;
  std::string server;
  std::string bind = std::string(kDefaultBind);
  std::string username;
  std::string legacy_file;
  std::string analyze_chain;
  std::vector<double> rates;

  bool structured() const { return format == "structured"; }
};

// Usage and configuration errors; mapped to exit code 2.
struct UsageError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

class Output {
 public:
  Output(std::ostream& out, bool structured) : out_(out), structured_(structured) {}

  void kv(const std::string& key, const std::string& value) {
    if (structured_) out_ << key << '=' << value << '\n';
  }
  void human(const std::string& line) {
    if (!structured_) out_ << line << '\n';
  }

 private:
  std::ostream& out_;
  bool structured_;
};

Pepper load_pepper() {
  const char* hex = std::getenv("ONIONHASH_PEPPER");
  if (hex == nullptr || *hex == '\0') throw UsageError("ONIONHASH_PEPPER is not set");
  try {
    return Pepper::from_hex(hex);
  } catch (const Error&) {
    throw UsageError("ONIONHASH_PEPPER must be 64 hex characters");
  }
}

ChainSpec load_chain(const std::string& name) {
  if (name == "md5") throw UsageError("md5 is a legacy import format, not a target chain");
  try {
    return builtin_chain(name);
  } catch (const Error&) {
    throw UsageError("unknown chain: " + name + " (expected fb2014 or sha256-v1)");
  }
}

std::string read_password(const CliConfig& cfg, std::istream& in, std::ostream& err,
                          const char* prompt) {
  std::string password;
  bool tty = !cfg.password_stdin && &in == &std::cin && ::isatty(STDIN_FILENO);
  if (!cfg.password_stdin) err << prompt << std::flush;
  termios saved{};
  if (tty) {
    ::tcgetattr(STDIN_FILENO, &saved);
    termios silent = saved;
    silent.c_lflag &= ~static_cast<tcflag_t>(ECHO);
    ::tcsetattr(STDIN_FILENO, TCSANOW, &silent);
  }
  bool ok = static_cast<bool>(std::getline(in, password));
  if (tty) {
    ::tcsetattr(STDIN_FILENO, TCSANOW, &saved);
    err << '\n';
  }
  if (!ok) throw UsageError("no password provided on stdin");
  if (!password.empty() && password.back() == '\r') password.pop_back();
  return password;
}

bool is_temporary_path(const std::filesystem::path& p) {
  auto tmp = std::filesystem::weakly_canonical(std::filesystem::temp_directory_path());
  auto target = std::filesystem::weakly_canonical(std::filesystem::absolute(p));
  auto rel = target.lexically_relative(tmp);
  return !rel.empty() && *rel.begin() != "..";
}

CredentialStore::Options store_options(const CliConfig& cfg, const ChainSpec& spec,
                                       bool create) {
  CredentialStore::Options options;
  options.create_if_missing = create;
  std::vector<ChainSpec> chains{spec};
  for (auto& c : options.chains) {
    if (c.version != spec.version) chains.push_back(c);
  }
  options.chains = std::move(chains);
  if (cfg.fixed_salts) {
    if (cfg.store_path.empty() || !is_temporary_path(cfg.store_path)) {
      throw UsageError("--test-fixed-salts is only allowed for stores under the temp directory");
    }
    options.salt_source = [] { return SaltSet{}; };
  }
  return options;
}

std::unique_ptr<CredentialStore> open_store(const CliConfig& cfg, const ChainSpec& spec,
                                            bool create) {
  if (cfg.store_path.empty()) throw UsageError("--store is required");
  auto options = store_options(cfg, spec, create);
  if (!create && !std::filesystem::exists(cfg.store_path)) {
    throw UsageError("store file not found: " + cfg.store_path);
  }
  try {
    return std::make_unique<CredentialStore>(cfg.store_path, std::move(options));
  } catch (const Error& e) {
    throw UsageError(std::string("cannot open store: ") + e.what());
  }
}

int cmd_register(const CliConfig& cfg, std::istream& in, std::ostream& out, std::ostream& err) {
  Output o(out, cfg.structured());
  auto pepper = load_pepper();
  auto spec = load_chain(cfg.chain);
  auto store = open_store(cfg, spec, true);
  auto password = read_password(cfg, in, err, "Password: ");
  try {
    store->create_account(cfg.username, password, spec, pepper);
  } catch (const Error& e) {
    if (e.code() == Errc::kIoFailure) throw;
    o.kv("command", "register");
    o.kv("status", "rejected");
    o.kv("error", std::string(errc_name(e.code())));
    o.human("register failed: " + std::string(errc_name(e.code())));
    return kExitRejected;
  }
  o.kv("command", "register");
  o.kv("status", "ok");
  o.kv("username", cfg.username);
  o.kv("chain", spec.version);
  o.human("registered " + cfg.username + " (" + spec.version + ")");
  return kExitOk;
}

int cmd_login(const CliConfig& cfg, std::istream& in, std::ostream& out, std::ostream& err) {
  Output o(out, cfg.structured());
  auto pepper = load_pepper();
  auto spec = load_chain(cfg.chain);
  auto store = open_store(cfg, spec, false);
  auto password = read_password(cfg, in, err, "Password: ");
  bool accepted = store->authenticate(cfg.username, password, pepper) ==
                  VerificationOutcome::kAccept;
  o.kv("command", "login");
  o.kv("status", accepted ? "accepted" : "rejected");
  o.kv("username", cfg.username);
  o.human(accepted ? "login accepted" : "login rejected");
  return accepted ? kExitOk : kExitRejected;
}

int cmd_set_password(const CliConfig& cfg, std::istream& in, std::ostream& out,
                     std::ostream& err) {
  Output o(out, cfg.structured());
  auto pepper = load_pepper();
  auto spec = load_chain(cfg.chain);
  auto store = open_store(cfg, spec, false);
  auto password = read_password(cfg, in, err, "New password: ");
  try {
    store->set_password(cfg.username, password, pepper);
  } catch (const Error& e) {
    if (e.code() == Errc::kIoFailure) throw;
    o.kv("command", "set-password");
    o.kv("status", "rejected");
    o.kv("error", std::string(errc_name(e.code())));
    o.human("set-password failed: " + std::string(errc_name(e.code())));
    return kExitRejected;
  }
  o.kv("command", "set-password");
  o.kv("status", "ok");
  o.kv("username", cfg.username);
  o.human("password updated for " + cfg.username);
  return kExitOk;
}

int cmd_migrate(const CliConfig& cfg, std::ostream& out, std::ostream& err) {
  Output o(out, cfg.structured());
  auto pepper = load_pepper();
  auto spec = load_chain(cfg.chain);
  if (spec.stages.front().kind != StageKind::kMd5Plain) {
    throw UsageError("chain " + spec.version + " does not start with MD5; cannot wrap");
  }
  std::ifstream file(cfg.legacy_file, std::ios::binary);
  if (!file) throw UsageError("cannot read legacy file: " + cfg.legacy_file);
  auto options = store_options(cfg, spec, true);
  auto salt_source = options.salt_source;
  auto store = open_store(cfg, spec, true);

  MigrationReport report;
  std::vector<CredentialRecord> imports;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(file, line)) {
    ++line_no;
    try {
      auto legacy = parse_legacy_line(line);
      auto existing = store->find(legacy.username);
      bool queued = false;
      for (const auto& r : imports) queued = queued || r.username == legacy.username;
      if (existing && existing->version == spec.version) {
        ++report.skipped;
      } else if (existing || queued) {
        ++report.failed;
        err << cfg.legacy_file << ":" << line_no << ": username already present\n";
      } else {
        imports.push_back({legacy.username, "md5", SaltSet{}, from_hex(legacy.legacy_value)});
      }
    } catch (const Error& e) {
      ++report.failed;
      err << cfg.legacy_file << ":" << line_no << ": " << errc_name(e.code()) << ": "
          << e.what() << '\n';
    }
  }
  if (!imports.empty()) {
    store->transact([&](std::vector<CredentialRecord>& records) {
      records.insert(records.end(), imports.begin(), imports.end());
    });
  }
  auto upgraded = upgrade_store(*store, md5_legacy_chain(), spec, pepper, salt_source);
  report.migrated += upgraded.migrated;
  report.failed += upgraded.failed;

  std::string counts = "migrated=" + std::to_string(report.migrated) +
                       " skipped=" + std::to_string(report.skipped) +
                       " failed=" + std::to_string(report.failed);
  o.kv("command", "migrate");
  o.kv("migrated", std::to_string(report.migrated));
  o.kv("skipped", std::to_string(report.skipped));
  o.kv("failed", std::to_string(report.failed));
  o.human(counts);
  return report.failed == 0 ? kExitOk : kExitRejected;
}

int cmd_analyze(const CliConfig& cfg, std::ostream& out) {
  std::string name = cfg.analyze_chain.empty() ? cfg.chain : cfg.analyze_chain;
  ChainSpec spec;
  try {
    spec = builtin_chain(name);
  } catch (const Error&) {
    throw UsageError("unknown chain: " + name);
  }
  auto rates = cfg.rates.empty() ? std::vector<double>{1e9} : cfg.rates;
  for (double r : rates) {
    if (!(r > 0) || !std::isfinite(r)) throw UsageError("--rate must be positive");
  }
  auto report = effective_preimage_space(spec);
  auto findings = compliance_report(spec);
  if (cfg.structured()) {
    out << render_analysis(spec, report, findings, rates);
    return kExitOk;
  }
  std::string stages;
  for (const auto& s : spec.stages) {
    stages += (stages.empty() ? "" : " -> ") + std::string(stage_name(s.kind));
  }
  out << "chain " << spec.version << ": " << stages << '\n';
  out << "boundary widths (bits):";
  for (auto w : report.boundary_widths_bits) out << ' ' << w;
  out << '\n';
  out << "effective=" << report.effective_bits << " nominal=" << report.nominal_bits
      << " (bottleneck at stage " << report.bottleneck_stage << ", "
      << stage_name(spec.stages[report.bottleneck_stage].kind) << ")\n";
  if (report.best_known_attack_bits) out << "note: " << report.annotation << '\n';
  out << "findings:\n";
  if (findings.empty()) out << "  none\n";
  for (const auto& f : findings) {
    std::string sev = std::string(severity_name(f.severity));
    for (auto& c : sev) c = static_cast<char>(std::toupper(static_cast<unsigned char>(c)));
    out << "  [" << sev << "] " << f.code << ": " << f.message << '\n';
  }
  for (double r : rates) {
    out << "expected search time at " << render_scientific(exact_rational(r))
        << " guesses/s: "
        << guess_cost_estimate(static_cast<int>(report.effective_bits), r).rendered
        << " s (nominal "
        << guess_cost_estimate(static_cast<int>(report.nominal_bits), r).rendered << " s)\n";
  }
  return kExitOk;
}

int cmd_collide_demo(const CliConfig& cfg, std::ostream& out, std::ostream& err) {
  Output o(out, cfg.structured());
  auto spec = load_chain(cfg.chain);

  std::string md5_a = md5(kCollisionA).hex();
  std::string md5_b = md5(kCollisionB).hex();
  if (md5_a != kCollisionMd5Hex || md5_b != kCollisionMd5Hex) {
    err << "propagation-failure: embedded collision pair does not hash to "
        << kCollisionMd5Hex << '\n';
    return kExitRejected;
  }
  o.human("a = " + std::string(kCollisionA));
  o.human("b = " + std::string(kCollisionB));
  o.human("md5(a)=md5(b)=" + md5_a);
  o.kv("a", std::string(kCollisionA));
  o.kv("b", std::string(kCollisionB));
  o.kv("md5", md5_a);
  o.kv("chain", spec.version);

  const char* env = std::getenv("ONIONHASH_PEPPER");
  Pepper pepper = (env && *env) ? load_pepper() : Pepper::random();
  SaltSet salts = cfg.fixed_salts ? SaltSet{} : SaltSet::random();

  auto proof = collision_propagation_check(spec, as_bytes(kCollisionA), as_bytes(kCollisionB),
                                           salts, pepper);
  o.human("per-stage propagation (" + spec.version + "):");
  for (std::size_t i = 0; i < proof.stages.size(); ++i) {
    const auto& s = proof.stages[i];
    o.human("  stage " + std::to_string(i) + " " + s.stage + ": " +
            (s.equal ? "equal" : "DIFFERENT"));
    o.kv("stage." + std::to_string(i) + "." + s.stage, s.equal ? "equal" : "different");
  }
  bool propagates = proof.verdict == PropagationVerdict::kCollisionPropagates;

  bool login_b = false;
  bool control_rejected = false;
  if (!cfg.server.empty()) {
    DemoReport demo;
    try {
      demo = exploit_demo(parse_bind_address(cfg.server));
    } catch (const Error& e) {
      throw UsageError(std::string("cannot run demo against server: ") + e.what());
    }
    for (const auto& s : demo.steps) {
      o.human("  " + s.name + ": HTTP " + std::to_string(s.observed_status) +
              (s.pass ? " (as expected)" : " (expected " + std::to_string(s.expected_status) +
                                               ")"));
    }
    login_b = demo.steps.size() > 1 && demo.steps[1].observed_status == 200;
    control_rejected = demo.steps.size() > 2 && demo.steps[2].observed_status == 401;
  } else {
    auto dir = std::filesystem::temp_directory_path() /
               ("onionhash-demo-" + to_hex(random_array<8>()));
    std::filesystem::create_directories(dir);
    {
      CredentialStore::Options options;
      options.create_if_missing = true;
      options.chains = {spec};
      options.salt_source = [&] { return salts; };
      CredentialStore store(dir / "store", options);
      store.create_account("eve", kCollisionA, spec, pepper);
      o.human("registered eve with string a");
      login_b = store.authenticate("eve", kCollisionB, pepper) == VerificationOutcome::kAccept;
      o.human(std::string("login as eve with string b: ") + (login_b ? "ACCEPTED" : "rejected"));
      control_rejected = store.authenticate("eve", "not-the-password", pepper) ==
                         VerificationOutcome::kReject;
      o.human(std::string("control login with a wrong password: ") +
              (control_rejected ? "rejected" : "ACCEPTED"));
    }
    std::filesystem::remove_all(dir);
  }
  o.kv("login_b", login_b ? "accepted" : "rejected");
  o.kv("control", control_rejected ? "rejected" : "accepted");

  bool confirmed = propagates && login_b && control_rejected;
  o.kv("verdict", confirmed ? "collision_confirmed" : "no_collision");
  o.human(confirmed ? "COLLISION CONFIRMED" : "NO COLLISION (chain not vulnerable)");
  return confirmed ? kExitOk : kExitRejected;
}

int cmd_serve(const CliConfig& cfg, std::ostream& err) {
  auto pepper = load_pepper();
  auto spec = load_chain(cfg.chain);
  if (cfg.store_path.empty()) throw UsageError("--store is required");
  BindAddress addr;
  try {
    addr = parse_bind_address(cfg.bind);
  } catch (const Error& e) {
    throw UsageError(e.what());
  }
  try {
    serve(addr, cfg.store_path, pepper, spec, [&err](const std::string& line) {
      err << line << std::endl;
    });
  } catch (const Error& e) {
    err << "serve: " << e.what() << '\n';
    return kExitUsage;
  }
  return kExitOk;
}

}  // namespace

int run_cli(const std::vector<std::string>& args, std::istream& in, std::ostream& out,
            std::ostream& err) {
  CliConfig cfg;
  CLI::App app{"Layered password-hash toolkit", "onionhash"};
  app.require_subcommand(1);
  app.fallthrough();
  app.add_option("--store", cfg.store_path, "Credential store file");
  app.add_option("--chain", cfg.chain, "Chain version: fb2014 or sha256-v1");
  app.add_option("--format", cfg.format, "Output format")
      ->check(CLI::IsMember({"human", "structured"}));
  app.add_flag("--password-stdin", cfg.password_stdin, "Read the password from stdin");
  app.add_flag("--test-fixed-salts", cfg.fixed_salts)->group("");

  auto* reg = app.add_subcommand("register", "Create an account");
  reg->add_option("username", cfg.username)->required();
  auto* login = app.add_subcommand("login", "Check a password");
  login->add_option("username", cfg.username)->required();
  auto* setpw = app.add_subcommand("set-password", "Replace an account's password");
  setpw->add_option("username", cfg.username)->required();
  auto* migrate = app.add_subcommand("migrate", "Wrap a username:md5hex file into the store");
  migrate->add_option("legacy_file", cfg.legacy_file)->required();
  auto* analyze = app.add_subcommand("analyze", "Bottleneck and compliance report for a chain");
  analyze->add_option("chain", cfg.analyze_chain, "Chain version (default: --chain)");
  analyze->add_option("--rate", cfg.rates, "Guesses per second (repeatable)");
  auto* demo = app.add_subcommand("collide-demo", "Run the MD5 collision login demonstration");
  demo->add_option("--server", cfg.server, "Target a running service at host:port");
  auto* srv = app.add_subcommand("serve", "Run the register/login HTTP service");
  srv->add_option("--bind", cfg.bind, "host:port to listen on");

  std::vector<std::string> reversed(args.rbegin(), args.rend());
  try {
    app.parse(reversed);
  } catch (const CLI::CallForHelp&) {
    out << app.help();
    return kExitOk;
  } catch (const CLI::ParseError& e) {
    err << e.what() << '\n' << app.help();
    return kExitUsage;
  }

  try {
    if (*reg) return cmd_register(cfg, in, out, err);
    if (*login) return cmd_login(cfg, in, out, err);
    if (*setpw) return cmd_set_password(cfg, in, out, err);
    if (*migrate) return cmd_migrate(cfg, out, err);
    if (*analyze) return cmd_analyze(cfg, out);
    if (*demo) return cmd_collide_demo(cfg, out, err);
    if (*srv) return cmd_serve(cfg, err);
  } catch (const UsageError& e) {
    err << "error: " << e.what() << '\n';
    return kExitUsage;
  } catch (const Error& e) {
    err << "error: " << errc_name(e.code()) << ": " << e.what() << '\n';
    return kExitUsage;
  }
  return kExitUsage;
}

}  // namespace onionhash
