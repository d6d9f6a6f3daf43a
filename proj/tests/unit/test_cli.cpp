#include <doctest.h>

#include <cstdlib>
#include <fstream>
#include <sstream>

#include "onionhash/cli.hpp"
#include "onionhash/collision_pair.hpp"
#include "onionhash/primitives.hpp"
#include "test_support.hpp"

using namespace onionhash;
using namespace onionhash::testing;

namespace {

const std::string kPepperHex =
    "4f6e696f6e686173682074657374207065707065722076616c75652030303031";

struct Run {
  int code;
  std::string out;
  std::string err;
};

Run cli(std::vector<std::string> args, const std::string& stdin_text = "") {
  ::setenv("ONIONHASH_PEPPER", kPepperHex.c_str(), 1);
  std::istringstream in(stdin_text);
  std::ostringstream out, err;
  int code = run_cli(args, in, out, err);
  return {code, out.str(), err.str()};
}

std::string slurp(const std::filesystem::path& p) {
  std::ifstream f(p, std::ios::binary);
  return {std::istreambuf_iterator<char>(f), {}};
}

void write_file(const std::filesystem::path& p, const std::string& text) {
  std::ofstream(p, std::ios::binary) << text;
}

bool leaks_secret(const Run& r) {
  return r.out.find(kPepperHex) != std::string::npos ||
         r.err.find(kPepperHex) != std::string::npos;
}

}  // namespace

TEST_CASE("register, login and set-password") {
  TempDir dir;
  std::string store = (dir / "store").string();

  auto reg = cli({"--store", store, "--password-stdin", "register", "eve"},
                 std::string(kCollisionA) + "\n");
  CHECK(reg.code == 0);
  auto login_b = cli({"--store", store, "--password-stdin", "login", "eve"},
                     std::string(kCollisionB) + "\n");
  CHECK(login_b.code == 0);
  CHECK(login_b.out == "login accepted\n");
  auto wrong = cli({"--store", store, "--password-stdin", "login", "eve"}, "wrong\n");
  CHECK(wrong.code == 1);
  CHECK(wrong.out == "login rejected\n");
  CHECK(cli({"--store", store, "--password-stdin", "login", "nobody"}, "x\n").code == 1);
  CHECK(cli({"--store", store, "--password-stdin", "register", "eve"}, "x\n").code == 1);

  CHECK(cli({"--store", store, "--password-stdin", "set-password", "eve"}, "fresh\n").code == 0);
  CHECK(cli({"--store", store, "--password-stdin", "login", "eve"}, "fresh\n").code == 0);
  CHECK(cli({"--store", store, "--password-stdin", "login", "eve"},
            std::string(kCollisionA) + "\n")
            .code == 1);
  CHECK(cli({"--store", store, "--password-stdin", "set-password", "ghost"}, "x\n").code == 1);

  std::string contents = slurp(store);
  CHECK(contents.find("fresh") == std::string::npos);
  CHECK(contents.find(kPepperHex) == std::string::npos);
  for (const auto& r : {reg, login_b, wrong}) {
    CHECK_FALSE(leaks_secret(r));
    CHECK(r.out.find("fresh") == std::string::npos);
  }
}

TEST_CASE("usage and configuration errors exit 2") {
  TempDir dir;
  std::string store = (dir / "store").string();
  CHECK(cli({"--store", store, "--password-stdin", "login", "eve"}, "x\n").code == 2);
  CHECK_FALSE(std::filesystem::exists(store));
  CHECK(cli({"--password-stdin", "login", "eve"}, "x\n").code == 2);
  CHECK(cli({"--store", store, "--password-stdin", "register", "eve"}, "").code == 2);
  CHECK(cli({"--store", store, "--chain", "nope", "--password-stdin", "register", "eve"}, "x\n")
            .code == 2);
  CHECK(cli({"--store", store, "register"}, "").code == 2);
  CHECK(cli({"frobnicate"}).code == 2);
  CHECK(cli({}).code == 2);
  CHECK(cli({"--format", "xml", "analyze"}).code == 2);

  ::setenv("ONIONHASH_PEPPER", "abcd", 1);
  std::istringstream in("x\n");
  std::ostringstream out, err;
  CHECK(run_cli({"--store", store, "--password-stdin", "register", "eve"}, in, out, err) == 2);
  CHECK(err.str().find("ONIONHASH_PEPPER") != std::string::npos);
  ::unsetenv("ONIONHASH_PEPPER");
  CHECK(run_cli({"--store", store, "--password-stdin", "register", "eve"}, in, out, err) == 2);
}

TEST_CASE("password is never taken from the argument list") {
  TempDir dir;
  std::string store = (dir / "store").string();
  auto r = cli({"--store", store, "--password-stdin", "register", "eve", "hunter2"}, "");
  CHECK(r.code == 2);
}

TEST_CASE("migrate") {
  TempDir dir;
  std::string store = (dir / "store").string();
  std::string legacy = (dir / "legacy.txt").string();

  SUBCASE("three valid lines, then idempotent rerun") {
    write_file(legacy, "alice:" + md5("alpha").hex() + "\nbob:" + md5("bravo").hex() +
                           "\ncarol:" + md5("charlie").hex() + "\n");
    auto r = cli({"--store", store, "migrate", legacy});
    CHECK(r.code == 0);
    CHECK(r.out == "migrated=3 skipped=0 failed=0\n");
    CHECK(cli({"--store", store, "--password-stdin", "login", "alice"}, "alpha\n").code == 0);
    CHECK(cli({"--store", store, "--password-stdin", "login", "bob"}, "bravo\n").code == 0);
    CHECK(cli({"--store", store, "--password-stdin", "login", "carol"}, "charlie\n").code == 0);
    CHECK(cli({"--store", store, "--password-stdin", "login", "carol"}, "alpha\n").code == 1);

    auto again = cli({"--store", store, "--format", "structured", "migrate", legacy});
    CHECK(again.code == 0);
    CHECK(again.out == "command=migrate\nmigrated=0\nskipped=3\nfailed=0\n");
    CHECK(slurp(store).find(md5("alpha").hex()) == std::string::npos);
  }
  SUBCASE("one bad hex line") {
    write_file(legacy, "alice:" + md5("alpha").hex() + "\nbob:" + std::string(32, 'z') +
                           "\ncarol:" + md5("charlie").hex() + "\n");
    auto r = cli({"--store", store, "migrate", legacy});
    CHECK(r.code == 1);
    CHECK(r.out == "migrated=2 skipped=0 failed=1\n");
    CHECK(r.err.find("legacy.txt:2:") != std::string::npos);
    CHECK(cli({"--store", store, "--password-stdin", "login", "carol"}, "charlie\n").code == 0);
  }
  SUBCASE("empty file") {
    write_file(legacy, "");
    auto r = cli({"--store", store, "migrate", legacy});
    CHECK(r.code == 0);
    CHECK(r.out == "migrated=0 skipped=0 failed=0\n");
  }
  SUBCASE("missing file and non-md5 target chain") {
    CHECK(cli({"--store", store, "migrate", (dir / "absent").string()}).code == 2);
    write_file(legacy, "");
    CHECK(cli({"--store", store, "--chain", "sha256-v1", "migrate", legacy}).code == 2);
  }
}

TEST_CASE("analyze") {
  auto fb = cli({"analyze", "fb2014"});
  CHECK(fb.code == 0);
  CHECK(fb.out.find("effective=128 nominal=256") != std::string::npos);
  CHECK(fb.out.find("[CRITICAL] DEPRECATED_MD5") != std::string::npos);

  auto sha = cli({"analyze", "sha256-v1"});
  CHECK(sha.code == 0);
  CHECK(sha.out.find("effective=256 nominal=256") != std::string::npos);
  CHECK(sha.out.find("CRITICAL") == std::string::npos);
  CHECK(sha.out.find("  none\n") != std::string::npos);

  auto structured = cli({"--format", "structured", "analyze", "fb2014", "--rate", "1e9",
                         "--rate", "2e9"});
  CHECK(structured.code == 0);
  CHECK(structured.out.find("effective_bits=128\n") != std::string::npos);
  CHECK(structured.out.find("nominal_bits=256\n") != std::string::npos);
  CHECK(structured.out.find("guess_cost_count=2\n") != std::string::npos);
  CHECK(structured.out.find("guess_cost.0.effective_seconds=1.7014e29\n") != std::string::npos);
  CHECK(structured.out.find("guess_cost.1.effective_seconds=8.5071e28\n") != std::string::npos);
  CHECK(structured.out == cli({"--format", "structured", "analyze", "fb2014", "--rate", "1e9",
                               "--rate", "2e9"})
                              .out);

  CHECK(cli({"analyze", "nope"}).code == 2);
  CHECK(cli({"analyze", "fb2014", "--rate", "0"}).code == 2);
}

TEST_CASE("collide-demo") {
  auto fb = cli({"collide-demo"});
  CHECK(fb.code == 0);
  CHECK(fb.out.find("\nmd5(a)=md5(b)=faad49866e9498fc1719f5289e7a0269\n") != std::string::npos);
  CHECK(fb.out.find(std::string(kCollisionA)) != std::string::npos);
  CHECK(fb.out.find(std::string(kCollisionB)) != std::string::npos);
  CHECK(fb.out.find("DIFFERENT") == std::string::npos);
  CHECK(fb.out.size() >= std::string("COLLISION CONFIRMED\n").size());
  CHECK(fb.out.substr(fb.out.size() - 20) == "COLLISION CONFIRMED\n");
  CHECK_FALSE(leaks_secret(fb));

  auto sha = cli({"--chain", "sha256-v1", "collide-demo"});
  CHECK(sha.code == 1);
  CHECK(sha.out.find("\nmd5(a)=md5(b)=faad49866e9498fc1719f5289e7a0269\n") != std::string::npos);
  const std::string tail = "NO COLLISION (chain not vulnerable)\n";
  CHECK(sha.out.substr(sha.out.size() - tail.size()) == tail);
}

TEST_CASE("structured output is byte-stable with fixed salts") {
  TempDir d1, d2;
  auto run = [](const TempDir& d) {
    std::string store = (d / "store").string();
    std::string out;
    out += cli({"--store", store, "--format", "structured", "--test-fixed-salts",
                "--password-stdin", "register", "eve"},
               std::string(kCollisionA) + "\n")
               .out;
    out += cli({"--store", store, "--format", "structured", "--test-fixed-salts",
                "--password-stdin", "login", "eve"},
               std::string(kCollisionB) + "\n")
               .out;
    out += cli({"--format", "structured", "--test-fixed-salts", "collide-demo"}).out;
    return std::make_pair(out, slurp(store));
  };
  auto [out1, store1] = run(d1);
  auto [out2, store2] = run(d2);
  CHECK(out1 == out2);
  CHECK(store1 == store2);
  CHECK(out1.find("command=register\nstatus=ok\nusername=eve\nchain=fb2014\n") == 0);
  CHECK(out1.find("stage.4.sha256=equal\n") != std::string::npos);
  CHECK(out1.find("verdict=collision_confirmed\n") != std::string::npos);
  CHECK(out1.find(kPepperHex) == std::string::npos);
}

TEST_CASE("fixed salts are refused outside the temp directory") {
  auto r = cli({"--store", "onionhash-not-temporary.store", "--test-fixed-salts",
                "--password-stdin", "register", "eve"},
               "x\n");
  CHECK(r.code == 2);
  CHECK_FALSE(std::filesystem::exists("onionhash-not-temporary.store"));
}
