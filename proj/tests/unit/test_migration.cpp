#include <doctest.h>

#include "onionhash/collision_pair.hpp"
#include "onionhash/error.hpp"
#include "onionhash/migration.hpp"
#include "test_support.hpp"

using namespace onionhash;
using namespace onionhash::testing;

namespace {

CredentialStore::Options cheap_options() {
  CredentialStore::Options options;
  options.create_if_missing = true;
  options.chains = {cheap_fb2014(), sha256_v1_chain(), md5_legacy_chain()};
  return options;
}

CredentialRecord legacy_record(const std::string& user, std::string_view pw) {
  auto m = md5(pw);
  return {user, "md5", SaltSet{}, Bytes(m.bytes().begin(), m.bytes().end())};
}

Errc code_of(const std::function<void()>& fn) {
  try {
    fn();
  } catch (const Error& e) {
    return e.code();
  }
  FAIL("expected an error");
  return Errc::kInvalidParams;
}

}  // namespace

TEST_CASE("wrap_legacy equals full-chain evaluation of the plaintext") {
  LegacyRecord legacy{"alice", LegacyKind::kMd5Hex, md5("abc").hex()};
  SUBCASE("frozen reference value at full cost") {
    auto record = wrap_legacy(legacy, SaltSet{}, Pepper{}, facebook2014_chain());
    // tests/oracle/fb2014_reference.py, "abc" with all-zero salts and pepper.
    CHECK(to_hex(record.stored_value) ==
          "87912966177a79460028bc1df00787036287cf60f616ec895f986af986b84242");
    CHECK(record.version == "fb2014");
    CHECK(record.username == "alice");
  }
  SUBCASE("frozen reference value at test cost") {
    auto record = wrap_legacy(legacy, SaltSet{}, Pepper{}, cheap_fb2014());
    CHECK(to_hex(record.stored_value) ==
          "f6815a33946a6061727e3953c00b255755e0d254ada8167bcd7e256285537666");
  }
  SUBCASE("random plaintexts") {
    auto spec = cheap_fb2014();
    for (int i = 0; i < 100; ++i) {
      auto pw = random_password();
      auto salts = random_salts();
      auto pepper = random_pepper();
      auto record =
          wrap_legacy({"u", LegacyKind::kMd5Hex, md5(pw).hex()}, salts, pepper, spec);
      REQUIRE(record.stored_value == evaluate_chain(spec, pw, salts, pepper).value());
      REQUIRE(verify(spec, pw, record, pepper) == VerificationOutcome::kAccept);
    }
  }
  SUBCASE("deterministic") {
    auto salts = random_salts();
    auto pepper = random_pepper();
    CHECK(wrap_legacy(legacy, salts, pepper, cheap_fb2014()) ==
          wrap_legacy(legacy, salts, pepper, cheap_fb2014()));
  }
}

TEST_CASE("wrap_legacy validation") {
  auto salts = random_salts();
  CHECK(code_of([&] {
          wrap_legacy({"u", LegacyKind::kMd5Hex, std::string(32, 'z')}, salts, Pepper{},
                      cheap_fb2014());
        }) == Errc::kMalformedHex);
  CHECK(code_of([&] {
          wrap_legacy({"u", LegacyKind::kMd5Hex, "abc"}, salts, Pepper{}, cheap_fb2014());
        }) == Errc::kMalformedHex);
  CHECK(code_of([&] {
          wrap_legacy({"u", LegacyKind::kMd5Hex, std::string(32, 'A')}, salts, Pepper{},
                      cheap_fb2014());
        }) == Errc::kMalformedHex);
  CHECK(code_of([&] {
          wrap_legacy({"u", LegacyKind::kMd5Hex, md5("x").hex()}, salts, Pepper{},
                      sha256_v1_chain());
        }) == Errc::kIncompatibleSpec);
}

TEST_CASE("parse_legacy_line") {
  auto r = parse_legacy_line("bob:" + md5("pw").hex());
  CHECK(r.username == "bob");
  CHECK(r.legacy_value == md5("pw").hex());
  CHECK_THROWS_AS(parse_legacy_line("bob"), Error);
  CHECK_THROWS_AS(parse_legacy_line(":" + md5("pw").hex()), Error);
  CHECK_THROWS_AS(parse_legacy_line("bob:" + md5("pw").hex() + "\r"), Error);
  CHECK_THROWS_AS(parse_legacy_line("bob:notahexvalue"), Error);
}

TEST_CASE("upgrade_store") {
  TempDir dir;
  auto spec = cheap_fb2014();
  auto pepper = random_pepper();

  SUBCASE("three legacy records migrate and authenticate") {
    CredentialStore store(dir / "store", cheap_options());
    const std::pair<std::string, std::string> users[] = {
        {"alice", "alice-password"}, {"bob", "hunter2"}, {"carol", std::string(kCollisionA)}};
    for (const auto& [u, pw] : users) store.insert(legacy_record(u, pw));

    // legacy records verify through the md5 chain before migration
    CHECK(store.authenticate("bob", "hunter2", pepper) == VerificationOutcome::kAccept);

    auto report = upgrade_store(store, md5_legacy_chain(), spec, pepper);
    CHECK(report == MigrationReport{3, 0, 0});
    for (const auto& [u, pw] : users) {
      CHECK(store.find(u)->version == "fb2014");
      CHECK(store.authenticate(u, pw, pepper) == VerificationOutcome::kAccept);
      CHECK(store.authenticate(u, "not-" + pw, pepper) == VerificationOutcome::kReject);
    }
    // collision survives migration
    CHECK(store.authenticate("carol", kCollisionB, pepper) == VerificationOutcome::kAccept);

    SUBCASE("idempotent") {
      auto before = store.records();
      CHECK(upgrade_store(store, md5_legacy_chain(), spec, pepper) == MigrationReport{0, 3, 0});
      CHECK(store.records() == before);
    }
    SUBCASE("durable across reopen") {
      CredentialStore reopened(dir / "store", cheap_options());
      CHECK(reopened.authenticate("alice", "alice-password", pepper) ==
            VerificationOutcome::kAccept);
    }
  }

  SUBCASE("fresh salts per record") {
    CredentialStore store(dir / "store", cheap_options());
    store.insert(legacy_record("a", "same"));
    store.insert(legacy_record("b", "same"));
    upgrade_store(store, md5_legacy_chain(), spec, pepper);
    auto a = *store.find("a");
    auto b = *store.find("b");
    CHECK(a.salts != b.salts);
    CHECK(a.stored_value != b.stored_value);
  }

  SUBCASE("empty store") {
    CredentialStore store(dir / "store", cheap_options());
    CHECK(upgrade_store(store, md5_legacy_chain(), spec, pepper) == MigrationReport{0, 0, 0});
  }

  SUBCASE("mixed store") {
    CredentialStore store(dir / "store", cheap_options());
    store.create_account("current", "pw", spec, pepper);
    store.insert(legacy_record("old", "pw2"));
    CHECK(upgrade_store(store, md5_legacy_chain(), spec, pepper) == MigrationReport{1, 1, 0});
  }

  SUBCASE("incompatible versions leave the store untouched") {
    CredentialStore store(dir / "store", cheap_options());
    store.insert(legacy_record("old", "pw"));
    store.create_account("other", "pw", sha256_v1_chain(), pepper);
    auto before = store.records();
    CHECK(code_of([&] { upgrade_store(store, md5_legacy_chain(), spec, pepper); }) ==
          Errc::kIncompatibleVersions);
    CHECK(store.records() == before);
  }

  SUBCASE("only md5 -> md5-first upgrades") {
    CredentialStore store(dir / "store", cheap_options());
    CHECK(code_of([&] { upgrade_store(store, md5_legacy_chain(), sha256_v1_chain(), pepper); }) ==
          Errc::kIncompatibleSpec);
    CHECK(code_of([&] { upgrade_store(store, sha256_v1_chain(), spec, pepper); }) ==
          Errc::kIncompatibleSpec);
  }
}
