#include <doctest.h>

#include <random>

#include "fishnet/crypto.hpp"
#include "fishnet/hex.hpp"
#include "fishnet/keccak.hpp"

using namespace fishnet;

TEST_CASE("key pairs have the documented wire sizes") {
  auto key = crypto::generate_keypair();
  CHECK(key.private_key.size() == 48);
  CHECK(key.public_key.size() == 97);
  CHECK(key.public_key[0] == 0x04);  // uncompressed point marker
  CHECK(key.public_hex().size() == 194);
  CHECK(key.private_hex().size() == 96);
}

TEST_CASE("seeded key generation is deterministic, unseeded is not") {
  auto a = crypto::generate_keypair("fixture-seed");
  auto b = crypto::generate_keypair("fixture-seed");
  auto c = crypto::generate_keypair("other-seed");
  CHECK(a.private_key == b.private_key);
  CHECK(a.public_key == b.public_key);
  CHECK(a.private_key != c.private_key);
  CHECK(crypto::generate_keypair().private_key !=
        crypto::generate_keypair().private_key);
}

TEST_CASE("from_private_hex recovers the full pair") {
  auto key = crypto::generate_keypair("roundtrip");
  auto restored = crypto::KeyPair::from_private_hex(key.private_hex());
  CHECK(restored.private_key == key.private_key);
  CHECK(restored.public_key == key.public_key);
}

TEST_CASE("sign/verify round-trips") {
  auto key = crypto::generate_keypair("signer");
  std::mt19937_64 rng(11);
  for (int trial = 0; trial < 25; ++trial) {
    std::string message = "message " + std::to_string(rng());
    auto digest = keccak256(message);
    auto signature = crypto::sign_digest(key, digest);
    CHECK(signature.size() == 96);
    CHECK(crypto::verify_digest(key.public_key, digest, signature));
  }
}

TEST_CASE("signatures are deterministic per (key, digest)") {
  auto key = crypto::generate_keypair("deterministic");
  auto digest = keccak256(std::string_view{"fixed message"});
  CHECK(crypto::sign_digest(key, digest) == crypto::sign_digest(key, digest));
}

TEST_CASE("verification fails for the wrong key, digest, or signature") {
  auto key = crypto::generate_keypair("honest");
  auto other = crypto::generate_keypair("impostor");
  auto digest = keccak256(std::string_view{"original"});
  auto signature = crypto::sign_digest(key, digest);

  CHECK_FALSE(crypto::verify_digest(other.public_key, digest, signature));
  CHECK_FALSE(crypto::verify_digest(
      key.public_key, keccak256(std::string_view{"tampered"}), signature));

  auto flipped = signature;
  flipped[40] ^= 0x01;
  CHECK_FALSE(crypto::verify_digest(key.public_key, digest, flipped));
}

TEST_CASE("verification tolerates malformed input without throwing") {
  auto key = crypto::generate_keypair("robust");
  auto digest = keccak256(std::string_view{"x"});
  std::vector<std::uint8_t> junk(96, 0x00);
  CHECK_FALSE(crypto::verify_digest(key.public_key, digest, junk));
  CHECK_FALSE(crypto::verify_digest(key.public_key, digest,
                                    std::vector<std::uint8_t>(5, 0x01)));
  std::vector<std::uint8_t> bad_point(97, 0x02);
  auto signature = crypto::sign_digest(key, digest);
  CHECK_FALSE(crypto::verify_digest(bad_point, digest, signature));
  CHECK_FALSE(crypto::verify_digest_hex("zz", digest_hex(digest),
                                        hex_encode(signature)));
}

TEST_CASE("seeded nonce rng reproduces, unseeded diverges") {
  crypto::NonceRng a(5), b(5), c(6);
  CHECK(a.next() == b.next());
  CHECK(a.next() == b.next());
  CHECK(a.next() != c.next());
}
