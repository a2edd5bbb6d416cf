#include "fishnet/crypto.hpp"

#include <openssl/bn.h>
#include <openssl/ec.h>
#include <openssl/evp.h>
#include <openssl/obj_mac.h>
#include <openssl/param_build.h>
#include <openssl/rand.h>

#include <cstring>
#include <memory>
#include <mutex>

#include "fishnet/hex.hpp"

namespace fishnet::crypto {

namespace {

constexpr std::size_t kScalarBytes = 48;   // P-384 field/order size
constexpr std::size_t kPointBytes = 97;    // 0x04 || X || Y
constexpr std::size_t kSignatureBytes = 96;

struct BnDeleter {
  void operator()(BIGNUM* p) const { BN_free(p); }
};
struct BnCtxDeleter {
  void operator()(BN_CTX* p) const { BN_CTX_free(p); }
};
struct PointDeleter {
  void operator()(EC_POINT* p) const { EC_POINT_free(p); }
};
using BnPtr = std::unique_ptr<BIGNUM, BnDeleter>;
using BnCtxPtr = std::unique_ptr<BN_CTX, BnCtxDeleter>;
using PointPtr = std::unique_ptr<EC_POINT, PointDeleter>;

const EC_GROUP* group() {
  static EC_GROUP* g = [] {
    EC_GROUP* grp = EC_GROUP_new_by_curve_name(NID_secp384r1);
    if (!grp) throw CryptoError("cannot construct P-384 group");
    return grp;
  }();
  return g;
}

const BIGNUM* order() {
  static BIGNUM* n = [] {
    BIGNUM* v = BN_new();
    BnCtxPtr ctx(BN_CTX_new());
    if (!v || !EC_GROUP_get_order(group(), v, ctx.get()))
      throw CryptoError("cannot read P-384 order");
    return v;
  }();
  return n;
}

BnPtr bn_from_bytes(std::span<const std::uint8_t> bytes) {
  BnPtr v(BN_bin2bn(bytes.data(), static_cast<int>(bytes.size()), nullptr));
  if (!v) throw CryptoError("BN_bin2bn failed");
  return v;
}

std::vector<std::uint8_t> bn_to_fixed(const BIGNUM* v, std::size_t len) {
  std::vector<std::uint8_t> out(len, 0);
  if (BN_bn2binpad(v, out.data(), static_cast<int>(len)) < 0)
    throw CryptoError("BN_bn2binpad failed");
  return out;
}

std::vector<std::uint8_t> hmac_sha384(std::span<const std::uint8_t> key,
                                      std::span<const std::uint8_t> msg) {
  static EVP_MAC* mac = EVP_MAC_fetch(nullptr, "HMAC", nullptr);
  if (!mac) throw CryptoError("HMAC fetch failed");
  std::unique_ptr<EVP_MAC_CTX, decltype(&EVP_MAC_CTX_free)> ctx(
      EVP_MAC_CTX_new(mac), EVP_MAC_CTX_free);
  if (!ctx) throw CryptoError("HMAC ctx alloc failed");
  char digest_name[] = "SHA-384";
  OSSL_PARAM params[] = {
      OSSL_PARAM_construct_utf8_string("digest", digest_name, 0),
      OSSL_PARAM_construct_end()};
  if (!EVP_MAC_init(ctx.get(), key.data(), key.size(), params) ||
      !EVP_MAC_update(ctx.get(), msg.data(), msg.size()))
    throw CryptoError("HMAC failed");
  std::vector<std::uint8_t> out(48);
  std::size_t outlen = 0;
  if (!EVP_MAC_final(ctx.get(), out.data(), &outlen, out.size()))
    throw CryptoError("HMAC final failed");
  out.resize(outlen);
  return out;
}

std::vector<std::uint8_t> concat(std::initializer_list<std::span<const std::uint8_t>> parts) {
  std::vector<std::uint8_t> out;
  for (auto p : parts) out.insert(out.end(), p.begin(), p.end());
  return out;
}

// RFC 6979 HMAC-DRBG nonce derivation with SHA-384. `x` is the private
// scalar, `h` the 32-byte message digest. Yields candidates until the caller
// accepts one; `bump` advances the generator between candidates.
class DeterministicNonce {
 public:
  DeterministicNonce(std::span<const std::uint8_t> x,
                     std::span<const std::uint8_t> h) {
    v_.assign(48, 0x01);
    k_.assign(48, 0x00);
    // bits2octets(h1): reduce mod n, pad to order length.
    BnPtr z = bn_from_bytes(h);
    BnCtxPtr ctx(BN_CTX_new());
    BnPtr zmod(BN_new());
    BN_mod(zmod.get(), z.get(), order(), ctx.get());
    auto h_oct = bn_to_fixed(zmod.get(), kScalarBytes);

    std::uint8_t zero = 0x00, one = 0x01;
    k_ = hmac_sha384(k_, concat({v_, {&zero, 1}, x, h_oct}));
    v_ = hmac_sha384(k_, v_);
    k_ = hmac_sha384(k_, concat({v_, {&one, 1}, x, h_oct}));
    v_ = hmac_sha384(k_, v_);
  }

  BnPtr candidate() {
    v_ = hmac_sha384(k_, v_);
    return bn_from_bytes(v_);  // 384 bits == qlen, no truncation needed
  }

  void bump() {
    std::uint8_t zero = 0x00;
    k_ = hmac_sha384(k_, concat({v_, {&zero, 1}}));
    v_ = hmac_sha384(k_, v_);
  }

 private:
  std::vector<std::uint8_t> v_;
  std::vector<std::uint8_t> k_;
};

std::vector<std::uint8_t> public_from_scalar(const BIGNUM* d) {
  BnCtxPtr ctx(BN_CTX_new());
  PointPtr q(EC_POINT_new(group()));
  if (!q || !EC_POINT_mul(group(), q.get(), d, nullptr, nullptr, ctx.get()))
    throw CryptoError("scalar multiplication failed");
  std::vector<std::uint8_t> out(kPointBytes);
  std::size_t n = EC_POINT_point2oct(group(), q.get(),
                                     POINT_CONVERSION_UNCOMPRESSED, out.data(),
                                     out.size(), ctx.get());
  if (n != kPointBytes) throw CryptoError("point serialization failed");
  return out;
}

KeyPair keypair_from_scalar(BnPtr d) {
  KeyPair kp;
  kp.private_key = bn_to_fixed(d.get(), kScalarBytes);
  kp.public_key = public_from_scalar(d.get());
  return kp;
}

// Maps arbitrary entropy onto a valid scalar in [1, n-1].
BnPtr scalar_from_entropy(std::span<const std::uint8_t> entropy) {
  BnCtxPtr ctx(BN_CTX_new());
  BnPtr n_minus_1(BN_dup(order()));
  BN_sub_word(n_minus_1.get(), 1);
  BnPtr v = bn_from_bytes(entropy);
  BnPtr d(BN_new());
  BN_mod(d.get(), v.get(), n_minus_1.get(), ctx.get());
  BN_add_word(d.get(), 1);
  return d;
}

}  // namespace

std::string KeyPair::public_hex() const { return hex_encode(public_key); }
std::string KeyPair::private_hex() const { return hex_encode(private_key); }

KeyPair KeyPair::from_private_hex(std::string_view hex) {
  auto bytes = hex_decode(hex);
  if (!bytes || bytes->size() != kScalarBytes)
    throw CryptoError("private key must be 48 bytes of hex");
  BnPtr d = bn_from_bytes(*bytes);
  if (BN_is_zero(d.get()) || BN_cmp(d.get(), order()) >= 0)
    throw CryptoError("private scalar out of range");
  return keypair_from_scalar(std::move(d));
}

KeyPair generate_keypair() {
  std::uint8_t entropy[72];
  if (RAND_bytes(entropy, sizeof entropy) != 1)
    throw CryptoError("RAND_bytes failed");
  return keypair_from_scalar(scalar_from_entropy(entropy));
}

KeyPair generate_keypair(std::span<const std::uint8_t> seed) {
  // Expand the seed through HMAC so short seeds still cover the scalar range.
  std::uint8_t label0 = 0, label1 = 1;
  auto a = hmac_sha384(seed, {&label0, 1});
  auto b = hmac_sha384(seed, {&label1, 1});
  auto entropy = concat({a, b});
  return keypair_from_scalar(scalar_from_entropy(entropy));
}

KeyPair generate_keypair(std::string_view seed) {
  return generate_keypair(std::span<const std::uint8_t>(
      reinterpret_cast<const std::uint8_t*>(seed.data()), seed.size()));
}

std::vector<std::uint8_t> sign_digest(const KeyPair& key,
                                      const Digest& digest) {
  if (key.private_key.size() != kScalarBytes)
    throw CryptoError("malformed private key");
  BnCtxPtr ctx(BN_CTX_new());
  BnPtr d = bn_from_bytes(key.private_key);
  BnPtr z = bn_from_bytes(digest);

  DeterministicNonce nonce(key.private_key, digest);
  for (;;) {
    BnPtr k = nonce.candidate();
    if (BN_is_zero(k.get()) || BN_cmp(k.get(), order()) >= 0) {
      nonce.bump();
      continue;
    }
    PointPtr R(EC_POINT_new(group()));
    if (!EC_POINT_mul(group(), R.get(), k.get(), nullptr, nullptr, ctx.get()))
      throw CryptoError("nonce point failed");
    BnPtr rx(BN_new());
    if (!EC_POINT_get_affine_coordinates(group(), R.get(), rx.get(), nullptr,
                                         ctx.get()))
      throw CryptoError("affine coordinates failed");
    BnPtr r(BN_new());
    BN_mod(r.get(), rx.get(), order(), ctx.get());
    if (BN_is_zero(r.get())) {
      nonce.bump();
      continue;
    }
    // s = k^-1 (z + r d) mod n
    BnPtr kinv(BN_mod_inverse(nullptr, k.get(), order(), ctx.get()));
    BnPtr s(BN_new());
    BnPtr tmp(BN_new());
    BN_mod_mul(tmp.get(), r.get(), d.get(), order(), ctx.get());
    BN_mod_add(tmp.get(), tmp.get(), z.get(), order(), ctx.get());
    BN_mod_mul(s.get(), kinv.get(), tmp.get(), order(), ctx.get());
    if (BN_is_zero(s.get())) {
      nonce.bump();
      continue;
    }
    auto rb = bn_to_fixed(r.get(), kScalarBytes);
    auto sb = bn_to_fixed(s.get(), kScalarBytes);
    return concat({rb, sb});
  }
}

bool verify_digest(std::span<const std::uint8_t> public_key,
                   const Digest& digest,
                   std::span<const std::uint8_t> signature) {
  if (public_key.size() != kPointBytes || signature.size() != kSignatureBytes)
    return false;
  BnCtxPtr ctx(BN_CTX_new());
  PointPtr q(EC_POINT_new(group()));
  if (!q || !EC_POINT_oct2point(group(), q.get(), public_key.data(),
                                public_key.size(), ctx.get()))
    return false;
  BnPtr r = bn_from_bytes(signature.subspan(0, kScalarBytes));
  BnPtr s = bn_from_bytes(signature.subspan(kScalarBytes));
  if (BN_is_zero(r.get()) || BN_is_zero(s.get()) ||
      BN_cmp(r.get(), order()) >= 0 || BN_cmp(s.get(), order()) >= 0)
    return false;
  BnPtr z = bn_from_bytes(digest);
  BnPtr w(BN_mod_inverse(nullptr, s.get(), order(), ctx.get()));
  if (!w) return false;
  BnPtr u1(BN_new());
  BnPtr u2(BN_new());
  BN_mod_mul(u1.get(), z.get(), w.get(), order(), ctx.get());
  BN_mod_mul(u2.get(), r.get(), w.get(), order(), ctx.get());
  PointPtr R(EC_POINT_new(group()));
  if (!EC_POINT_mul(group(), R.get(), u1.get(), q.get(), u2.get(), ctx.get()))
    return false;
  if (EC_POINT_is_at_infinity(group(), R.get())) return false;
  BnPtr rx(BN_new());
  if (!EC_POINT_get_affine_coordinates(group(), R.get(), rx.get(), nullptr,
                                       ctx.get()))
    return false;
  BnPtr v(BN_new());
  BN_mod(v.get(), rx.get(), order(), ctx.get());
  return BN_cmp(v.get(), r.get()) == 0;
}

bool verify_digest_hex(std::string_view public_key_hex,
                       std::string_view digest_hex,
                       std::string_view signature_hex) {
  auto pk = hex_decode(public_key_hex);
  auto dg = hex_decode(digest_hex);
  auto sig = hex_decode(signature_hex);
  if (!pk || !dg || !sig || dg->size() != 32) return false;
  Digest d;
  std::memcpy(d.data(), dg->data(), 32);
  return verify_digest(*pk, d, *sig);
}

// xoshiro256** seeded through splitmix64.
namespace {
std::uint64_t splitmix64(std::uint64_t& x) {
  x += 0x9e3779b97f4a7c15ULL;
  std::uint64_t z = x;
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}
}  // namespace

NonceRng::NonceRng(std::optional<std::uint64_t> seed) {
  std::uint64_t s;
  if (seed) {
    s = *seed;
  } else {
    std::uint8_t buf[8];
    if (RAND_bytes(buf, sizeof buf) != 1)
      throw CryptoError("RAND_bytes failed");
    std::memcpy(&s, buf, 8);
  }
  for (auto& lane : state_) lane = splitmix64(s);
}

std::array<std::uint8_t, 32> NonceRng::next() {
  auto rotl = [](std::uint64_t v, int n) {
    return (v << n) | (v >> (64 - n));
  };
  std::array<std::uint8_t, 32> out;
  for (int i = 0; i < 4; ++i) {
    std::uint64_t result = rotl(state_[1] * 5, 7) * 9;
    std::uint64_t t = state_[1] << 17;
    state_[2] ^= state_[0];
    state_[3] ^= state_[1];
    state_[1] ^= state_[2];
    state_[0] ^= state_[3];
    state_[2] ^= t;
    state_[3] = rotl(state_[3], 45);
    std::memcpy(out.data() + i * 8, &result, 8);
  }
  return out;
}

}  // namespace fishnet::crypto
