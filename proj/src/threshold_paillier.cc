// Copyright 2026 The Protofed Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//      http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#include "protofed/threshold_paillier.h"

#include <algorithm>
#include <cmath>
#include <string>

namespace protofed::crypto {
namespace {

constexpr int kSieveWindow = 4096;
constexpr unsigned kSieveLimit = 1u << 16;

const std::vector<unsigned>& small_primes() {
  static const std::vector<unsigned> primes = [] {
    std::vector<bool> composite(kSieveLimit, false);
    std::vector<unsigned> out;
    for (unsigned i = 3; i < kSieveLimit; i += 2) {
      if (composite[i]) continue;
      out.push_back(i);
      for (unsigned long j = static_cast<unsigned long>(i) * i; j < kSieveLimit; j += 2 * i) {
        composite[j] = true;
      }
    }
    return out;
  }();
  return primes;
}

BigInt random_bits(RngStream& rng, int bits) {
  const int words = (bits + 63) / 64;
  std::vector<std::uint64_t> buf(static_cast<std::size_t>(words));
  for (auto& w : buf) w = rng.next_u64();
  BigInt out;
  mpz_import(out.get_mpz_t(), buf.size(), -1, sizeof(std::uint64_t), 0, 0, buf.data());
  const int excess = words * 64 - bits;
  if (excess > 0) mpz_fdiv_r_2exp(out.get_mpz_t(), out.get_mpz_t(), static_cast<mp_bitcnt_t>(bits));
  return out;
}

BigInt random_below(RngStream& rng, const BigInt& bound) {
  const int bits = static_cast<int>(mpz_sizeinbase(bound.get_mpz_t(), 2));
  while (true) {
    BigInt v = random_bits(rng, bits);
    if (v < bound) return v;
  }
}

BigInt random_unit(RngStream& rng, const BigInt& modulus) {
  while (true) {
    BigInt v = random_below(rng, modulus);
    if (v == 0) continue;
    BigInt g;
    mpz_gcd(g.get_mpz_t(), v.get_mpz_t(), modulus.get_mpz_t());
    if (g == 1) return v;
  }
}

BigInt powm(const BigInt& base, const BigInt& exp, const BigInt& mod) {
  BigInt out;
  mpz_powm(out.get_mpz_t(), base.get_mpz_t(), exp.get_mpz_t(), mod.get_mpz_t());
  return out;
}

BigInt mulmod(const BigInt& a, const BigInt& b, const BigInt& mod) {
  BigInt out = a * b;
  mpz_mod(out.get_mpz_t(), out.get_mpz_t(), mod.get_mpz_t());
  return out;
}

BigInt factorial(int n) {
  BigInt out;
  mpz_fac_ui(out.get_mpz_t(), static_cast<unsigned long>(n));
  return out;
}

std::uint64_t low_word(const BigInt& v, int limb) {
  if (static_cast<std::size_t>(limb) >= mpz_size(v.get_mpz_t())) return 0;
  return static_cast<std::uint64_t>(mpz_getlimbn(v.get_mpz_t(), limb));
}

void check_ciphertext(const PublicKey& pk, const Ciphertext& c) {
  if (sgn(c.value) <= 0 || c.value >= pk.n_squared) {
    throw Error(ErrorCode::kOutOfRange, "ciphertext outside [1, N^2)");
  }
}

}  // namespace

FixedBaseTable::FixedBaseTable(const BigInt& base, const BigInt& modulus,
                               int exponent_bits, int window_bits)
    : modulus_(modulus),
      exponent_bits_(exponent_bits),
      window_bits_(window_bits),
      windows_((exponent_bits + window_bits - 1) / window_bits) {
  if (window_bits <= 0 || window_bits > 16 || exponent_bits <= 0) {
    throw Error(ErrorCode::kInvalidArgument, "bad fixed-base table geometry");
  }
  const std::size_t digits = std::size_t{1} << window_bits;
  table_.resize(static_cast<std::size_t>(windows_) * digits);
  BigInt window_base = base % modulus;
  for (int i = 0; i < windows_; ++i) {
    BigInt* row = &table_[static_cast<std::size_t>(i) * digits];
    row[0] = 1;
    for (std::size_t j = 1; j < digits; ++j) row[j] = mulmod(row[j - 1], window_base, modulus_);
    // base^(2^(w (i+1))) = row[digits - 1] * window_base.
    window_base = mulmod(row[digits - 1], window_base, modulus_);
  }
}

BigInt FixedBaseTable::pow(const BigInt& exponent) const {
  if (sgn(exponent) < 0 ||
      mpz_sizeinbase(exponent.get_mpz_t(), 2) > static_cast<std::size_t>(exponent_bits_)) {
    throw Error(ErrorCode::kOutOfRange, "exponent exceeds fixed-base table range");
  }
  const std::size_t digits = std::size_t{1} << window_bits_;
  BigInt result = 1;
  bool first = true;
  for (int i = 0; i < windows_; ++i) {
    unsigned long digit = 0;
    for (int b = 0; b < window_bits_; ++b) {
      digit |= static_cast<unsigned long>(
                   mpz_tstbit(exponent.get_mpz_t(),
                              static_cast<mp_bitcnt_t>(i * window_bits_ + b)))
               << b;
    }
    if (digit == 0) continue;
    const BigInt& entry = table_[static_cast<std::size_t>(i) * digits + digit];
    if (first) {
      result = entry;
      first = false;
    } else {
      result = mulmod(result, entry, modulus_);
    }
  }
  return result;
}

void PublicKey::finalize() {
  if (sgn(n) <= 0) throw Error(ErrorCode::kInvalidArgument, "public key without modulus");
  if (threshold < 2 || threshold > parties) {
    throw Error(ErrorCode::kInvalidConfig, "threshold must satisfy 2 <= k <= m");
  }
  n_squared = n * n;
  delta = factorial(parties);
  const BigInt four_delta_sq = 4 * delta * delta;
  if (mpz_invert(combine_inverse.get_mpz_t(), four_delta_sq.get_mpz_t(), n.get_mpz_t()) == 0) {
    throw Error(ErrorCode::kInvalidArgument, "4 Delta^2 not invertible mod N");
  }
  randomizer_table =
      std::make_shared<const FixedBaseTable>(randomizer_base, n_squared, randomizer_bits);
}

std::uint64_t PublicKey::fingerprint() const {
  return low_word(n, 0) ^ (low_word(n, 1) * 0x9e3779b97f4a7c15ULL) ^
         static_cast<std::uint64_t>(mpz_sizeinbase(n.get_mpz_t(), 2));
}

BigInt generate_safe_prime(int bits, RngStream& rng, int max_windows) {
  if (bits < 16) throw Error(ErrorCode::kInvalidArgument, "safe prime too small");
  const int qbits = bits - 1;
  const auto& primes = small_primes();
  std::vector<char> alive(kSieveWindow);
  for (int window = 0; window < max_windows; ++window) {
    BigInt q0 = random_bits(rng, qbits);
    mpz_setbit(q0.get_mpz_t(), static_cast<mp_bitcnt_t>(qbits - 1));
    mpz_setbit(q0.get_mpz_t(), static_cast<mp_bitcnt_t>(qbits - 2));
    mpz_setbit(q0.get_mpz_t(), 0);
    std::fill(alive.begin(), alive.end(), 1);
    // Strike offsets i where q0 + 2i or 2(q0 + 2i) + 1 has a small factor.
    for (unsigned ell : primes) {
      if (static_cast<unsigned>(qbits) < 20 && ell * 4ul > (1ul << (qbits - 2))) break;
      const unsigned long r = mpz_fdiv_ui(q0.get_mpz_t(), ell);
      const unsigned long inv2 = (ell + 1) / 2;
      for (unsigned long target : {0ul, static_cast<unsigned long>((ell - 1) / 2)}) {
        unsigned long i0 = ((target + ell - r) % ell) * inv2 % ell;
        for (unsigned long i = i0; i < static_cast<unsigned long>(kSieveWindow); i += ell) {
          alive[i] = 0;
        }
      }
    }
    for (int i = 0; i < kSieveWindow; ++i) {
      if (!alive[static_cast<std::size_t>(i)]) continue;
      const BigInt q = q0 + 2 * i;
      if (mpz_sizeinbase(q.get_mpz_t(), 2) != static_cast<std::size_t>(qbits)) break;
      const BigInt p = 2 * q + 1;
      if (powm(2, p - 1, p) != 1) continue;
      if (mpz_probab_prime_p(q.get_mpz_t(), 25) == 0) continue;
      if (mpz_probab_prime_p(p.get_mpz_t(), 25) == 0) continue;
      return p;
    }
  }
  throw Error(ErrorCode::kPrimeGenerationTimeout,
              "no " + std::to_string(bits) + "-bit safe prime after " +
                  std::to_string(max_windows) + " sieve windows");
}

ThresholdKeys keygen(int bits, int parties, int threshold, RngStream& rng) {
  if (bits != 512 && bits != 1024 && bits != 2048) {
    throw Error(ErrorCode::kInvalidConfig,
                "modulus size must be 512, 1024 or 2048 bits, got " + std::to_string(bits));
  }
  if (threshold < 2 || threshold > parties) {
    throw Error(ErrorCode::kInvalidConfig,
                "threshold must satisfy 2 <= k <= m (k=" + std::to_string(threshold) +
                    ", m=" + std::to_string(parties) + ")");
  }
  BigInt p = generate_safe_prime(bits / 2, rng);
  BigInt q;
  do {
    q = generate_safe_prime(bits / 2, rng);
  } while (q == p);
  const BigInt pp = (p - 1) / 2;
  const BigInt qq = (q - 1) / 2;
  const BigInt m_prime = pp * qq;

  ThresholdKeys keys;
  PublicKey& pk = keys.public_key;
  pk.n = p * q;
  pk.threshold = threshold;
  pk.parties = parties;
  const BigInt n_sq = pk.n * pk.n;
  pk.randomizer_base = powm(random_unit(rng, pk.n), pk.n, n_sq);
  pk.finalize();

  // d = 0 mod m', d = 1 mod N.
  BigInt m_prime_inv;
  mpz_invert(m_prime_inv.get_mpz_t(), m_prime.get_mpz_t(), pk.n.get_mpz_t());
  const BigInt share_modulus = pk.n * m_prime;
  BigInt d = m_prime * m_prime_inv;
  mpz_mod(d.get_mpz_t(), d.get_mpz_t(), share_modulus.get_mpz_t());

  std::vector<BigInt> coeffs{d};
  for (int i = 1; i < threshold; ++i) coeffs.push_back(random_below(rng, share_modulus));

  const BigInt r = random_unit(rng, pk.n_squared);
  pk.verification_base = mulmod(r, r, pk.n_squared);
  const std::uint64_t fp = pk.fingerprint();
  for (int i = 1; i <= parties; ++i) {
    // Horner evaluation of f(i) mod N m'.
    BigInt value = 0;
    for (auto it = coeffs.rbegin(); it != coeffs.rend(); ++it) {
      value = value * i + *it;
      mpz_mod(value.get_mpz_t(), value.get_mpz_t(), share_modulus.get_mpz_t());
    }
    pk.verification_keys.push_back(
        powm(pk.verification_base, pk.delta * value, pk.n_squared));
    keys.shares.push_back(KeyShare{i, value, fp});
  }
  return keys;
}

Ciphertext encrypt(const PublicKey& pk, const BigInt& plaintext, RngStream& rng) {
  if (sgn(plaintext) < 0 || plaintext >= pk.n) {
    throw Error(ErrorCode::kOutOfRange, "plaintext outside [0, N)");
  }
  const BigInt noise = pk.randomizer_table->pow(random_bits(rng, pk.randomizer_bits));
  // (1 + N)^M = 1 + M N mod N^2.
  const BigInt g_m = 1 + plaintext * pk.n;
  return Ciphertext{mulmod(g_m, noise, pk.n_squared)};
}

Ciphertext add(const PublicKey& pk, const Ciphertext& a, const Ciphertext& b) {
  return Ciphertext{mulmod(a.value, b.value, pk.n_squared)};
}

DecryptionShare partial_decrypt(const PublicKey& pk, const Ciphertext& c,
                                const KeyShare& share) {
  if (share.key_fingerprint != pk.fingerprint()) {
    throw Error(ErrorCode::kKeyMismatch, "key share was not issued under this public key");
  }
  if (share.index < 1 || share.index > pk.parties) {
    throw Error(ErrorCode::kKeyMismatch, "key share index out of range");
  }
  check_ciphertext(pk, c);
  return DecryptionShare{share.index, powm(c.value, 2 * pk.delta * share.value, pk.n_squared)};
}

BigInt combine(const PublicKey& pk, const Ciphertext& c,
               std::span<const DecryptionShare> shares) {
  check_ciphertext(pk, c);
  std::vector<const DecryptionShare*> chosen;
  for (const auto& s : shares) {
    if (s.index < 1 || s.index > pk.parties) {
      throw Error(ErrorCode::kCombinationFailure, "decryption share index out of range");
    }
    const bool dup = std::any_of(chosen.begin(), chosen.end(),
                                 [&](const DecryptionShare* o) { return o->index == s.index; });
    if (!dup) chosen.push_back(&s);
  }
  if (static_cast<int>(chosen.size()) < pk.threshold) {
    throw Error(ErrorCode::kThresholdUnmet,
                "need " + std::to_string(pk.threshold) + " distinct decryption shares, got " +
                    std::to_string(chosen.size()));
  }
  std::sort(chosen.begin(), chosen.end(),
            [](const DecryptionShare* a, const DecryptionShare* b) { return a->index < b->index; });
  chosen.resize(static_cast<std::size_t>(pk.threshold));

  BigInt acc = 1;
  for (const DecryptionShare* si : chosen) {
    BigInt num = pk.delta;
    BigInt den = 1;
    for (const DecryptionShare* sj : chosen) {
      if (sj == si) continue;
      num *= sj->index;
      den *= sj->index - si->index;
    }
    BigInt mu;
    mpz_divexact(mu.get_mpz_t(), num.get_mpz_t(), den.get_mpz_t());
    BigInt base = si->value;
    BigInt exponent = 2 * mu;
    if (sgn(exponent) < 0) {
      if (mpz_invert(base.get_mpz_t(), base.get_mpz_t(), pk.n_squared.get_mpz_t()) == 0) {
        throw Error(ErrorCode::kCombinationFailure, "decryption share not invertible");
      }
      exponent = -exponent;
    }
    acc = mulmod(acc, powm(base, exponent, pk.n_squared), pk.n_squared);
  }
  BigInt rem;
  mpz_fdiv_r(rem.get_mpz_t(), acc.get_mpz_t(), pk.n.get_mpz_t());
  if (rem != 1) {
    throw Error(ErrorCode::kCombinationFailure, "decryption shares are inconsistent");
  }
  BigInt l = (acc - 1) / pk.n;
  return mulmod(l, pk.combine_inverse, pk.n);
}

void write_ciphertext(wire::Writer& w, const Ciphertext& c) { w.bigint(c.value); }

Ciphertext read_ciphertext(wire::Reader& r) { return Ciphertext{r.bigint()}; }

wire::Bytes serialize_public_key(const PublicKey& pk) {
  wire::Writer w;
  w.u8(kPublicKeyTag);
  w.bigint(pk.n);
  w.bigint(pk.threshold);
  w.bigint(pk.parties);
  w.bigint(pk.randomizer_bits);
  w.bigint(pk.randomizer_base);
  w.bigint(pk.verification_base);
  w.bigint(static_cast<unsigned long>(pk.verification_keys.size()));
  for (const auto& vk : pk.verification_keys) w.bigint(vk);
  return w.take();
}

PublicKey deserialize_public_key(std::span<const std::uint8_t> bytes) {
  wire::Reader r(bytes);
  if (r.u8() != kPublicKeyTag) throw Error(ErrorCode::kDecode, "not a public key");
  PublicKey pk;
  pk.n = r.bigint();
  pk.threshold = static_cast<int>(r.bigint().get_ui());
  pk.parties = static_cast<int>(r.bigint().get_ui());
  pk.randomizer_bits = static_cast<int>(r.bigint().get_ui());
  pk.randomizer_base = r.bigint();
  pk.verification_base = r.bigint();
  const auto count = r.bigint().get_ui();
  if (count > 4096) throw Error(ErrorCode::kDecode, "implausible verification key count");
  for (unsigned long i = 0; i < count; ++i) pk.verification_keys.push_back(r.bigint());
  r.expect_end();
  pk.finalize();
  return pk;
}

wire::Bytes serialize_key_share(const KeyShare& share) {
  wire::Writer w;
  w.u8(kKeyShareTag);
  w.bigint(share.index);
  w.bigint(share.value);
  w.bigint(mpz_class(static_cast<unsigned long>(share.key_fingerprint)));
  return w.take();
}

KeyShare deserialize_key_share(std::span<const std::uint8_t> bytes) {
  wire::Reader r(bytes);
  if (r.u8() != kKeyShareTag) throw Error(ErrorCode::kDecode, "not a key share");
  KeyShare s;
  s.index = static_cast<int>(r.bigint().get_ui());
  s.value = r.bigint();
  s.key_fingerprint = r.bigint().get_ui();
  r.expect_end();
  return s;
}

void FixedPointCodec::validate(const PublicKey& pk) const {
  if (fractional_bits < 0 || fractional_bits > 52) {
    throw Error(ErrorCode::kInvalidConfig, "fractional bits must lie in [0, 52]");
  }
  if (!(value_bound > 0.0) || !std::isfinite(value_bound) || max_summands < 1) {
    throw Error(ErrorCode::kInvalidConfig, "codec bound and summands must be positive");
  }
  BigInt scaled;
  mpz_set_d(scaled.get_mpz_t(), std::ceil(std::ldexp(value_bound, fractional_bits)));
  if (2 * max_summands * scaled >= pk.n) {
    throw Error(ErrorCode::kInvalidConfig, "codec range s * V * 2^f must stay below N / 2");
  }
}

BigInt encode_fixed(double v, const FixedPointCodec& codec, const PublicKey& pk) {
  if (!std::isfinite(v) || std::abs(v) > codec.value_bound) {
    throw Error(ErrorCode::kOutOfRange,
                "value " + std::to_string(v) + " exceeds codec bound " +
                    std::to_string(codec.value_bound));
  }
  BigInt out;
  mpz_set_d(out.get_mpz_t(), std::round(std::ldexp(v, codec.fractional_bits)));
  if (sgn(out) < 0) out += pk.n;
  return out;
}

double decode_fixed(const BigInt& p, const FixedPointCodec& codec, const PublicKey& pk,
                    int summands) {
  BigInt signed_value = p;
  if (2 * p > pk.n) signed_value -= pk.n;
  // Each encoding rounds by at most 1/2 unit.
  BigInt limit;
  mpz_set_d(limit.get_mpz_t(),
            std::ceil(summands * (std::ldexp(codec.value_bound, codec.fractional_bits) + 0.5)));
  if (abs(signed_value) > limit) {
    throw Error(ErrorCode::kWraparound, "decoded magnitude exceeds s * V; plaintext wrapped");
  }
  return std::ldexp(signed_value.get_d(), -codec.fractional_bits);
}

std::vector<Ciphertext> encrypt_vector(const PublicKey& pk, const Vec64& v,
                                       const FixedPointCodec& codec, RngStream& rng) {
  std::vector<Ciphertext> out;
  out.reserve(static_cast<std::size_t>(v.size()));
  for (Eigen::Index i = 0; i < v.size(); ++i) {
    try {
      out.push_back(encrypt(pk, encode_fixed(v[i], codec, pk), rng));
    } catch (const Error& e) {
      throw Error(e.code(), "coordinate " + std::to_string(i) + ": " + e.what());
    }
  }
  return out;
}

std::vector<Ciphertext> add_vectors(const PublicKey& pk, std::span<const Ciphertext> a,
                                    std::span<const Ciphertext> b) {
  if (a.size() != b.size()) {
    throw Error(ErrorCode::kDimensionMismatch, "ciphertext vector length mismatch");
  }
  std::vector<Ciphertext> out;
  out.reserve(a.size());
  for (std::size_t i = 0; i < a.size(); ++i) out.push_back(add(pk, a[i], b[i]));
  return out;
}

std::vector<DecryptionShare> partial_decrypt_vector(const PublicKey& pk,
                                                    std::span<const Ciphertext> cs,
                                                    const KeyShare& share) {
  std::vector<DecryptionShare> out;
  out.reserve(cs.size());
  for (const auto& c : cs) out.push_back(partial_decrypt(pk, c, share));
  return out;
}

Vec64 combine_vector(const PublicKey& pk, std::span<const Ciphertext> cs,
                     std::span<const std::vector<DecryptionShare>> shares_by_party,
                     const FixedPointCodec& codec, int summands) {
  Vec64 out(static_cast<Eigen::Index>(cs.size()));
  std::vector<DecryptionShare> column(shares_by_party.size());
  for (const auto& party : shares_by_party) {
    if (party.size() != cs.size()) {
      throw Error(ErrorCode::kCombinationFailure, "share vector length mismatch");
    }
  }
  for (std::size_t i = 0; i < cs.size(); ++i) {
    for (std::size_t p = 0; p < shares_by_party.size(); ++p) column[p] = shares_by_party[p][i];
    try {
      out[static_cast<Eigen::Index>(i)] =
          decode_fixed(combine(pk, cs[i], column), codec, pk, summands);
    } catch (const Error& e) {
      throw Error(e.code(), "coordinate " + std::to_string(i) + ": " + e.what());
    }
  }
  return out;
}

Vec64 decrypt_vector(const PublicKey& pk, std::span<const Ciphertext> cs,
                     std::span<const KeyShare> shares, const FixedPointCodec& codec,
                     int summands) {
  std::vector<std::vector<DecryptionShare>> by_party;
  for (const auto& s : shares) by_party.push_back(partial_decrypt_vector(pk, cs, s));
  return combine_vector(pk, cs, by_party, codec, summands);
}

}  // namespace protofed::crypto
