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

// Threshold Paillier (Damgard-Jurik with s = 1) with a trusted dealer.
//
// NOT production cryptography: arithmetic is not constant time, decryption
// shares carry no correctness proofs, and the dealer sees the secret key.
//
// The secret exponent d (d = 0 mod p'q', d = 1 mod N) is Shamir-shared over
// Z_{N p'q'} with threshold k among m parties. Party i publishes
// c_i = c^(2 Delta s_i); any k shares combine as
//   c' = prod c_i^(2 mu_i) = (1 + N)^(4 Delta^2 M),  Delta = m!,
// from which M = L(c') * (4 Delta^2)^-1 mod N.
//
// Encryption randomness r^N is drawn as h^a for a public h = x^N and a
// short random exponent a, evaluated with a fixed-base window table.

#ifndef PROTOFED_THRESHOLD_PAILLIER_H_
#define PROTOFED_THRESHOLD_PAILLIER_H_

#include <cstdint>
#include <memory>
#include <span>
#include <vector>

#include <gmpxx.h>

#include "protofed/mathcore.h"
#include "protofed/wire.h"

namespace protofed::crypto {

using BigInt = mpz_class;

// Precomputed base^(j * 2^(w i)) mod modulus for every window i and digit j.
class FixedBaseTable {
 public:
  FixedBaseTable(const BigInt& base, const BigInt& modulus, int exponent_bits,
                 int window_bits = 8);

  // base^exponent mod modulus; exponent must be < 2^exponent_bits.
  BigInt pow(const BigInt& exponent) const;

 private:
  BigInt modulus_;
  int exponent_bits_;
  int window_bits_;
  int windows_;
  std::vector<BigInt> table_;
};

struct PublicKey {
  BigInt n;
  BigInt n_squared;
  int threshold = 0;  // k: shares needed to decrypt
  int parties = 0;    // m
  BigInt delta;       // m!
  BigInt combine_inverse;  // (4 Delta^2)^-1 mod N
  BigInt randomizer_base;  // h = x^N mod N^2
  int randomizer_bits = 256;
  BigInt verification_base;               // v
  std::vector<BigInt> verification_keys;  // v^(Delta s_i), i = 1..m
  std::shared_ptr<const FixedBaseTable> randomizer_table;

  // Recomputes n_squared, delta, combine_inverse and the fixed-base table
  // from the primary fields.
  void finalize();
  std::uint64_t fingerprint() const;
  int bits() const { return static_cast<int>(mpz_sizeinbase(n.get_mpz_t(), 2)); }
};

struct KeyShare {
  int index = 0;  // 1..m
  BigInt value;
  std::uint64_t key_fingerprint = 0;
};

struct Ciphertext {
  BigInt value;
  friend bool operator==(const Ciphertext&, const Ciphertext&) = default;
};

struct DecryptionShare {
  int index = 0;
  BigInt value;
  friend bool operator==(const DecryptionShare&, const DecryptionShare&) = default;
};

struct ThresholdKeys {
  PublicKey public_key;
  std::vector<KeyShare> shares;
};

// Safe prime p = 2p' + 1 with exactly `bits` bits and the top two bits set.
BigInt generate_safe_prime(int bits, RngStream& rng, int max_windows = 20000);

// bits in {512, 1024, 2048}; 2 <= threshold <= parties.
ThresholdKeys keygen(int bits, int parties, int threshold, RngStream& rng);

Ciphertext encrypt(const PublicKey& pk, const BigInt& plaintext, RngStream& rng);
Ciphertext add(const PublicKey& pk, const Ciphertext& a, const Ciphertext& b);
DecryptionShare partial_decrypt(const PublicKey& pk, const Ciphertext& c,
                                const KeyShare& share);
// Uses the k lowest-indexed distinct shares.
BigInt combine(const PublicKey& pk, const Ciphertext& c,
               std::span<const DecryptionShare> shares);

// Length-prefixed big-endian magnitude.
void write_ciphertext(wire::Writer& w, const Ciphertext& c);
Ciphertext read_ciphertext(wire::Reader& r);

// Key material: 1-byte type tag, then length-prefixed big-endian integers.
inline constexpr std::uint8_t kPublicKeyTag = 0x01;
inline constexpr std::uint8_t kKeyShareTag = 0x02;
wire::Bytes serialize_public_key(const PublicKey& pk);
PublicKey deserialize_public_key(std::span<const std::uint8_t> bytes);
wire::Bytes serialize_key_share(const KeyShare& share);
KeyShare deserialize_key_share(std::span<const std::uint8_t> bytes);

// Signed reals as integers mod N: round(v * 2^f), negatives as N - |.|.
struct FixedPointCodec {
  int fractional_bits = 24;
  double value_bound = 1.0;  // V
  int max_summands = 1;      // s

  // Requires s * V * 2^f < N / 2.
  void validate(const PublicKey& pk) const;
};

BigInt encode_fixed(double v, const FixedPointCodec& codec, const PublicKey& pk);
double decode_fixed(const BigInt& p, const FixedPointCodec& codec,
                    const PublicKey& pk, int summands);

std::vector<Ciphertext> encrypt_vector(const PublicKey& pk, const Vec64& v,
                                       const FixedPointCodec& codec, RngStream& rng);
std::vector<Ciphertext> add_vectors(const PublicKey& pk,
                                    std::span<const Ciphertext> a,
                                    std::span<const Ciphertext> b);
std::vector<DecryptionShare> partial_decrypt_vector(const PublicKey& pk,
                                                    std::span<const Ciphertext> cs,
                                                    const KeyShare& share);
// shares_by_party[p][i] is party p's share of ciphertext i.
Vec64 combine_vector(const PublicKey& pk, std::span<const Ciphertext> cs,
                     std::span<const std::vector<DecryptionShare>> shares_by_party,
                     const FixedPointCodec& codec, int summands);
Vec64 decrypt_vector(const PublicKey& pk, std::span<const Ciphertext> cs,
                     std::span<const KeyShare> shares, const FixedPointCodec& codec,
                     int summands);

}  // namespace protofed::crypto

#endif  // PROTOFED_THRESHOLD_PAILLIER_H_
