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
#include <memory>
#include <set>
#include <vector>

#include <gtest/gtest.h>

#include "protofed/model.h"
#include "test_support.h"

namespace protofed::crypto {
namespace {

class ThresholdPaillierTest : public ::testing::Test {
 protected:
  static void SetUpTestSuite() {
    RngStream rng(2026, 0x11);
    keys_ = std::make_unique<ThresholdKeys>(keygen(512, 5, 3, rng));
  }
  static void TearDownTestSuite() { keys_.reset(); }

  static const PublicKey& pk() { return keys_->public_key; }
  static const std::vector<KeyShare>& shares() { return keys_->shares; }

  // Decrypts with the parties at the given 0-based positions.
  static BigInt decrypt_with(const Ciphertext& c, const std::vector<int>& parties) {
    std::vector<DecryptionShare> ds;
    for (int p : parties) ds.push_back(partial_decrypt(pk(), c, shares()[static_cast<std::size_t>(p)]));
    return combine(pk(), c, ds);
  }
  static BigInt decrypt(const Ciphertext& c) { return decrypt_with(c, {0, 1, 2}); }

  static BigInt random_plaintext(RngStream& rng) {
    BigInt r;
    mpz_set_ui(r.get_mpz_t(), 0);
    for (int i = 0; i < 10; ++i) {
      r <<= 64;
      r += static_cast<unsigned long>(rng.next_u64());
    }
    return r % pk().n;
  }

  static std::unique_ptr<ThresholdKeys> keys_;
};

std::unique_ptr<ThresholdKeys> ThresholdPaillierTest::keys_;

TEST_F(ThresholdPaillierTest, KeyShape) {
  EXPECT_EQ(pk().bits(), 512);
  EXPECT_EQ(pk().threshold, 3);
  EXPECT_EQ(pk().parties, 5);
  ASSERT_EQ(shares().size(), 5u);
  std::set<std::string> distinct;
  for (const auto& s : shares()) distinct.insert(s.value.get_str(16));
  EXPECT_EQ(distinct.size(), 5u);
  for (std::size_t i = 0; i < shares().size(); ++i) {
    EXPECT_EQ(shares()[i].index, static_cast<int>(i) + 1);
    EXPECT_EQ(shares()[i].key_fingerprint, pk().fingerprint());
  }
}

TEST_F(ThresholdPaillierTest, DifferentSeedsGiveDifferentModuli) {
  RngStream rng(7, 0x11);
  const ThresholdKeys other = keygen(512, 5, 3, rng);
  EXPECT_NE(other.public_key.n, pk().n);
}

TEST_F(ThresholdPaillierTest, KeygenValidation) {
  RngStream rng(0, 0);
  EXPECT_PROTOFED_ERROR(keygen(768, 5, 3, rng), ErrorCode::kInvalidConfig);
  EXPECT_PROTOFED_ERROR(keygen(512, 1, 1, rng), ErrorCode::kInvalidConfig);
  EXPECT_PROTOFED_ERROR(keygen(512, 5, 6, rng), ErrorCode::kInvalidConfig);
  EXPECT_PROTOFED_ERROR(keygen(512, 5, 1, rng), ErrorCode::kInvalidConfig);
}

TEST_F(ThresholdPaillierTest, EncryptDecryptKnownValues) {
  RngStream rng(1, 1);
  EXPECT_EQ(decrypt(encrypt(pk(), 42, rng)), 42);
  EXPECT_EQ(decrypt(encrypt(pk(), 0, rng)), 0);
  const BigInt top = pk().n - 1;
  EXPECT_EQ(decrypt(encrypt(pk(), top, rng)), top);
}

TEST_F(ThresholdPaillierTest, EncryptionIsRandomized) {
  RngStream rng(2, 2);
  const Ciphertext a = encrypt(pk(), 7, rng);
  const Ciphertext b = encrypt(pk(), 7, rng);
  EXPECT_NE(a, b);
  EXPECT_EQ(decrypt(a), 7);
  EXPECT_EQ(decrypt(b), 7);
}

TEST_F(ThresholdPaillierTest, RandomRoundtrips) {
  RngStream rng(3, 3);
  for (int i = 0; i < 200; ++i) {
    const BigInt m = random_plaintext(rng);
    EXPECT_EQ(decrypt(encrypt(pk(), m, rng)), m);
  }
}

TEST_F(ThresholdPaillierTest, PlaintextOutOfRange) {
  RngStream rng(4, 4);
  EXPECT_PROTOFED_ERROR(encrypt(pk(), pk().n, rng), ErrorCode::kOutOfRange);
  EXPECT_PROTOFED_ERROR(encrypt(pk(), -1, rng), ErrorCode::kOutOfRange);
}

TEST_F(ThresholdPaillierTest, AdditiveHomomorphism) {
  RngStream rng(5, 5);
  EXPECT_EQ(decrypt(add(pk(), encrypt(pk(), 5, rng), encrypt(pk(), 7, rng))), 12);
  const Ciphertext c = encrypt(pk(), 99, rng);
  EXPECT_EQ(decrypt(add(pk(), c, encrypt(pk(), 0, rng))), 99);
}

TEST_F(ThresholdPaillierTest, FoldEqualsPlaintextSumModN) {
  RngStream rng(6, 6);
  BigInt sum = 0;
  Ciphertext acc = encrypt(pk(), 0, rng);
  for (int i = 0; i < 10; ++i) {
    const BigInt m = random_plaintext(rng);
    sum = (sum + m) % pk().n;
    acc = add(pk(), acc, encrypt(pk(), m, rng));
  }
  EXPECT_EQ(decrypt(acc), sum);
}

TEST_F(ThresholdPaillierTest, HomomorphismProperty) {
  RngStream rng(7, 7);
  for (int i = 0; i < 1000; ++i) {
    const BigInt a = random_plaintext(rng);
    const BigInt b = random_plaintext(rng);
    const Ciphertext c = add(pk(), encrypt(pk(), a, rng), encrypt(pk(), b, rng));
    ASSERT_EQ(decrypt_with(c, {static_cast<int>(i % 3), 3, 4}), BigInt((a + b) % pk().n)) << "pair " << i;
  }
}

TEST_F(ThresholdPaillierTest, EveryThresholdSubsetAgrees) {
  RngStream rng(8, 8);
  const BigInt m = random_plaintext(rng);
  const Ciphertext c = encrypt(pk(), m, rng);
  int subsets = 0;
  for (int a = 0; a < 5; ++a) {
    for (int b = a + 1; b < 5; ++b) {
      for (int d = b + 1; d < 5; ++d) {
        EXPECT_EQ(decrypt_with(c, {a, b, d}), m);
        ++subsets;
      }
    }
  }
  EXPECT_EQ(subsets, 10);
  EXPECT_EQ(decrypt_with(c, {0, 1, 2, 3, 4}), m);
}

TEST_F(ThresholdPaillierTest, BelowThresholdFails) {
  RngStream rng(9, 9);
  const Ciphertext c = encrypt(pk(), 5, rng);
  EXPECT_PROTOFED_ERROR(decrypt_with(c, {0, 4}), ErrorCode::kThresholdUnmet);
  EXPECT_PROTOFED_ERROR(decrypt_with(c, {2}), ErrorCode::kThresholdUnmet);
  // Duplicated parties do not count twice.
  EXPECT_PROTOFED_ERROR(decrypt_with(c, {1, 1, 3}), ErrorCode::kThresholdUnmet);
}

TEST_F(ThresholdPaillierTest, InconsistentSharesAreDetected) {
  RngStream rng(10, 10);
  const Ciphertext c = encrypt(pk(), 5, rng);
  const Ciphertext other = encrypt(pk(), 6, rng);
  std::vector<DecryptionShare> ds{partial_decrypt(pk(), c, shares()[0]),
                                  partial_decrypt(pk(), c, shares()[1]),
                                  partial_decrypt(pk(), other, shares()[2])};
  EXPECT_PROTOFED_ERROR(combine(pk(), c, ds), ErrorCode::kCombinationFailure);
}

TEST_F(ThresholdPaillierTest, ShareFromAnotherKeyIsRejected) {
  RngStream rng(11, 11);
  const ThresholdKeys other = keygen(512, 5, 3, rng);
  const Ciphertext c = encrypt(pk(), 5, rng);
  EXPECT_PROTOFED_ERROR(partial_decrypt(pk(), c, other.shares[0]), ErrorCode::kKeyMismatch);
}

TEST_F(ThresholdPaillierTest, FixedPointKnownEncodings) {
  FixedPointCodec codec{24, 2.0, 5};
  codec.validate(pk());
  EXPECT_EQ(encode_fixed(1.5, codec, pk()), BigInt(BigInt(3) << 23));
  EXPECT_EQ(encode_fixed(-1.5, codec, pk()), BigInt(pk().n - (BigInt(3) << 23)));
  EXPECT_EQ(decode_fixed(encode_fixed(1.5, codec, pk()), codec, pk(), 1), 1.5);
  EXPECT_EQ(decode_fixed(encode_fixed(-1.5, codec, pk()), codec, pk(), 1), -1.5);
  EXPECT_EQ(encode_fixed(0.0, codec, pk()), 0);
}

TEST_F(ThresholdPaillierTest, FixedPointQuantizationBound) {
  const FixedPointCodec codec{24, 3.0, 5};
  RngStream rng(12, 12);
  for (int i = 0; i < 10000; ++i) {
    const double v = rng.uniform(-3.0, 3.0);
    EXPECT_LE(std::abs(decode_fixed(encode_fixed(v, codec, pk()), codec, pk(), 1) - v),
              std::ldexp(1.0, -24));
  }
}

TEST_F(ThresholdPaillierTest, FixedPointRangeErrors) {
  const FixedPointCodec codec{24, 1.0, 2};
  EXPECT_PROTOFED_ERROR(encode_fixed(1.0001, codec, pk()), ErrorCode::kOutOfRange);
  EXPECT_PROTOFED_ERROR(encode_fixed(std::nan(""), codec, pk()), ErrorCode::kOutOfRange);
  const BigInt too_big = BigInt(BigInt(5) << 24);
  EXPECT_PROTOFED_ERROR(decode_fixed(too_big, codec, pk(), 2), ErrorCode::kWraparound);
  const FixedPointCodec huge{52, 1e150, 5};
  EXPECT_PROTOFED_ERROR(huge.validate(pk()), ErrorCode::kInvalidConfig);
}

TEST_F(ThresholdPaillierTest, VectorRoundtrip) {
  const FixedPointCodec codec{24, 1.0, 5};
  RngStream rng(13, 13);
  Vec64 v(384);
  for (Eigen::Index i = 0; i < v.size(); ++i) v(i) = rng.uniform(-1.0, 1.0);
  const auto cs = encrypt_vector(pk(), v, codec, rng);
  ASSERT_EQ(cs.size(), 384u);
  const Vec64 out = decrypt_vector(pk(), cs, std::span(shares()).subspan(1, 3), codec, 1);
  EXPECT_LE((out - v).cwiseAbs().maxCoeff(), std::ldexp(1.0, -24));
}

TEST_F(ThresholdPaillierTest, ZeroVectorRoundtripsExactly) {
  const FixedPointCodec codec{24, 1.0, 5};
  RngStream rng(14, 14);
  const auto cs = encrypt_vector(pk(), Vec64::Zero(16), codec, rng);
  const Vec64 out = decrypt_vector(pk(), cs, shares(), codec, 1);
  EXPECT_EQ(out, Vec64::Zero(16));
}

TEST_F(ThresholdPaillierTest, HomomorphicVectorSum) {
  const double bound = 1.0;
  const FixedPointCodec codec{24, bound, 5};
  RngStream rng(15, 15);
  std::vector<Ciphertext> acc;
  Vec64 sum = Vec64::Zero(48);
  for (int c = 0; c < 5; ++c) {
    const Vec64 v = clip_norm(sample_gaussian(rng, 0, 1, 48), bound);
    sum += v;
    auto cs = encrypt_vector(pk(), v, codec, rng);
    acc = acc.empty() ? cs : add_vectors(pk(), acc, cs);
  }
  std::vector<std::vector<DecryptionShare>> parts;
  for (int p : {0, 2, 4}) parts.push_back(partial_decrypt_vector(pk(), acc, shares()[static_cast<std::size_t>(p)]));
  const Vec64 out = combine_vector(pk(), acc, parts, codec, 5);
  EXPECT_LE((out - sum).cwiseAbs().maxCoeff(), 5 * std::ldexp(1.0, -24));
}

TEST_F(ThresholdPaillierTest, VectorErrorsCarryCoordinate) {
  const FixedPointCodec codec{24, 1.0, 5};
  RngStream rng(16, 16);
  Vec64 v = Vec64::Zero(4);
  v(2) = 5.0;
  try {
    encrypt_vector(pk(), v, codec, rng);
    FAIL() << "expected an out-of-range error";
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::kOutOfRange);
    EXPECT_NE(std::string(e.what()).find("coordinate 2"), std::string::npos);
  }
  const auto a = encrypt_vector(pk(), Vec64::Zero(3), codec, rng);
  const auto b = encrypt_vector(pk(), Vec64::Zero(2), codec, rng);
  EXPECT_PROTOFED_ERROR(add_vectors(pk(), a, b), ErrorCode::kDimensionMismatch);
}

TEST_F(ThresholdPaillierTest, KeySerializationRoundtrip) {
  const PublicKey pk2 = deserialize_public_key(serialize_public_key(pk()));
  EXPECT_EQ(pk2.n, pk().n);
  EXPECT_EQ(pk2.threshold, pk().threshold);
  EXPECT_EQ(pk2.parties, pk().parties);
  EXPECT_EQ(pk2.fingerprint(), pk().fingerprint());
  const KeyShare s2 = deserialize_key_share(serialize_key_share(shares()[3]));
  EXPECT_EQ(s2.index, shares()[3].index);
  EXPECT_EQ(s2.value, shares()[3].value);
  // The deserialized key still encrypts and decrypts.
  RngStream rng(17, 17);
  const Ciphertext c = encrypt(pk2, 1234, rng);
  std::vector<DecryptionShare> ds{partial_decrypt(pk2, c, shares()[0]),
                                  partial_decrypt(pk2, c, s2),
                                  partial_decrypt(pk2, c, shares()[4])};
  EXPECT_EQ(combine(pk2, c, ds), 1234);
}

TEST_F(ThresholdPaillierTest, KeyDeserializationRejectsGarbage) {
  wire::Bytes bytes = serialize_public_key(pk());
  EXPECT_PROTOFED_ERROR(deserialize_key_share(bytes), ErrorCode::kDecode);
  bytes.resize(bytes.size() / 2);
  EXPECT_PROTOFED_ERROR(deserialize_public_key(bytes), ErrorCode::kDecode);
}

TEST_F(ThresholdPaillierTest, CiphertextWireRoundtrip) {
  RngStream rng(18, 18);
  const Ciphertext c = encrypt(pk(), 77, rng);
  wire::Writer w;
  write_ciphertext(w, c);
  wire::Reader r(w.bytes());
  EXPECT_EQ(read_ciphertext(r), c);
  EXPECT_EQ(r.remaining(), 0u);
}

}  // namespace
}  // namespace protofed::crypto
