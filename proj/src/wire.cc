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

#include "protofed/wire.h"

#include <bit>
#include <cstring>
#include <limits>
#include <string>

namespace protofed::wire {
namespace {

// Upper bound on any single length field; guards allocation on corrupt input.
constexpr std::uint32_t kMaxElements = 1u << 26;

}  // namespace

void Writer::u32(std::uint32_t v) {
  for (int shift = 24; shift >= 0; shift -= 8) {
    out_.push_back(static_cast<std::uint8_t>(v >> shift));
  }
}

void Writer::u64(std::uint64_t v) {
  for (int shift = 56; shift >= 0; shift -= 8) {
    out_.push_back(static_cast<std::uint8_t>(v >> shift));
  }
}

void Writer::f64(double v) { u64(std::bit_cast<std::uint64_t>(v)); }

void Writer::vec(const Vec64& v) {
  u32(static_cast<std::uint32_t>(v.size()));
  for (Eigen::Index i = 0; i < v.size(); ++i) f64(v[i]);
}

void Writer::bigint(const mpz_class& v) {
  if (sgn(v) < 0) {
    throw Error(ErrorCode::kInvalidArgument, "cannot serialize a negative integer");
  }
  const std::size_t n = sgn(v) == 0 ? 0 : (mpz_sizeinbase(v.get_mpz_t(), 2) + 7) / 8;
  u32(static_cast<std::uint32_t>(n));
  const std::size_t start = out_.size();
  out_.resize(start + n);
  if (n > 0) {
    std::size_t written = 0;
    mpz_export(out_.data() + start, &written, 1, 1, 1, 0, v.get_mpz_t());
  }
}

std::span<const std::uint8_t> Reader::take(std::size_t n) {
  if (n > remaining()) {
    throw Error(ErrorCode::kDecode, "truncated input: need " + std::to_string(n) +
                                        " bytes, have " + std::to_string(remaining()));
  }
  auto s = in_.subspan(pos_, n);
  pos_ += n;
  return s;
}

std::uint8_t Reader::u8() { return take(1)[0]; }

std::uint32_t Reader::u32() {
  std::uint32_t v = 0;
  for (std::uint8_t b : take(4)) v = (v << 8) | b;
  return v;
}

std::uint64_t Reader::u64() {
  std::uint64_t v = 0;
  for (std::uint8_t b : take(8)) v = (v << 8) | b;
  return v;
}

double Reader::f64() { return std::bit_cast<double>(u64()); }

Vec64 Reader::vec() {
  const std::uint32_t n = u32();
  if (n > kMaxElements || static_cast<std::size_t>(n) * 8 > remaining()) {
    throw Error(ErrorCode::kDecode, "vector length exceeds input");
  }
  Vec64 v(n);
  for (std::uint32_t i = 0; i < n; ++i) v[i] = f64();
  return v;
}

mpz_class Reader::bigint() {
  const std::uint32_t n = u32();
  auto bytes = take(n);
  mpz_class v;
  if (n > 0) mpz_import(v.get_mpz_t(), n, 1, 1, 1, 0, bytes.data());
  return v;
}

void Reader::expect_end() const {
  if (remaining() != 0) {
    throw Error(ErrorCode::kDecode,
                std::to_string(remaining()) + " trailing bytes after message");
  }
}

}  // namespace protofed::wire
