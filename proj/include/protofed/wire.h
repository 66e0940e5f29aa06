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

#ifndef PROTOFED_WIRE_H_
#define PROTOFED_WIRE_H_

#include <cstdint>
#include <span>
#include <vector>

#include <gmpxx.h>

#include "protofed/mathcore.h"

namespace protofed::wire {

using Bytes = std::vector<std::uint8_t>;

// Big-endian fixed-width writer.
class Writer {
 public:
  void u8(std::uint8_t v) { out_.push_back(v); }
  void u32(std::uint32_t v);
  void u64(std::uint64_t v);
  void f64(double v);
  // 4-byte count, then 8-byte IEEE 754 elements.
  void vec(const Vec64& v);
  // 4-byte byte count, then big-endian magnitude (nonnegative values only).
  void bigint(const mpz_class& v);

  const Bytes& bytes() const { return out_; }
  Bytes take() { return std::move(out_); }

 private:
  Bytes out_;
};

// Bounds-checked reader; every short read throws ErrorCode::kDecode.
class Reader {
 public:
  explicit Reader(std::span<const std::uint8_t> in) : in_(in) {}

  std::uint8_t u8();
  std::uint32_t u32();
  std::uint64_t u64();
  double f64();
  Vec64 vec();
  mpz_class bigint();

  std::size_t remaining() const { return in_.size() - pos_; }
  void expect_end() const;

 private:
  std::span<const std::uint8_t> take(std::size_t n);

  std::span<const std::uint8_t> in_;
  std::size_t pos_ = 0;
};

}  // namespace protofed::wire

#endif  // PROTOFED_WIRE_H_
