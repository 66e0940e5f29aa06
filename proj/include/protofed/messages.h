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

// Round protocol messages and their wire codec.
//
// Frame: u32 length (big-endian) of the payload, then the payload:
//   u8 protocol version (0x01), u8 message tag, fields in declared order.
// Integers are big-endian fixed width, reals 8-byte IEEE 754 big-endian,
// vectors a u32 count plus elements, big integers a u32 byte count plus
// big-endian magnitude.
//
// No message type has a field that can hold a Sample: raw features never
// leave a client.

#ifndef PROTOFED_MESSAGES_H_
#define PROTOFED_MESSAGES_H_

#include <cstdint>
#include <span>
#include <variant>
#include <vector>

#include "protofed/prototype.h"
#include "protofed/threshold_paillier.h"
#include "protofed/wire.h"

namespace protofed {

inline constexpr std::uint8_t kProtocolVersion = 0x01;
// client_id used by the server for its own broadcasts.
inline constexpr std::uint32_t kServerId = 0xffffffffu;

enum class MessageTag : std::uint8_t {
  kGlobalPrototypes = 1,
  kEncryptedUpdate = 2,
  kPlainUpdate = 3,
  kShareRequest = 4,
  kShareResponse = 5,
  kHeadWeights = 6,
};

struct GlobalPrototypesMsg {
  std::uint32_t round = 0;
  PrototypeSet prototypes;
};

// Class-major: ciphertexts[j * d_b + c] encrypts coordinate c of class j.
struct EncryptedUpdateMsg {
  std::uint32_t round = 0;
  std::uint32_t client_id = 0;
  std::vector<crypto::Ciphertext> ciphertexts;
};

struct PlainUpdateMsg {
  std::uint32_t round = 0;
  std::uint32_t client_id = 0;
  PrototypeSet prototypes;
};

struct ShareRequestMsg {
  std::uint32_t round = 0;
  std::vector<crypto::Ciphertext> ciphertexts;
};

struct ShareResponseMsg {
  std::uint32_t round = 0;
  std::uint32_t client_id = 0;
  std::vector<crypto::DecryptionShare> shares;
};

// Flat head parameters. sample_count weights the average; 0 on broadcasts.
struct HeadWeightsMsg {
  std::uint32_t round = 0;
  std::uint32_t client_id = 0;
  std::uint64_t sample_count = 0;
  Vec64 weights;
};

using RoundMessage = std::variant<GlobalPrototypesMsg, EncryptedUpdateMsg, PlainUpdateMsg,
                                  ShareRequestMsg, ShareResponseMsg, HeadWeightsMsg>;

MessageTag message_tag(const RoundMessage& msg);
std::uint32_t message_round(const RoundMessage& msg);

// Number of real values or ciphertexts carried as payload.
std::size_t payload_values(const RoundMessage& msg);

// Payload only (no length prefix).
wire::Bytes encode_payload(const RoundMessage& msg);
RoundMessage decode_payload(std::span<const std::uint8_t> payload);

// Length-prefixed frame.
wire::Bytes encode_frame(const RoundMessage& msg);
RoundMessage decode_frame(std::span<const std::uint8_t> frame);

}  // namespace protofed

#endif  // PROTOFED_MESSAGES_H_
