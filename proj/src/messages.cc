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

#include "protofed/messages.h"

#include <string>

namespace protofed {
namespace {

template <class... Ts>
struct overloaded : Ts... {
  using Ts::operator()...;
};
template <class... Ts>
overloaded(Ts...) -> overloaded<Ts...>;

constexpr std::uint32_t kMaxItems = 1u << 24;

void write_prototypes(wire::Writer& w, const PrototypeSet& set) {
  w.u8(set.initialized ? 1 : 0);
  w.u32(static_cast<std::uint32_t>(set.entries.size()));
  for (const auto& [cls, proto] : set.entries) {
    w.u32(static_cast<std::uint32_t>(cls));
    w.u64(static_cast<std::uint64_t>(proto.count));
    w.u8(proto.echoed ? 1 : 0);
    w.vec(proto.vector);
  }
}

PrototypeSet read_prototypes(wire::Reader& r) {
  PrototypeSet set;
  const std::uint8_t init = r.u8();
  if (init > 1) throw Error(ErrorCode::kDecode, "bad initialized flag");
  set.initialized = init == 1;
  const std::uint32_t n = r.u32();
  if (n > kMaxItems) throw Error(ErrorCode::kDecode, "implausible class count");
  for (std::uint32_t i = 0; i < n; ++i) {
    const auto cls = static_cast<int>(r.u32());
    ClassPrototype proto;
    proto.count = static_cast<std::int64_t>(r.u64());
    const std::uint8_t echoed = r.u8();
    if (echoed > 1) throw Error(ErrorCode::kDecode, "bad echoed flag");
    proto.echoed = echoed == 1;
    proto.vector = r.vec();
    if (!set.entries.emplace(cls, std::move(proto)).second) {
      throw Error(ErrorCode::kDecode, "duplicate class " + std::to_string(cls));
    }
  }
  return set;
}

void write_ciphertexts(wire::Writer& w, const std::vector<crypto::Ciphertext>& cs) {
  w.u32(static_cast<std::uint32_t>(cs.size()));
  for (const auto& c : cs) crypto::write_ciphertext(w, c);
}

std::vector<crypto::Ciphertext> read_ciphertexts(wire::Reader& r) {
  const std::uint32_t n = r.u32();
  if (n > kMaxItems || n * 4ull > r.remaining()) {
    throw Error(ErrorCode::kDecode, "ciphertext count exceeds input");
  }
  std::vector<crypto::Ciphertext> cs;
  cs.reserve(n);
  for (std::uint32_t i = 0; i < n; ++i) cs.push_back(crypto::read_ciphertext(r));
  return cs;
}

}  // namespace

MessageTag message_tag(const RoundMessage& msg) {
  return std::visit(
      overloaded{
          [](const GlobalPrototypesMsg&) { return MessageTag::kGlobalPrototypes; },
          [](const EncryptedUpdateMsg&) { return MessageTag::kEncryptedUpdate; },
          [](const PlainUpdateMsg&) { return MessageTag::kPlainUpdate; },
          [](const ShareRequestMsg&) { return MessageTag::kShareRequest; },
          [](const ShareResponseMsg&) { return MessageTag::kShareResponse; },
          [](const HeadWeightsMsg&) { return MessageTag::kHeadWeights; },
      },
      msg);
}

std::uint32_t message_round(const RoundMessage& msg) {
  return std::visit([](const auto& m) { return m.round; }, msg);
}

std::size_t payload_values(const RoundMessage& msg) {
  auto proto_values = [](const PrototypeSet& set) {
    std::size_t n = 0;
    for (const auto& [cls, p] : set.entries) n += static_cast<std::size_t>(p.vector.size());
    return n;
  };
  return std::visit(
      overloaded{
          [&](const GlobalPrototypesMsg& m) { return proto_values(m.prototypes); },
          [](const EncryptedUpdateMsg& m) { return m.ciphertexts.size(); },
          [&](const PlainUpdateMsg& m) { return proto_values(m.prototypes); },
          [](const ShareRequestMsg& m) { return m.ciphertexts.size(); },
          [](const ShareResponseMsg& m) { return m.shares.size(); },
          [](const HeadWeightsMsg& m) { return static_cast<std::size_t>(m.weights.size()); },
      },
      msg);
}

wire::Bytes encode_payload(const RoundMessage& msg) {
  wire::Writer w;
  w.u8(kProtocolVersion);
  w.u8(static_cast<std::uint8_t>(message_tag(msg)));
  std::visit(overloaded{
                 [&](const GlobalPrototypesMsg& m) {
                   w.u32(m.round);
                   write_prototypes(w, m.prototypes);
                 },
                 [&](const EncryptedUpdateMsg& m) {
                   w.u32(m.round);
                   w.u32(m.client_id);
                   write_ciphertexts(w, m.ciphertexts);
                 },
                 [&](const PlainUpdateMsg& m) {
                   w.u32(m.round);
                   w.u32(m.client_id);
                   write_prototypes(w, m.prototypes);
                 },
                 [&](const ShareRequestMsg& m) {
                   w.u32(m.round);
                   write_ciphertexts(w, m.ciphertexts);
                 },
                 [&](const ShareResponseMsg& m) {
                   w.u32(m.round);
                   w.u32(m.client_id);
                   w.u32(static_cast<std::uint32_t>(m.shares.size()));
                   for (const auto& s : m.shares) {
                     w.u32(static_cast<std::uint32_t>(s.index));
                     w.bigint(s.value);
                   }
                 },
                 [&](const HeadWeightsMsg& m) {
                   w.u32(m.round);
                   w.u32(m.client_id);
                   w.u64(m.sample_count);
                   w.vec(m.weights);
                 },
             },
             msg);
  return w.take();
}

RoundMessage decode_payload(std::span<const std::uint8_t> payload) {
  wire::Reader r(payload);
  const std::uint8_t version = r.u8();
  if (version != kProtocolVersion) {
    throw Error(ErrorCode::kDecode, "unsupported protocol version " + std::to_string(version));
  }
  const std::uint8_t tag = r.u8();
  RoundMessage out;
  switch (static_cast<MessageTag>(tag)) {
    case MessageTag::kGlobalPrototypes: {
      GlobalPrototypesMsg m;
      m.round = r.u32();
      m.prototypes = read_prototypes(r);
      out = std::move(m);
      break;
    }
    case MessageTag::kEncryptedUpdate: {
      EncryptedUpdateMsg m;
      m.round = r.u32();
      m.client_id = r.u32();
      m.ciphertexts = read_ciphertexts(r);
      out = std::move(m);
      break;
    }
    case MessageTag::kPlainUpdate: {
      PlainUpdateMsg m;
      m.round = r.u32();
      m.client_id = r.u32();
      m.prototypes = read_prototypes(r);
      out = std::move(m);
      break;
    }
    case MessageTag::kShareRequest: {
      ShareRequestMsg m;
      m.round = r.u32();
      m.ciphertexts = read_ciphertexts(r);
      out = std::move(m);
      break;
    }
    case MessageTag::kShareResponse: {
      ShareResponseMsg m;
      m.round = r.u32();
      m.client_id = r.u32();
      const std::uint32_t n = r.u32();
      if (n > kMaxItems || n * 8ull > r.remaining()) {
        throw Error(ErrorCode::kDecode, "share count exceeds input");
      }
      for (std::uint32_t i = 0; i < n; ++i) {
        crypto::DecryptionShare s;
        s.index = static_cast<int>(r.u32());
        s.value = r.bigint();
        m.shares.push_back(std::move(s));
      }
      out = std::move(m);
      break;
    }
    case MessageTag::kHeadWeights: {
      HeadWeightsMsg m;
      m.round = r.u32();
      m.client_id = r.u32();
      m.sample_count = r.u64();
      m.weights = r.vec();
      out = std::move(m);
      break;
    }
    default:
      throw Error(ErrorCode::kDecode, "unknown message tag " + std::to_string(tag));
  }
  r.expect_end();
  return out;
}

wire::Bytes encode_frame(const RoundMessage& msg) {
  const wire::Bytes payload = encode_payload(msg);
  wire::Writer w;
  w.u32(static_cast<std::uint32_t>(payload.size()));
  wire::Bytes frame = w.take();
  frame.insert(frame.end(), payload.begin(), payload.end());
  return frame;
}

RoundMessage decode_frame(std::span<const std::uint8_t> frame) {
  wire::Reader r(frame);
  const std::uint32_t len = r.u32();
  if (len != r.remaining()) {
    throw Error(ErrorCode::kDecode, "frame length " + std::to_string(len) +
                                        " does not match " + std::to_string(r.remaining()) +
                                        " payload bytes");
  }
  return decode_payload(frame.subspan(4));
}

}  // namespace protofed
