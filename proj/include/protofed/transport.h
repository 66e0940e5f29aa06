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

// Reliable, ordered, duplex links between the server and each client.
//
// Every link carries whole frames. Byte counters include the 4-byte length
// prefix, so they equal the sum of encode_frame() sizes. A receiver rejects
// a message whose round is lower than one it has already seen on that link.

#ifndef PROTOFED_TRANSPORT_H_
#define PROTOFED_TRANSPORT_H_

#include <cstdint>
#include <deque>
#include <functional>
#include <memory>
#include <vector>

#include "protofed/messages.h"

namespace protofed {

struct LinkStats {
  std::uint64_t bytes_sent = 0;
  std::uint64_t bytes_received = 0;
  std::uint64_t frames_sent = 0;
  std::uint64_t frames_received = 0;
};

// Observes every frame as it is sent. `from_server` gives the direction.
using FrameTap = std::function<void(int client, bool from_server, std::span<const std::uint8_t>)>;

// One side of a duplex link.
class Endpoint {
 public:
  virtual ~Endpoint() = default;

  void send(const RoundMessage& msg);
  RoundMessage recv();

  const LinkStats& stats() const { return stats_; }
  void reset_stats() { stats_ = {}; }
  void set_tap(FrameTap tap, int client, bool from_server);

 protected:
  virtual void send_frame(std::vector<std::uint8_t> frame) = 0;
  virtual std::vector<std::uint8_t> recv_frame() = 0;

 private:
  LinkStats stats_;
  FrameTap tap_;
  int tap_client_ = 0;
  bool tap_from_server_ = false;
  std::int64_t last_round_ = -1;
};

// In-process queues. recv() on an empty queue is a transport error: the
// simulation is sequential, so an empty queue means a lost message.
std::pair<std::unique_ptr<Endpoint>, std::unique_ptr<Endpoint>> make_memory_link();

// Unix socketpair. recv() blocks until a whole frame arrives; send() queues
// the frame for a per-endpoint writer thread and returns immediately.
std::pair<std::unique_ptr<Endpoint>, std::unique_ptr<Endpoint>> make_stream_link();

// Server side and client side endpoints for clients 0..m-1.
class Network {
 public:
  enum class Kind { kMemory, kStream };

  Network(int clients, Kind kind = Kind::kMemory);

  int clients() const { return static_cast<int>(server_side_.size()); }
  Endpoint& server_end(int client) { return *server_side_.at(client); }
  Endpoint& client_end(int client) { return *client_side_.at(client); }

  // Installs a tap on every link.
  void set_tap(FrameTap tap);
  void reset_stats();

 private:
  std::vector<std::unique_ptr<Endpoint>> server_side_;
  std::vector<std::unique_ptr<Endpoint>> client_side_;
};

}  // namespace protofed

#endif  // PROTOFED_TRANSPORT_H_
