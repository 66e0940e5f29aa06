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

#include "protofed/transport.h"

#include <sys/socket.h>
#include <unistd.h>

#include <cerrno>
#include <condition_variable>
#include <cstring>
#include <mutex>
#include <string>
#include <thread>

namespace protofed {
namespace {

struct Queue {
  std::deque<std::vector<std::uint8_t>> frames;
};

class MemoryEndpoint : public Endpoint {
 public:
  MemoryEndpoint(std::shared_ptr<Queue> out, std::shared_ptr<Queue> in)
      : out_(std::move(out)), in_(std::move(in)) {}

 protected:
  void send_frame(std::vector<std::uint8_t> frame) override {
    out_->frames.push_back(std::move(frame));
  }
  std::vector<std::uint8_t> recv_frame() override {
    if (in_->frames.empty()) {
      throw Error(ErrorCode::kTransport, "no message pending on link");
    }
    auto frame = std::move(in_->frames.front());
    in_->frames.pop_front();
    return frame;
  }

 private:
  std::shared_ptr<Queue> out_;
  std::shared_ptr<Queue> in_;
};

// Frames are handed to a writer thread so that a sender never blocks on a
// full socket buffer while the peer is driven by the same thread.
class StreamEndpoint : public Endpoint {
 public:
  explicit StreamEndpoint(int fd) : fd_(fd), writer_([this] { write_loop(); }) {}
  ~StreamEndpoint() override {
    {
      std::lock_guard<std::mutex> lock(mu_);
      stopping_ = true;
    }
    cv_.notify_all();
    // Unblocks a writer stuck on a peer that stopped reading.
    ::shutdown(fd_, SHUT_RDWR);
    writer_.join();
    ::close(fd_);
  }
  StreamEndpoint(const StreamEndpoint&) = delete;
  StreamEndpoint& operator=(const StreamEndpoint&) = delete;

 protected:
  void send_frame(std::vector<std::uint8_t> frame) override {
    {
      std::lock_guard<std::mutex> lock(mu_);
      if (!write_error_.empty()) throw Error(ErrorCode::kTransport, write_error_);
      pending_.push_back(std::move(frame));
    }
    cv_.notify_all();
  }

  std::vector<std::uint8_t> recv_frame() override {
    std::vector<std::uint8_t> frame(4);
    read_exact(frame.data(), 4);
    const std::uint32_t len = (std::uint32_t{frame[0]} << 24) | (std::uint32_t{frame[1]} << 16) |
                              (std::uint32_t{frame[2]} << 8) | std::uint32_t{frame[3]};
    if (len > (1u << 30)) throw Error(ErrorCode::kDecode, "frame length too large");
    frame.resize(4 + static_cast<std::size_t>(len));
    read_exact(frame.data() + 4, len);
    return frame;
  }

 private:
  void write_loop() {
    for (;;) {
      std::vector<std::uint8_t> frame;
      {
        std::unique_lock<std::mutex> lock(mu_);
        cv_.wait(lock, [&] { return stopping_ || !pending_.empty(); });
        if (stopping_) return;
        frame = std::move(pending_.front());
        pending_.pop_front();
      }
      std::size_t off = 0;
      while (off < frame.size()) {
        const ssize_t n = ::send(fd_, frame.data() + off, frame.size() - off, MSG_NOSIGNAL);
        if (n < 0) {
          if (errno == EINTR) continue;
          std::lock_guard<std::mutex> lock(mu_);
          write_error_ = std::string("send failed: ") + std::strerror(errno);
          return;
        }
        off += static_cast<std::size_t>(n);
      }
    }
  }

  void read_exact(std::uint8_t* dst, std::size_t n) {
    std::size_t off = 0;
    while (off < n) {
      const ssize_t got = ::recv(fd_, dst + off, n - off, 0);
      if (got < 0) {
        if (errno == EINTR) continue;
        throw Error(ErrorCode::kTransport, std::string("recv failed: ") + std::strerror(errno));
      }
      if (got == 0) throw Error(ErrorCode::kTransport, "connection closed by peer");
      off += static_cast<std::size_t>(got);
    }
  }

  int fd_;
  std::mutex mu_;
  std::condition_variable cv_;
  std::deque<std::vector<std::uint8_t>> pending_;
  bool stopping_ = false;
  std::string write_error_;
  // Declared last: the thread starts once every other member exists.
  std::thread writer_;
};

}  // namespace

void Endpoint::send(const RoundMessage& msg) {
  auto frame = encode_frame(msg);
  if (tap_) tap_(tap_client_, tap_from_server_, frame);
  stats_.bytes_sent += frame.size();
  stats_.frames_sent += 1;
  send_frame(std::move(frame));
}

RoundMessage Endpoint::recv() {
  const auto frame = recv_frame();
  stats_.bytes_received += frame.size();
  stats_.frames_received += 1;
  RoundMessage msg = decode_frame(frame);
  const std::int64_t round = message_round(msg);
  if (round < last_round_) {
    throw Error(ErrorCode::kProtocol, "round went backwards: " + std::to_string(round) +
                                          " after " + std::to_string(last_round_));
  }
  last_round_ = round;
  return msg;
}

void Endpoint::set_tap(FrameTap tap, int client, bool from_server) {
  tap_ = std::move(tap);
  tap_client_ = client;
  tap_from_server_ = from_server;
}

std::pair<std::unique_ptr<Endpoint>, std::unique_ptr<Endpoint>> make_memory_link() {
  auto a_to_b = std::make_shared<Queue>();
  auto b_to_a = std::make_shared<Queue>();
  return {std::make_unique<MemoryEndpoint>(a_to_b, b_to_a),
          std::make_unique<MemoryEndpoint>(b_to_a, a_to_b)};
}

std::pair<std::unique_ptr<Endpoint>, std::unique_ptr<Endpoint>> make_stream_link() {
  int fds[2];
  if (::socketpair(AF_UNIX, SOCK_STREAM, 0, fds) != 0) {
    throw Error(ErrorCode::kTransport, std::string("socketpair failed: ") + std::strerror(errno));
  }
  return {std::make_unique<StreamEndpoint>(fds[0]), std::make_unique<StreamEndpoint>(fds[1])};
}

Network::Network(int clients, Kind kind) {
  if (clients < 1) throw Error(ErrorCode::kInvalidArgument, "network needs at least one client");
  for (int i = 0; i < clients; ++i) {
    auto [s, c] = kind == Kind::kMemory ? make_memory_link() : make_stream_link();
    server_side_.push_back(std::move(s));
    client_side_.push_back(std::move(c));
  }
}

void Network::set_tap(FrameTap tap) {
  for (int i = 0; i < clients(); ++i) {
    server_side_[i]->set_tap(tap, i, true);
    client_side_[i]->set_tap(tap, i, false);
  }
}

void Network::reset_stats() {
  for (auto& e : server_side_) e->reset_stats();
  for (auto& e : client_side_) e->reset_stats();
}

}  // namespace protofed
