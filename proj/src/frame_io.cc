// Copyright 2026 The SnailTrail Authors.
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

#include "frame_io.h"

#include <arpa/inet.h>
#include <fcntl.h>
#include <netdb.h>
#include <netinet/in.h>
#include <netinet/tcp.h>
#include <poll.h>
#include <sys/socket.h>
#include <unistd.h>

#include <cerrno>
#include <cstring>

#include "error.h"
#include "trace_model.h"

namespace snailtrail {
namespace {

std::string Errno() { return std::strerror(errno); }

std::uint32_t ReadU32(const std::uint8_t* p) {
  return static_cast<std::uint32_t>(p[0]) | static_cast<std::uint32_t>(p[1]) << 8 |
         static_cast<std::uint32_t>(p[2]) << 16 | static_cast<std::uint32_t>(p[3]) << 24;
}

// Refuse frames larger than this; a corrupt length prefix would otherwise
// trigger a huge allocation.
constexpr std::uint32_t kMaxFrameBytes = 1u << 30;

}  // namespace

FileFrameSink::FileFrameSink(const std::string& path) : path_(path) {
  file_ = std::fopen(path.c_str(), "wb");
  if (file_ == nullptr) throw Error(ErrorCode::kIo, "cannot create " + path + ": " + Errno());
}

FileFrameSink::~FileFrameSink() {
  if (file_ != nullptr) std::fclose(file_);
}

void FileFrameSink::Write(std::span<const std::uint8_t> frame) {
  if (file_ == nullptr) throw Error(ErrorCode::kIo, "write to closed file " + path_);
  if (std::fwrite(frame.data(), 1, frame.size(), file_) != frame.size()) {
    throw Error(ErrorCode::kIo, "write failed on " + path_ + ": " + Errno());
  }
}

void FileFrameSink::Close() {
  if (file_ == nullptr) return;
  const int rc = std::fclose(file_);
  file_ = nullptr;
  if (rc != 0) throw Error(ErrorCode::kIo, "close failed on " + path_ + ": " + Errno());
}

FileFrameSource::FileFrameSource(const std::string& path) : path_(path) {
  file_ = std::fopen(path.c_str(), "rb");
  if (file_ == nullptr) throw Error(ErrorCode::kIo, "cannot open " + path + ": " + Errno());
}

FileFrameSource::~FileFrameSource() {
  if (file_ != nullptr) std::fclose(file_);
}

PollResult FileFrameSource::TryNext(std::vector<std::uint8_t>& payload) {
  std::uint8_t header[kFrameHeaderBytes];
  const std::size_t got = std::fread(header, 1, sizeof(header), file_);
  if (got == 0 && std::feof(file_)) return PollResult::kEnd;
  if (got != sizeof(header)) {
    throw Error(ErrorCode::kMalformedFrame,
                path_ + ": truncated length prefix at byte offset " + std::to_string(offset_));
  }
  const std::uint32_t length = ReadU32(header);
  if (length > kMaxFrameBytes) {
    throw Error(ErrorCode::kMalformedFrame,
                path_ + ": frame length " + std::to_string(length) + " too large at byte offset " +
                    std::to_string(offset_));
  }
  payload.resize(length);
  if (std::fread(payload.data(), 1, length, file_) != length) {
    throw Error(ErrorCode::kMalformedFrame,
                path_ + ": truncated frame at byte offset " + std::to_string(offset_));
  }
  offset_ += kFrameHeaderBytes + length;
  return PollResult::kFrame;
}

SocketFrameSink::SocketFrameSink(const std::string& host, std::uint16_t port, std::string label)
    : label_(std::move(label)) {
  addrinfo hints{};
  hints.ai_family = AF_UNSPEC;
  hints.ai_socktype = SOCK_STREAM;
  addrinfo* result = nullptr;
  const std::string service = std::to_string(port);
  if (int rc = getaddrinfo(host.c_str(), service.c_str(), &hints, &result); rc != 0) {
    throw Error(ErrorCode::kNetwork, label_ + ": cannot resolve " + host + ": " + gai_strerror(rc));
  }
  std::string last = "no address";
  for (addrinfo* ai = result; ai != nullptr; ai = ai->ai_next) {
    fd_ = ::socket(ai->ai_family, ai->ai_socktype, ai->ai_protocol);
    if (fd_ < 0) continue;
    if (::connect(fd_, ai->ai_addr, ai->ai_addrlen) == 0) break;
    last = Errno();
    ::close(fd_);
    fd_ = -1;
  }
  freeaddrinfo(result);
  if (fd_ < 0) {
    throw Error(ErrorCode::kNetwork,
                label_ + ": connect to " + host + ":" + service + " failed: " + last);
  }
}

SocketFrameSink::~SocketFrameSink() {
  if (fd_ >= 0) ::close(fd_);
}

void SocketFrameSink::Write(std::span<const std::uint8_t> frame) {
  if (fd_ < 0) throw Error(ErrorCode::kNetwork, label_ + ": write on closed connection");
  std::size_t sent = 0;
  while (sent < frame.size()) {
    const ssize_t n = ::send(fd_, frame.data() + sent, frame.size() - sent, MSG_NOSIGNAL);
    if (n < 0) {
      if (errno == EINTR) continue;
      throw Error(ErrorCode::kNetwork, label_ + ": send failed: " + Errno());
    }
    sent += static_cast<std::size_t>(n);
  }
}

void SocketFrameSink::Close() {
  if (fd_ < 0) return;
  ::shutdown(fd_, SHUT_WR);
  ::close(fd_);
  fd_ = -1;
}

SocketFrameSource::SocketFrameSource(int fd, std::string name) : fd_(fd), name_(std::move(name)) {
  ::fcntl(fd_, F_SETFL, ::fcntl(fd_, F_GETFL) | O_NONBLOCK);
}

SocketFrameSource::~SocketFrameSource() {
  if (fd_ >= 0) ::close(fd_);
}

bool SocketFrameSource::ExtractFrame(std::vector<std::uint8_t>& payload) {
  const std::size_t available = buffer_.size() - consumed_;
  if (available < kFrameHeaderBytes) return false;
  const std::uint32_t length = ReadU32(buffer_.data() + consumed_);
  if (length > kMaxFrameBytes) {
    throw Error(ErrorCode::kMalformedFrame, name_ + ": frame length " + std::to_string(length) + " too large");
  }
  if (available < kFrameHeaderBytes + length) return false;
  const auto* begin = buffer_.data() + consumed_ + kFrameHeaderBytes;
  payload.assign(begin, begin + length);
  consumed_ += kFrameHeaderBytes + length;
  if (consumed_ == buffer_.size()) {
    buffer_.clear();
    consumed_ = 0;
  }
  return true;
}

PollResult SocketFrameSource::TryNext(std::vector<std::uint8_t>& payload) {
  if (ExtractFrame(payload)) return PollResult::kFrame;
  while (!eof_) {
    if (consumed_ > 0) {
      buffer_.erase(buffer_.begin(), buffer_.begin() + static_cast<std::ptrdiff_t>(consumed_));
      consumed_ = 0;
    }
    std::uint8_t chunk[64 * 1024];
    const ssize_t n = ::recv(fd_, chunk, sizeof(chunk), 0);
    if (n > 0) {
      buffer_.insert(buffer_.end(), chunk, chunk + n);
      if (ExtractFrame(payload)) return PollResult::kFrame;
      continue;
    }
    if (n == 0) {
      eof_ = true;
      break;
    }
    if (errno == EINTR) continue;
    if (errno == EAGAIN || errno == EWOULDBLOCK) return PollResult::kNotReady;
    throw Error(ErrorCode::kNetwork, name_ + ": recv failed: " + Errno());
  }
  if (buffer_.size() != consumed_) {
    throw Error(ErrorCode::kMalformedFrame, name_ + ": connection closed inside a frame");
  }
  return PollResult::kEnd;
}

FrameListener::FrameListener(const std::string& interface, std::uint16_t port) {
  fd_ = ::socket(AF_INET, SOCK_STREAM, 0);
  if (fd_ < 0) throw Error(ErrorCode::kNetwork, "socket: " + Errno());
  const int one = 1;
  ::setsockopt(fd_, SOL_SOCKET, SO_REUSEADDR, &one, sizeof(one));
  sockaddr_in addr{};
  addr.sin_family = AF_INET;
  addr.sin_port = htons(port);
  if (::inet_pton(AF_INET, interface.c_str(), &addr.sin_addr) != 1) {
    ::close(fd_);
    throw Error(ErrorCode::kInvalidArgument, "not an IPv4 interface address: " + interface);
  }
  if (::bind(fd_, reinterpret_cast<sockaddr*>(&addr), sizeof(addr)) != 0 || ::listen(fd_, 128) != 0) {
    const std::string why = Errno();
    ::close(fd_);
    throw Error(ErrorCode::kNetwork, "cannot listen on " + interface + ":" + std::to_string(port) + ": " + why);
  }
  socklen_t len = sizeof(addr);
  ::getsockname(fd_, reinterpret_cast<sockaddr*>(&addr), &len);
  port_ = ntohs(addr.sin_port);
}

FrameListener::~FrameListener() {
  if (fd_ >= 0) ::close(fd_);
}

std::vector<std::unique_ptr<FrameSource>> FrameListener::Accept(std::size_t count) {
  std::vector<std::unique_ptr<FrameSource>> sources;
  while (sources.size() < count) {
    sockaddr_in peer{};
    socklen_t len = sizeof(peer);
    const int fd = ::accept(fd_, reinterpret_cast<sockaddr*>(&peer), &len);
    if (fd < 0) {
      if (errno == EINTR) continue;
      throw Error(ErrorCode::kNetwork, "accept: " + Errno());
    }
    char ip[INET_ADDRSTRLEN] = {};
    ::inet_ntop(AF_INET, &peer.sin_addr, ip, sizeof(ip));
    sources.push_back(std::make_unique<SocketFrameSource>(
        fd, "connection " + std::to_string(sources.size()) + " from " + ip + ":" +
                std::to_string(ntohs(peer.sin_port))));
  }
  return sources;
}

void WaitReadable(std::span<const int> fds, int timeout_ms) {
  std::vector<pollfd> polls;
  for (int fd : fds) {
    if (fd >= 0) polls.push_back({fd, POLLIN, 0});
  }
  if (polls.empty()) return;
  ::poll(polls.data(), polls.size(), timeout_ms);
}

}  // namespace snailtrail
