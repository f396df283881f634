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

// Byte transports for framed event streams: files and TCP sockets.

#ifndef SNAILTRAIL_SRC_FRAME_IO_H_
#define SNAILTRAIL_SRC_FRAME_IO_H_

#include <cstdint>
#include <cstdio>
#include <memory>
#include <span>
#include <string>
#include <vector>

namespace snailtrail {

class FrameSink {
 public:
  virtual ~FrameSink() = default;
  // Writes one complete frame. Blocks until the bytes are handed off.
  virtual void Write(std::span<const std::uint8_t> frame) = 0;
  virtual void Close() = 0;
};

enum class PollResult { kFrame, kNotReady, kEnd };

class FrameSource {
 public:
  virtual ~FrameSource() = default;
  // Non-blocking. On kFrame `payload` holds one frame without its length
  // prefix. kEnd is returned at a clean end of stream.
  virtual PollResult TryNext(std::vector<std::uint8_t>& payload) = 0;
  // Descriptor to poll() on while kNotReady, or -1 for sources that are
  // never NotReady.
  virtual int fd() const { return -1; }
  virtual const std::string& name() const = 0;
};

class FileFrameSink : public FrameSink {
 public:
  explicit FileFrameSink(const std::string& path);
  ~FileFrameSink() override;
  void Write(std::span<const std::uint8_t> frame) override;
  void Close() override;

 private:
  std::string path_;
  std::FILE* file_ = nullptr;
};

class FileFrameSource : public FrameSource {
 public:
  explicit FileFrameSource(const std::string& path);
  ~FileFrameSource() override;
  PollResult TryNext(std::vector<std::uint8_t>& payload) override;
  const std::string& name() const override { return path_; }

 private:
  std::string path_;
  std::FILE* file_ = nullptr;
  std::uint64_t offset_ = 0;
};

// Blocking TCP client. `label` names the writer in error messages.
class SocketFrameSink : public FrameSink {
 public:
  SocketFrameSink(const std::string& host, std::uint16_t port, std::string label);
  ~SocketFrameSink() override;
  void Write(std::span<const std::uint8_t> frame) override;
  void Close() override;

 private:
  int fd_ = -1;
  std::string label_;
};

class SocketFrameSource : public FrameSource {
 public:
  SocketFrameSource(int fd, std::string name);
  ~SocketFrameSource() override;
  PollResult TryNext(std::vector<std::uint8_t>& payload) override;
  int fd() const override { return fd_; }
  const std::string& name() const override { return name_; }

 private:
  bool ExtractFrame(std::vector<std::uint8_t>& payload);

  int fd_;
  std::string name_;
  std::vector<std::uint8_t> buffer_;
  std::size_t consumed_ = 0;
  bool eof_ = false;
};

// Listening TCP socket. Binds in the constructor; port 0 picks a free port.
class FrameListener {
 public:
  FrameListener(const std::string& interface, std::uint16_t port);
  ~FrameListener();
  FrameListener(const FrameListener&) = delete;
  FrameListener& operator=(const FrameListener&) = delete;

  std::uint16_t port() const { return port_; }
  // Blocks until `count` connections have been accepted.
  std::vector<std::unique_ptr<FrameSource>> Accept(std::size_t count);

 private:
  int fd_ = -1;
  std::uint16_t port_ = 0;
};

// Waits until any of `fds` is readable or `timeout_ms` elapses.
void WaitReadable(std::span<const int> fds, int timeout_ms);

}  // namespace snailtrail

#endif  // SNAILTRAIL_SRC_FRAME_IO_H_
