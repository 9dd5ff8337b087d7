#pragma once

#include <cstdint>
#include <deque>
#include <span>
#include <string>
#include <vector>

#include <fcntl.h>
#include <termios.h>
#include <unistd.h>

#include "vanguard/errors.hpp"

namespace vanguard {

// Bidirectional byte channel. One producer, one consumer per direction;
// the simulator loopback and a real port share this contract.
class ByteChannel {
 public:
  virtual ~ByteChannel() = default;
  virtual void write(std::span<const std::uint8_t> bytes) = 0;
  // Returns up to max_bytes; empty result only after timeout_ms elapses.
  virtual std::vector<std::uint8_t> read(std::size_t max_bytes,
                                         int timeout_ms) = 0;
};

// In-process loopback: bytes written come straight back on read.
class LoopbackChannel : public ByteChannel {
 public:
  void write(std::span<const std::uint8_t> bytes) override {
    buf_.insert(buf_.end(), bytes.begin(), bytes.end());
  }

  std::vector<std::uint8_t> read(std::size_t max_bytes, int timeout_ms) override {
    if (buf_.empty()) {
      if (timeout_ms > 0)
        throw Error(Err::Timeout, "no data within timeout");
      return {};
    }
    std::size_t n = std::min(max_bytes, buf_.size());
    std::vector<std::uint8_t> out(buf_.begin(), buf_.begin() + n);
    buf_.erase(buf_.begin(), buf_.begin() + n);
    return out;
  }

 private:
  std::deque<std::uint8_t> buf_;
};

struct SerialConfig {
  std::string port;
  int baud = 115200;
  int timeout_ms = 1000;
};

inline speed_t baud_constant(int baud) {
  switch (baud) {
    case 9600: return B9600;
    case 19200: return B19200;
    case 38400: return B38400;
    case 57600: return B57600;
    case 115200: return B115200;
    case 230400: return B230400;
    default:
      throw Error(Err::ConfigError, "unsupported baud rate");
  }
}

// 8-N-1, no flow control, raw mode.
class PosixSerialPort : public ByteChannel {
 public:
  explicit PosixSerialPort(const SerialConfig& cfg) : cfg_(cfg) {
    fd_ = ::open(cfg.port.c_str(), O_RDWR | O_NOCTTY);
    if (fd_ < 0)
      throw Error(Err::PortUnavailable, "cannot open port " + cfg.port);
    termios tio{};
    if (tcgetattr(fd_, &tio) != 0) {
      ::close(fd_);
      throw Error(Err::PortUnavailable, "tcgetattr failed on " + cfg.port);
    }
    cfmakeraw(&tio);
    tio.c_cflag &= ~static_cast<tcflag_t>(CSTOPB | PARENB | CRTSCTS);
    tio.c_cflag |= CS8 | CLOCAL | CREAD;
    speed_t sp = baud_constant(cfg.baud);
    cfsetispeed(&tio, sp);
    cfsetospeed(&tio, sp);
    // Block up to 0.1 s per read call; the outer loop enforces timeout_ms.
    tio.c_cc[VMIN] = 0;
    tio.c_cc[VTIME] = 1;
    if (tcsetattr(fd_, TCSANOW, &tio) != 0) {
      ::close(fd_);
      throw Error(Err::PortUnavailable, "tcsetattr failed on " + cfg.port);
    }
  }

  ~PosixSerialPort() override {
    if (fd_ >= 0) ::close(fd_);
  }

  PosixSerialPort(const PosixSerialPort&) = delete;
  PosixSerialPort& operator=(const PosixSerialPort&) = delete;

  void write(std::span<const std::uint8_t> bytes) override {
    std::size_t done = 0;
    while (done < bytes.size()) {
      ssize_t n = ::write(fd_, bytes.data() + done, bytes.size() - done);
      if (n < 0) throw Error(Err::PortUnavailable, "write failed");
      done += static_cast<std::size_t>(n);
    }
  }

  std::vector<std::uint8_t> read(std::size_t max_bytes, int timeout_ms) override {
    std::vector<std::uint8_t> out;
    int waited_ms = 0;
    while (out.size() < max_bytes) {
      std::uint8_t chunk[256];
      std::size_t want = std::min(sizeof(chunk), max_bytes - out.size());
      ssize_t n = ::read(fd_, chunk, want);
      if (n < 0) throw Error(Err::PortUnavailable, "read failed");
      if (n == 0) {
        waited_ms += 100;
        if (waited_ms >= timeout_ms) {
          if (out.empty())
            throw Error(Err::Timeout, "no data within timeout");
          break;
        }
        continue;
      }
      out.insert(out.end(), chunk, chunk + n);
    }
    return out;
  }

 private:
  SerialConfig cfg_;
  int fd_ = -1;
};

}  // namespace vanguard
