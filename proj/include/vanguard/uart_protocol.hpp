#pragma once

#include <cstdint>
#include <cstdio>
#include <deque>
#include <span>
#include <string>
#include <vector>

#include "vanguard/errors.hpp"

namespace vanguard {

// Host-to-module packets are fixed 7-byte frames:
//   sync 0xA5 | opcode | dac_index | addr | data hi | data lo | XOR checksum
// Fixed length keeps the gateware-side parser a plain byte counter and makes
// resync after corruption cheap.
inline constexpr std::uint8_t kUartSync = 0xA5;
inline constexpr std::size_t kUartPacketLen = 7;
inline constexpr std::uint8_t kResponseSync = 0x5A;
inline constexpr std::size_t kResponseLen = 6;

enum class Opcode : std::uint8_t {
  WriteReg = 0x01,
  Trigger = 0x02,
  ReadReg = 0x03,
  LoadWaveformWord = 0x04,
};

// Sub-commands carried in the addr byte of LoadWaveformWord packets.
inline constexpr std::uint8_t kWaveBegin = 0x01;
inline constexpr std::uint8_t kWaveAppend = 0x02;
inline constexpr std::uint8_t kWaveEnd = 0x03;

struct Command {
  Opcode opcode = Opcode::WriteReg;
  std::uint8_t dac_index = 0;
  std::uint8_t addr = 0;
  std::uint16_t data = 0;

  friend bool operator==(const Command&, const Command&) = default;
};

inline std::uint8_t xor_checksum(std::span<const std::uint8_t> bytes) {
  std::uint8_t x = 0;
  for (auto b : bytes) x ^= b;
  return x;
}

inline std::array<std::uint8_t, kUartPacketLen> encode_packet(const Command& cmd) {
  auto op = static_cast<std::uint8_t>(cmd.opcode);
  if (op < 0x01 || op > 0x04)
    throw Error(Err::InvalidField, "unknown opcode");
  if (cmd.dac_index > 1)
    throw Error(Err::InvalidField, "dac_index must be 0 or 1");
  if (cmd.addr > 0x3F && cmd.opcode != Opcode::LoadWaveformWord)
    throw Error(Err::InvalidField, "register address exceeds 6 bits");
  std::array<std::uint8_t, kUartPacketLen> p{};
  p[0] = kUartSync;
  p[1] = op;
  p[2] = cmd.dac_index;
  p[3] = cmd.addr;
  p[4] = static_cast<std::uint8_t>(cmd.data >> 8);
  p[5] = static_cast<std::uint8_t>(cmd.data & 0xFF);
  p[6] = xor_checksum(std::span(p).first(6));
  return p;
}

enum class UartErrorKind { Checksum, UnknownOpcode, InvalidField };

struct ParserStats {
  std::uint64_t packets_ok = 0;
  std::uint64_t checksum_errors = 0;
  // Bytes discarded while hunting for a believable sync position.
  std::uint64_t resyncs = 0;
};

struct FeedResult {
  std::vector<Command> commands;
  std::vector<UartErrorKind> errors;
};

// Incremental packet parser. Chunking never changes the emitted command
// sequence, and a failed sync candidate is abandoned one byte at a time so
// a valid packet starting later in the buffer is never skipped.
class Parser {
 public:
  FeedResult feed(std::span<const std::uint8_t> bytes) {
    buf_.insert(buf_.end(), bytes.begin(), bytes.end());
    FeedResult result;
    for (;;) {
      if (!buf_.empty() && buf_.front() != kUartSync) {
        buf_.pop_front();
        ++stats_.resyncs;
        continue;
      }
      if (buf_.size() < kUartPacketLen) break;
      std::array<std::uint8_t, kUartPacketLen> p;
      for (std::size_t i = 0; i < kUartPacketLen; ++i) p[i] = buf_[i];
      if (xor_checksum(std::span(p).first(6)) != p[6]) {
        result.errors.push_back(UartErrorKind::Checksum);
        ++stats_.checksum_errors;
        buf_.pop_front();
        ++stats_.resyncs;
        continue;
      }
      if (p[1] < 0x01 || p[1] > 0x04) {
        result.errors.push_back(UartErrorKind::UnknownOpcode);
      } else if (p[2] > 1) {
        result.errors.push_back(UartErrorKind::InvalidField);
      } else {
        Command cmd;
        cmd.opcode = static_cast<Opcode>(p[1]);
        cmd.dac_index = p[2];
        cmd.addr = p[3];
        cmd.data = static_cast<std::uint16_t>((p[4] << 8) | p[5]);
        result.commands.push_back(cmd);
        ++stats_.packets_ok;
      }
      buf_.erase(buf_.begin(), buf_.begin() + kUartPacketLen);
    }
    return result;
  }

  const ParserStats& stats() const { return stats_; }
  std::size_t buffered() const { return buf_.size(); }

 private:
  std::deque<std::uint8_t> buf_;
  ParserStats stats_;
};

// Module-to-host readback replies use a distinct sync byte so captures of a
// shared line stay unambiguous:
//   sync 0x5A | addr | data hi | data lo | status | XOR checksum
// Status bit 0 flags an error, bit 4 carries the responding DAC index.
struct Response {
  std::uint8_t addr = 0;
  std::uint16_t data = 0;
  std::uint8_t dac_index = 0;
  bool error = false;

  friend bool operator==(const Response&, const Response&) = default;
};

inline std::array<std::uint8_t, kResponseLen> encode_response(const Response& r) {
  if (r.dac_index > 1)
    throw Error(Err::InvalidField, "dac_index must be 0 or 1");
  std::array<std::uint8_t, kResponseLen> p{};
  p[0] = kResponseSync;
  p[1] = r.addr;
  p[2] = static_cast<std::uint8_t>(r.data >> 8);
  p[3] = static_cast<std::uint8_t>(r.data & 0xFF);
  p[4] = static_cast<std::uint8_t>((r.error ? 1u : 0u) | (r.dac_index << 4));
  p[5] = xor_checksum(std::span(p).first(5));
  return p;
}

class ResponseParser {
 public:
  std::vector<Response> feed(std::span<const std::uint8_t> bytes) {
    buf_.insert(buf_.end(), bytes.begin(), bytes.end());
    std::vector<Response> out;
    for (;;) {
      if (!buf_.empty() && buf_.front() != kResponseSync) {
        buf_.pop_front();
        continue;
      }
      if (buf_.size() < kResponseLen) break;
      std::array<std::uint8_t, kResponseLen> p;
      for (std::size_t i = 0; i < kResponseLen; ++i) p[i] = buf_[i];
      if (xor_checksum(std::span(p).first(5)) != p[5]) {
        buf_.pop_front();
        continue;
      }
      Response r;
      r.addr = p[1];
      r.data = static_cast<std::uint16_t>((p[2] << 8) | p[3]);
      r.error = (p[4] & 1u) != 0;
      r.dac_index = (p[4] >> 4) & 1u;
      out.push_back(r);
      buf_.erase(buf_.begin(), buf_.begin() + kResponseLen);
    }
    return out;
  }

 private:
  std::deque<std::uint8_t> buf_;
};

// One packet per line, space-separated uppercase hex.
inline std::string packet_hex_line(std::span<const std::uint8_t> bytes) {
  std::string out;
  char b[4];
  for (std::size_t i = 0; i < bytes.size(); ++i) {
    std::snprintf(b, sizeof(b), i + 1 < bytes.size() ? "%02X " : "%02X", bytes[i]);
    out += b;
  }
  return out;
}

}  // namespace vanguard
