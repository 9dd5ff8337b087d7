#pragma once

#include <cstdint>
#include <cstdio>
#include <string>
#include <vector>

#include "vanguard/dac_register_model.hpp"
#include "vanguard/errors.hpp"
#include "vanguard/register_map.hpp"

namespace vanguard {

// One 24-bit transaction word. Bit 23 is the read flag, bit 22 is reserved
// and must stay clear, bits 21..16 carry the address, 15..0 the payload.
struct SpiFrame {
  bool rw = false;
  std::uint8_t addr = 0;
  std::uint16_t payload = 0;

  std::uint32_t raw() const {
    std::uint32_t r = payload;
    r |= static_cast<std::uint32_t>(addr & 0x3F) << 16;
    if (rw) r |= 1u << 23;
    return r;
  }

  friend bool operator==(const SpiFrame&, const SpiFrame&) = default;
};

inline constexpr int kFrameBits = 24;

inline SpiFrame encode_write(std::uint8_t addr, std::uint16_t word) {
  if (addr > 0x3F) throw Error(Err::OutOfRange, "address exceeds 6 bits");
  return SpiFrame{false, addr, word};
}

inline SpiFrame encode_read(std::uint8_t addr) {
  if (addr > 0x3F) throw Error(Err::OutOfRange, "address exceeds 6 bits");
  return SpiFrame{true, addr, 0};
}

inline SpiFrame decode_frame(std::uint32_t raw) {
  if (raw & (1u << 22))
    throw Error(Err::ReservedBitSet, "reserved bit 22 set in frame");
  SpiFrame f;
  f.rw = (raw & (1u << 23)) != 0;
  f.addr = static_cast<std::uint8_t>((raw >> 16) & 0x3F);
  f.payload = static_cast<std::uint16_t>(raw & 0xFFFF);
  return f;
}

// Streaming burst: one command/address byte phase, then contiguous 16-bit
// payloads landing at start_addr, start_addr+1, ...
struct StreamBurst {
  std::uint8_t start_addr = 0;
  std::vector<std::uint16_t> words;

  int cs_asserted_bits() const {
    return 8 + 16 * static_cast<int>(words.size());
  }
};

inline StreamBurst encode_stream(std::uint8_t start_addr,
                                 std::vector<std::uint16_t> words,
                                 const RegisterMap& map = RegisterMap::dac81416()) {
  // Every address in the run must resolve to a data register.
  for (std::size_t i = 0; i < words.size(); ++i) {
    auto a = static_cast<std::uint8_t>(start_addr + i);
    if (!map.data_channel(a))
      throw Error(Err::AddressOverrun, "stream run leaves the data window");
  }
  return StreamBurst{start_addr, std::move(words)};
}

inline void replay_stream(const StreamBurst& burst, DacRegisterFile& file) {
  for (std::size_t i = 0; i < burst.words.size(); ++i) {
    file.write_register(static_cast<std::uint8_t>(burst.start_addr + i),
                        burst.words[i]);
  }
}

// Daisy chain: frames shift through the devices, so the first frame pushed
// into the buffer ends up in the last device when chip select rises.
inline std::vector<std::uint32_t> chain_encode(const std::vector<SpiFrame>& frames) {
  std::vector<std::uint32_t> buffer;
  buffer.reserve(frames.size());
  for (auto it = frames.rbegin(); it != frames.rend(); ++it)
    buffer.push_back(it->raw());
  return buffer;
}

inline std::vector<SpiFrame> chain_deliver(const std::vector<std::uint32_t>& buffer,
                                           std::size_t device_count) {
  if (buffer.size() != device_count)
    throw Error(Err::LengthMismatch, "chain buffer length != device count");
  std::vector<SpiFrame> frames(device_count);
  for (std::size_t k = 0; k < device_count; ++k)
    frames[k] = decode_frame(buffer[device_count - 1 - k]);
  return frames;
}

inline double transaction_time(int frame_bits, double sclk_hz,
                               double gap_s = 0.0) {
  if (sclk_hz <= 0) throw Error(Err::OutOfRange, "sclk must be positive");
  return frame_bits / sclk_hz + gap_s;
}

// One 6-hex-digit word per line, for golden-file comparison.
inline std::string hex_dump(const std::vector<SpiFrame>& frames) {
  std::string out;
  char line[8];
  for (const auto& f : frames) {
    std::snprintf(line, sizeof(line), "%06X\n", f.raw());
    out += line;
  }
  return out;
}

inline std::vector<SpiFrame> parse_hex_dump(const std::string& text) {
  std::vector<SpiFrame> frames;
  std::size_t pos = 0;
  while (pos < text.size()) {
    std::size_t eol = text.find('\n', pos);
    if (eol == std::string::npos) eol = text.size();
    std::string line = text.substr(pos, eol - pos);
    pos = eol + 1;
    if (line.empty()) continue;
    if (line.size() != 6)
      throw Error(Err::InvalidField, "hex dump lines are 6 digits");
    std::uint32_t raw = static_cast<std::uint32_t>(std::stoul(line, nullptr, 16));
    frames.push_back(decode_frame(raw));
  }
  return frames;
}

}  // namespace vanguard
