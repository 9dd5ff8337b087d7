#pragma once

#include <array>
#include <cstdint>
#include <optional>

#include "vanguard/errors.hpp"
#include "vanguard/voltage_codec.hpp"

namespace vanguard {

// Symbolic names for the device's register set. Numeric addresses live in
// RegisterMap so retargeting a different part is a one-table edit.
enum class Reg : std::uint8_t {
  Nop,
  DeviceId,
  Status,
  SpiConfig,
  GenConfig,
  BrdConfig,
  SyncConfig,
  DacPwdwn,
  DacRange0,
  DacRange1,
  DacRange2,
  DacRange3,
  Trigger,
  Brdcast,
  Dac0,
  Dac1,
  Dac2,
  Dac3,
  Dac4,
  Dac5,
  Dac6,
  Dac7,
  Dac8,
  Dac9,
  Dac10,
  Dac11,
  Dac12,
  Dac13,
  Dac14,
  Dac15,
};

inline constexpr int kRegCount = 30;
inline constexpr int kChannelCount = 16;
inline constexpr int kBankCount = 4;

constexpr Reg dac_reg(int channel) {
  return static_cast<Reg>(static_cast<int>(Reg::Dac0) + channel);
}

constexpr Reg range_reg(int bank) {
  return static_cast<Reg>(static_cast<int>(Reg::DacRange0) + bank);
}

// Address table: one numeric address per symbolic name, 6-bit address space.
// Addresses without a name are reserved.
struct RegisterMap {
  std::array<std::uint8_t, kRegCount> addr_of;

  static RegisterMap dac81416() {
    RegisterMap m{};
    auto set = [&m](Reg r, std::uint8_t a) {
      m.addr_of[static_cast<int>(r)] = a;
    };
    set(Reg::Nop, 0x00);
    set(Reg::DeviceId, 0x01);
    set(Reg::Status, 0x02);
    set(Reg::SpiConfig, 0x03);
    set(Reg::GenConfig, 0x04);
    set(Reg::BrdConfig, 0x05);
    set(Reg::SyncConfig, 0x06);
    set(Reg::DacPwdwn, 0x09);
    set(Reg::DacRange0, 0x0A);
    set(Reg::DacRange1, 0x0B);
    set(Reg::DacRange2, 0x0C);
    set(Reg::DacRange3, 0x0D);
    set(Reg::Trigger, 0x0E);
    set(Reg::Brdcast, 0x0F);
    for (int ch = 0; ch < kChannelCount; ++ch) {
      set(dac_reg(ch), static_cast<std::uint8_t>(0x10 + ch));
    }
    return m;
  }

  std::uint8_t addr(Reg r) const { return addr_of[static_cast<int>(r)]; }

  std::optional<Reg> name(std::uint8_t addr) const {
    for (int i = 0; i < kRegCount; ++i) {
      if (addr_of[i] == addr) return static_cast<Reg>(i);
    }
    return std::nullopt;
  }

  // Channel index when addr is a data register, else nullopt.
  std::optional<int> data_channel(std::uint8_t addr) const {
    auto r = name(addr);
    if (!r) return std::nullopt;
    int i = static_cast<int>(*r) - static_cast<int>(Reg::Dac0);
    if (i < 0 || i >= kChannelCount) return std::nullopt;
    return i;
  }
};

// Range-code nibble encodings, symbolic everywhere outside this table.
struct RangeNibbleTable {
  std::array<std::uint8_t, 8> nibble_of;

  static RangeNibbleTable dac81416() {
    RangeNibbleTable t{};
    auto set = [&t](RangeCode c, std::uint8_t n) {
      t.nibble_of[static_cast<int>(c)] = n;
    };
    set(RangeCode::U5, 0x0);
    set(RangeCode::U10, 0x1);
    set(RangeCode::U20, 0x2);
    set(RangeCode::U40, 0x3);
    set(RangeCode::B2V5, 0xC);
    set(RangeCode::B5, 0x9);
    set(RangeCode::B10, 0xA);
    set(RangeCode::B20, 0xB);
    return t;
  }

  std::uint8_t nibble(RangeCode c) const {
    return nibble_of[static_cast<int>(c)];
  }

  std::optional<RangeCode> decode(std::uint8_t nibble) const {
    for (int i = 0; i < 8; ++i) {
      if (nibble_of[i] == nibble) return static_cast<RangeCode>(i);
    }
    return std::nullopt;
  }
};

}  // namespace vanguard
