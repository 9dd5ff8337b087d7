#pragma once

#include <array>
#include <cstdint>
#include <optional>
#include <vector>

#include "vanguard/errors.hpp"
#include "vanguard/register_map.hpp"
#include "vanguard/voltage_codec.hpp"

namespace vanguard {

enum class RefSelect { Internal2V5, External };

// Output marker for one channel. A powered-down channel is reported as
// high impedance; its data register content is never surfaced as a voltage.
struct ChannelOutput {
  enum class Kind { HighImpedance, Active } kind = Kind::HighImpedance;
  VoltageCode code = 0;
  RangeCode range = RangeCode::U5;
  // Range changed since the last committed data write; the stored code
  // predates the current span.
  bool stale = false;

  bool active() const { return kind == Kind::Active; }
};

// Register-accurate model of one 16-channel DAC. Value semantics: copy,
// mutate, compare. The owning simulator serializes all access.
class DacRegisterFile {
 public:
  static constexpr std::uint16_t kDeviceIdWord = 0x29C0;
  static constexpr std::uint16_t kGenconfigRefDisable = 1u << 14;
  static constexpr std::uint16_t kGenconfigAutoShutdown = 1u << 13;
  static constexpr std::uint16_t kTriggerSoftLdac = 1u << 4;

  explicit DacRegisterFile(RegisterMap map = RegisterMap::dac81416(),
                           RangeNibbleTable ranges = RangeNibbleTable::dac81416())
      : map_(map), ranges_(ranges) {
    data_.fill(0);
    staged_.fill(std::nullopt);
    range_.fill(RangeCode::U5);
    // Reset state: all channels powered down until configured.
    pwdwn_mask_ = 0xFFFF;
  }

  const RegisterMap& map() const { return map_; }
  const RangeNibbleTable& ranges() const { return ranges_; }

  void write_register(std::uint8_t addr, std::uint16_t word) {
    auto reg = map_.name(addr);
    if (!reg) throw Error(Err::ReservedAddress, "write to reserved address");
    switch (*reg) {
      case Reg::Nop:
        return;
      case Reg::DeviceId:
      case Reg::Status:
        throw Error(Err::ReadOnlyRegister, "register is read-only");
      case Reg::SpiConfig:
        spiconfig_ = word;
        return;
      case Reg::GenConfig:
        genconfig_ = word;
        return;
      case Reg::BrdConfig:
        brdconfig_ = word;
        return;
      case Reg::SyncConfig:
        sync_mask_ = word;
        return;
      case Reg::DacPwdwn:
        pwdwn_mask_ = word;
        return;
      case Reg::DacRange0:
      case Reg::DacRange1:
      case Reg::DacRange2:
      case Reg::DacRange3: {
        int bank = static_cast<int>(*reg) - static_cast<int>(Reg::DacRange0);
        auto code = ranges_.decode(static_cast<std::uint8_t>(word & 0xF));
        if (!code) throw Error(Err::InvalidRangeCode, "unknown range nibble");
        set_bank_range(bank, *code);
        return;
      }
      case Reg::Trigger:
        if (word & kTriggerSoftLdac) commit_trigger();
        return;
      case Reg::Brdcast:
        brdcast_ = word;
        for (int ch = 0; ch < kChannelCount; ++ch) {
          if (brdconfig_ & (1u << ch)) route_data_write(ch, word);
        }
        return;
      default: {
        int ch = static_cast<int>(*reg) - static_cast<int>(Reg::Dac0);
        route_data_write(ch, word);
        return;
      }
    }
  }

  std::uint16_t read_register(std::uint8_t addr) const {
    auto reg = map_.name(addr);
    if (!reg) throw Error(Err::ReservedAddress, "read of reserved address");
    switch (*reg) {
      case Reg::Nop:
        return 0;
      case Reg::DeviceId:
        return kDeviceIdWord;
      case Reg::Status:
        return status_word();
      case Reg::SpiConfig:
        return spiconfig_;
      case Reg::GenConfig:
        return genconfig_;
      case Reg::BrdConfig:
        return brdconfig_;
      case Reg::SyncConfig:
        return sync_mask_;
      case Reg::DacPwdwn:
        return pwdwn_mask_;
      case Reg::DacRange0:
      case Reg::DacRange1:
      case Reg::DacRange2:
      case Reg::DacRange3: {
        int bank = static_cast<int>(*reg) - static_cast<int>(Reg::DacRange0);
        std::uint16_t n = ranges_.nibble(range_[bank]);
        return static_cast<std::uint16_t>(n * 0x1111);
      }
      case Reg::Trigger:
        return 0;
      case Reg::Brdcast:
        return brdcast_;
      default: {
        // Readback always reflects the active (committed) code.
        int ch = static_cast<int>(*reg) - static_cast<int>(Reg::Dac0);
        return data_[ch];
      }
    }
  }

  // Moves every staged code into its data register in one atomic commit.
  // Entries staged while a channel was in synchronous mode survive a later
  // SYNCCONFIG change and still commit here.
  void commit_trigger() {
    for (int ch = 0; ch < kChannelCount; ++ch) {
      if (staged_[ch]) {
        commit_data(ch, *staged_[ch]);
        staged_[ch].reset();
      }
    }
  }

  // Latches a code into the staging slot unconditionally. Playback in
  // synchronous mode uses this path; the sync mask only governs host writes.
  void stage_code(int channel, std::uint16_t word) {
    if (channel < 0 || channel >= kChannelCount)
      throw Error(Err::OutOfRange, "channel index out of range");
    staged_[channel] = word;
  }

  void configure_power(std::uint16_t mask) { pwdwn_mask_ = mask; }

  void configure_range(int bank, RangeCode code) {
    if (bank < 0 || bank >= kBankCount)
      throw Error(Err::OutOfRange, "bank index out of range");
    set_bank_range(bank, code);
  }

  void configure_reference(RefSelect sel) {
    if (sel == RefSelect::External) {
      genconfig_ |= kGenconfigRefDisable;
    } else {
      genconfig_ &= static_cast<std::uint16_t>(~kGenconfigRefDisable);
    }
  }

  void raise_temp_alarm() {
    temp_alarm_ = true;
    if (genconfig_ & kGenconfigAutoShutdown) {
      pwdwn_mask_ = 0xFFFF;
      shutdown_latched_ = true;
    }
  }

  ChannelOutput output(int channel) const {
    ChannelOutput out;
    if (pwdwn_mask_ & (1u << channel)) {
      out.kind = ChannelOutput::Kind::HighImpedance;
      return out;
    }
    out.kind = ChannelOutput::Kind::Active;
    out.code = data_[channel];
    out.range = range_[channel / 4];
    out.stale = (stale_mask_ & (1u << channel)) != 0;
    return out;
  }

  RefSelect ref_select() const {
    return (genconfig_ & kGenconfigRefDisable) ? RefSelect::External
                                               : RefSelect::Internal2V5;
  }

  bool temp_alarm() const { return temp_alarm_; }
  bool shutdown_latched() const { return shutdown_latched_; }
  bool dac_busy() const { return dac_busy_; }
  void set_dac_busy(bool busy) { dac_busy_ = busy; }

  std::uint16_t pwdwn_mask() const { return pwdwn_mask_; }
  std::uint16_t sync_mask() const { return sync_mask_; }
  RangeCode bank_range(int bank) const { return range_[bank]; }
  std::optional<std::uint16_t> staged(int channel) const {
    return staged_[channel];
  }
  std::uint16_t active_code(int channel) const { return data_[channel]; }

  // 16 data words, 16 staged slots, then configuration words.
  std::vector<std::uint16_t> serialize() const {
    std::vector<std::uint16_t> w;
    w.reserve(45);
    std::uint16_t staged_mask = 0;
    for (int ch = 0; ch < kChannelCount; ++ch) w.push_back(data_[ch]);
    for (int ch = 0; ch < kChannelCount; ++ch) {
      if (staged_[ch]) staged_mask |= (1u << ch);
      w.push_back(staged_[ch].value_or(0));
    }
    w.push_back(staged_mask);
    w.push_back(pwdwn_mask_);
    w.push_back(sync_mask_);
    for (int bank = 0; bank < kBankCount; ++bank)
      w.push_back(ranges_.nibble(range_[bank]));
    w.push_back(spiconfig_);
    w.push_back(genconfig_);
    w.push_back(brdconfig_);
    w.push_back(status_word());
    w.push_back(stale_mask_);
    w.push_back(brdcast_);
    return w;
  }

  static DacRegisterFile deserialize(const std::vector<std::uint16_t>& w,
                                     RegisterMap map = RegisterMap::dac81416(),
                                     RangeNibbleTable ranges = RangeNibbleTable::dac81416()) {
    if (w.size() != 45)
      throw Error(Err::InvalidField, "serialized register file must be 45 words");
    DacRegisterFile f(map, ranges);
    std::uint16_t staged_mask = w[32];
    for (int ch = 0; ch < kChannelCount; ++ch) {
      f.data_[ch] = w[ch];
      if (staged_mask & (1u << ch)) f.staged_[ch] = w[16 + ch];
    }
    f.pwdwn_mask_ = w[33];
    f.sync_mask_ = w[34];
    for (int bank = 0; bank < kBankCount; ++bank) {
      auto code = ranges.decode(static_cast<std::uint8_t>(w[35 + bank] & 0xF));
      if (!code) throw Error(Err::InvalidField, "bad range nibble in serialized file");
      f.range_[bank] = *code;
    }
    f.spiconfig_ = w[39];
    f.genconfig_ = w[40];
    f.brdconfig_ = w[41];
    f.temp_alarm_ = (w[42] & 1u) != 0;
    f.dac_busy_ = (w[42] & 2u) != 0;
    f.shutdown_latched_ = (w[42] & 4u) != 0;
    f.stale_mask_ = w[43];
    f.brdcast_ = w[44];
    return f;
  }

  friend bool operator==(const DacRegisterFile& a, const DacRegisterFile& b) {
    return a.serialize() == b.serialize();
  }

 private:
  std::uint16_t status_word() const {
    std::uint16_t s = 0;
    if (temp_alarm_) s |= 1u;
    if (dac_busy_) s |= 2u;
    if (shutdown_latched_) s |= 4u;
    return s;
  }

  void route_data_write(int ch, std::uint16_t word) {
    if (sync_mask_ & (1u << ch)) {
      staged_[ch] = word;
    } else {
      commit_data(ch, word);
    }
  }

  void commit_data(int ch, std::uint16_t word) {
    data_[ch] = word;
    stale_mask_ &= static_cast<std::uint16_t>(~(1u << ch));
  }

  void set_bank_range(int bank, RangeCode code) {
    range_[bank] = code;
    stale_mask_ |= static_cast<std::uint16_t>(0xF << (bank * 4));
  }

  RegisterMap map_;
  RangeNibbleTable ranges_;
  std::array<std::uint16_t, kChannelCount> data_{};
  std::array<std::optional<std::uint16_t>, kChannelCount> staged_{};
  std::array<RangeCode, kBankCount> range_{};
  std::uint16_t pwdwn_mask_ = 0xFFFF;
  std::uint16_t sync_mask_ = 0;
  std::uint16_t stale_mask_ = 0;
  std::uint16_t spiconfig_ = 0;
  std::uint16_t genconfig_ = 0;
  std::uint16_t brdconfig_ = 0xFFFF;
  std::uint16_t brdcast_ = 0;
  bool temp_alarm_ = false;
  bool dac_busy_ = false;
  bool shutdown_latched_ = false;
};

}  // namespace vanguard
