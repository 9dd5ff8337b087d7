#pragma once

#include <cmath>
#include <cstdint>
#include <cstdio>
#include <string>
#include <vector>

#include "vanguard/analog_model.hpp"
#include "vanguard/errors.hpp"
#include "vanguard/register_map.hpp"
#include "vanguard/spi_link.hpp"
#include "vanguard/voltage_codec.hpp"

namespace vanguard {

// Serial link timing shared by the waveform engine and the simulator.
// tick_hz is the gateware clock the schedule is expressed in.
struct LinkParams {
  double sclk_hz = 10e6;
  double gap_s = 0.0;
  double tick_hz = 10e6;

  double tick_s() const { return 1.0 / tick_hz; }

  std::uint64_t frame_ticks() const {
    return static_cast<std::uint64_t>(
        std::ceil(transaction_time(kFrameBits, sclk_hz, gap_s) * tick_hz));
  }
};

enum class PlaybackMode { PerStepAsync, StagedSync };

struct WaveformStep {
  std::uint64_t offset_ticks = 0;
  std::uint8_t dac_index = 0;
  std::uint8_t addr = 0;
  std::uint16_t code = 0;

  friend bool operator==(const WaveformStep&, const WaveformStep&) = default;
};

struct WaveformProgram {
  std::vector<WaveformStep> steps;
  PlaybackMode mode = PlaybackMode::PerStepAsync;

  friend bool operator==(const WaveformProgram&, const WaveformProgram&) = default;
};

struct RampSpec {
  int channel = 0;  // 0..31 across both devices
  double v_start = 0.0;
  double v_end = 0.0;
  double duration_s = 0.0;
  int n_points = 2;
};

// Linear-in-volts ramp, quantized per point. Feasibility is judged against
// the serialized per-device transaction time.
inline WaveformProgram generate_ramp(const RampSpec& spec, const OutputRange& range,
                                     MappingConvention conv, const LinkParams& link,
                                     const RegisterMap& map = RegisterMap::dac81416()) {
  if (spec.n_points < 2)
    throw Error(Err::InvalidField, "ramp needs at least two points");
  if (spec.duration_s <= 0.0)
    throw Error(Err::InvalidField, "ramp duration must be positive");
  if (spec.channel < 0 || spec.channel >= 2 * kChannelCount)
    throw Error(Err::OutOfRange, "channel index out of range");

  double txn = transaction_time(kFrameBits, link.sclk_hz, link.gap_s);
  if (static_cast<double>(spec.n_points) * txn > spec.duration_s)
    throw Error(Err::RateInfeasible, "point count exceeds link rate over duration");

  auto dac = static_cast<std::uint8_t>(spec.channel / kChannelCount);
  std::uint8_t addr = map.addr(dac_reg(spec.channel % kChannelCount));

  WaveformProgram prog;
  prog.steps.reserve(static_cast<std::size_t>(spec.n_points));
  double spacing = spec.duration_s / (spec.n_points - 1);
  for (int k = 0; k < spec.n_points; ++k) {
    double v = k == 0                  ? spec.v_start
               : k == spec.n_points - 1 ? spec.v_end
                                        : spec.v_start + (spec.v_end - spec.v_start) *
                                              static_cast<double>(k) /
                                              (spec.n_points - 1);
    WaveformStep step;
    step.offset_ticks = static_cast<std::uint64_t>(
        std::llround(static_cast<double>(k) * spacing * link.tick_hz));
    step.dac_index = dac;
    step.addr = addr;
    step.code = voltage_to_code(v, range, conv);
    prog.steps.push_back(step);
  }
  return prog;
}

enum class IssueKind { SpacingViolation, SlewExcess, FilterAttenuated };

struct ValidationIssue {
  IssueKind kind;
  std::size_t step_index;
};

struct ValidationReport {
  std::vector<ValidationIssue> issues;

  bool clean() const { return issues.empty(); }
  bool has(IssueKind k) const {
    for (const auto& i : issues)
      if (i.kind == k) return true;
    return false;
  }
};

// Warning-level schedule checks: per-device spacing against the link, and
// per-channel voltage rates against the slew limit and filter bandwidth.
inline ValidationReport validate(const WaveformProgram& prog,
                                 const AnalogParams& analog, const LinkParams& link,
                                 const OutputRange& range = OutputRange::from_code(RangeCode::B10),
                                 MappingConvention conv = MappingConvention::EndpointInclusive,
                                 const RegisterMap& map = RegisterMap::dac81416()) {
  ValidationReport report;
  std::uint64_t frame_ticks = link.frame_ticks();
  double tick_s = link.tick_s();
  double tau = analog.tau_s();

  std::uint64_t last_offset[2] = {0, 0};
  bool seen_device[2] = {false, false};
  // Last (offset, code) per global channel.
  std::uint64_t last_t[32];
  std::uint16_t last_code[32];
  bool seen_ch[32] = {};

  for (std::size_t i = 0; i < prog.steps.size(); ++i) {
    const auto& s = prog.steps[i];
    if (i > 0 && s.offset_ticks < prog.steps[i - 1].offset_ticks) {
      report.issues.push_back({IssueKind::SpacingViolation, i});
      continue;
    }
    int d = s.dac_index;
    if (seen_device[d] && s.offset_ticks - last_offset[d] < frame_ticks)
      report.issues.push_back({IssueKind::SpacingViolation, i});
    last_offset[d] = s.offset_ticks;
    seen_device[d] = true;

    auto ch = map.data_channel(s.addr);
    if (!ch) continue;
    int g = d * kChannelCount + *ch;
    if (seen_ch[g] && s.offset_ticks > last_t[g]) {
      double dt = static_cast<double>(s.offset_ticks - last_t[g]) * tick_s;
      double dv = std::abs(code_to_voltage(s.code, range, conv) -
                           code_to_voltage(last_code[g], range, conv));
      if (dv / dt > analog.slew_v_per_s())
        report.issues.push_back({IssueKind::SlewExcess, i});
      if (dt < tau)
        report.issues.push_back({IssueKind::FilterAttenuated, i});
    }
    last_t[g] = s.offset_ticks;
    last_code[g] = s.code;
    seen_ch[g] = true;
  }
  return report;
}

enum class UpdateMode { IndividualFrames, Streaming };

// Per-channel sustainable update rate for one device.
inline double max_update_rate(const LinkParams& link, UpdateMode mode,
                              int k_channels = kChannelCount) {
  if (mode == UpdateMode::IndividualFrames)
    return 1.0 / transaction_time(kFrameBits, link.sclk_hz, link.gap_s);
  StreamBurst burst{0, std::vector<std::uint16_t>(static_cast<std::size_t>(k_channels), 0)};
  double cycle = transaction_time(burst.cs_asserted_bits(), link.sclk_hz, link.gap_s);
  return static_cast<double>(k_channels) / cycle;
}

inline constexpr const char* kProgramHeader = "vanguard-wave v1";

inline std::string write_program_file(const WaveformProgram& prog) {
  std::string out = kProgramHeader;
  out += "\n";
  out += prog.mode == PlaybackMode::StagedSync ? "mode staged\n" : "mode async\n";
  char line[48];
  for (const auto& s : prog.steps) {
    std::snprintf(line, sizeof(line), "%llu %u %02X %04X\n",
                  static_cast<unsigned long long>(s.offset_ticks), s.dac_index,
                  s.addr, s.code);
    out += line;
  }
  return out;
}

inline WaveformProgram parse_program_file(const std::string& text) {
  WaveformProgram prog;
  std::size_t pos = 0;
  bool header_seen = false;
  bool mode_seen = false;
  while (pos < text.size()) {
    std::size_t eol = text.find('\n', pos);
    if (eol == std::string::npos) eol = text.size();
    std::string line = text.substr(pos, eol - pos);
    pos = eol + 1;
    if (line.empty()) continue;
    if (!header_seen) {
      if (line != kProgramHeader)
        throw Error(Err::InvalidProgram, "missing program header");
      header_seen = true;
      continue;
    }
    if (!mode_seen && line.rfind("mode ", 0) == 0) {
      std::string m = line.substr(5);
      if (m == "staged") {
        prog.mode = PlaybackMode::StagedSync;
      } else if (m == "async") {
        prog.mode = PlaybackMode::PerStepAsync;
      } else {
        throw Error(Err::InvalidProgram, "unknown playback mode");
      }
      mode_seen = true;
      continue;
    }
    unsigned long long tick = 0;
    unsigned dac = 0, addr = 0, code = 0;
    if (std::sscanf(line.c_str(), "%llu %u %2X %4X", &tick, &dac, &addr, &code) != 4 ||
        dac > 1 || addr > 0x3F || code > 0xFFFF)
      throw Error(Err::InvalidProgram, "bad program line: " + line);
    prog.steps.push_back({tick, static_cast<std::uint8_t>(dac),
                          static_cast<std::uint8_t>(addr),
                          static_cast<std::uint16_t>(code)});
  }
  if (!header_seen)
    throw Error(Err::InvalidProgram, "empty program file");
  return prog;
}

// Wire staging form used by the waveform-upload opcode: four 16-bit words
// per step (offset hi, offset lo, device/address, code).
inline std::vector<std::uint16_t> program_to_words(const WaveformProgram& prog) {
  std::vector<std::uint16_t> words;
  words.reserve(prog.steps.size() * 4);
  for (const auto& s : prog.steps) {
    if (s.offset_ticks > 0xFFFFFFFFULL)
      throw Error(Err::InvalidProgram, "step offset exceeds 32 bits of ticks");
    words.push_back(static_cast<std::uint16_t>(s.offset_ticks >> 16));
    words.push_back(static_cast<std::uint16_t>(s.offset_ticks & 0xFFFF));
    words.push_back(static_cast<std::uint16_t>((s.dac_index << 8) | s.addr));
    words.push_back(s.code);
  }
  return words;
}

inline WaveformProgram program_from_words(const std::vector<std::uint16_t>& words,
                                          PlaybackMode mode) {
  if (words.size() % 4 != 0)
    throw Error(Err::InvalidProgram, "staged words not a whole number of steps");
  WaveformProgram prog;
  prog.mode = mode;
  for (std::size_t i = 0; i < words.size(); i += 4) {
    WaveformStep s;
    s.offset_ticks = (static_cast<std::uint64_t>(words[i]) << 16) | words[i + 1];
    s.dac_index = static_cast<std::uint8_t>((words[i + 2] >> 8) & 1);
    s.addr = static_cast<std::uint8_t>(words[i + 2] & 0x3F);
    s.code = words[i + 3];
    prog.steps.push_back(s);
  }
  return prog;
}

}  // namespace vanguard
