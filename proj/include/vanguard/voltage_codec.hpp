#pragma once

#include <cstdint>

#include "vanguard/errors.hpp"
#include "vanguard/ratio.hpp"

namespace vanguard {

/// Output spans supported by the converter, selected per bank of four
/// channels. Unipolar spans start at 0 V; bipolar spans are symmetric.
enum class RangeCode : std::uint8_t { U5, U10, U20, U40, B2V5, B5, B10, B20 };

inline const char* range_name(RangeCode rc) {
  switch (rc) {
    case RangeCode::U5: return "U5";
    case RangeCode::U10: return "U10";
    case RangeCode::U20: return "U20";
    case RangeCode::U40: return "U40";
    case RangeCode::B2V5: return "B2V5";
    case RangeCode::B5: return "B5";
    case RangeCode::B10: return "B10";
    case RangeCode::B20: return "B20";
  }
  return "?";
}

/// Configured output span of one bank. `low`/`high` are exact rationals so
/// downstream arithmetic stays exact. The prototype default is B10.
struct OutputRange {
  Ratio low;
  Ratio high;
  RangeCode code = RangeCode::B10;

  static OutputRange from_code(RangeCode rc) {
    switch (rc) {
      case RangeCode::U5: return {Ratio(0), Ratio(5), rc};
      case RangeCode::U10: return {Ratio(0), Ratio(10), rc};
      case RangeCode::U20: return {Ratio(0), Ratio(20), rc};
      case RangeCode::U40: return {Ratio(0), Ratio(40), rc};
      case RangeCode::B2V5: return {Ratio(-5, 2), Ratio(5, 2), rc};
      case RangeCode::B5: return {Ratio(-5), Ratio(5), rc};
      case RangeCode::B10: return {Ratio(-10), Ratio(10), rc};
      case RangeCode::B20: return {Ratio(-20), Ratio(20), rc};
    }
    throw Error(Err::InvalidRangeCode, "unknown range code");
  }

  Ratio span() const { return high - low; }
};

/// How a 16-bit code divides the configured span.
///
/// EndpointInclusive divides by 2^16-1 so code 0xFFFF reaches `high`
/// exactly; SpanOverTwoSixteen divides by 2^16, leaving the top code one
/// LSB short of `high`. Both are provided because the device's quoted LSB
/// follows the latter while its ideal register-to-voltage figures follow
/// the former; EndpointInclusive is the default.
enum class MappingConvention : std::uint8_t { EndpointInclusive, SpanOverTwoSixteen };

/// Per-device constant added to every channel output.
struct DeviceOffset {
  double volts = 0.0;
};

using VoltageCode = std::uint16_t;

inline std::int64_t divisions(MappingConvention conv) {
  return conv == MappingConvention::EndpointInclusive ? 65535 : 65536;
}

/// Exact LSB: span/(2^16-1) or span/2^16 depending on convention.
inline Ratio lsb_size_exact(const OutputRange& range, MappingConvention conv) {
  return range.span() / Ratio(divisions(conv));
}

inline double lsb_size(const OutputRange& range, MappingConvention conv) {
  return lsb_size_exact(range, conv).to_double();
}

/// V(code) = low + code * span / divisions, evaluated exactly.
inline Ratio code_to_voltage_exact(VoltageCode code, const OutputRange& range,
                                   MappingConvention conv) {
  return range.low + Ratio(static_cast<std::int64_t>(code)) * lsb_size_exact(range, conv);
}

inline double code_to_voltage(VoltageCode code, const OutputRange& range,
                              MappingConvention conv) {
  return code_to_voltage_exact(code, range, conv).to_double();
}

/// Nearest code to an exact voltage. The code offset (v-low)/LSB is
/// non-negative, so rounding half away from zero reduces to rounding exact
/// half-LSB midpoints to the higher code.
inline VoltageCode voltage_to_code_exact(const Ratio& v, const OutputRange& range,
                                         MappingConvention conv) {
  if (v < range.low || v > range.high)
    throw Error(Err::OutOfRange, "voltage outside configured range");
  Ratio offset = (v - range.low) / lsb_size_exact(range, conv);
  std::int64_t code = (offset + Ratio(1, 2)).floor();
  if (code < 0) code = 0;
  if (code > 0xFFFF) code = 0xFFFF;  // v == high under SpanOverTwoSixteen
  return static_cast<VoltageCode>(code);
}

inline VoltageCode voltage_to_code(double v, const OutputRange& range,
                                   MappingConvention conv) {
  return voltage_to_code_exact(Ratio::from_double(v), range, conv);
}

inline double apply_device_offset(double v, const DeviceOffset& dev) {
  return v + dev.volts;
}

}  // namespace vanguard
