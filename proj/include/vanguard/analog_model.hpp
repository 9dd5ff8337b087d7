#pragma once

#include <cmath>
#include <cstdint>
#include <limits>
#include <string>
#include <vector>

#include "vanguard/detail/rng.hpp"
#include "vanguard/errors.hpp"
#include "vanguard/voltage_codec.hpp"

namespace vanguard {

inline constexpr double kPi = 3.14159265358979323846;
inline constexpr double kBoltzmann = 1.380649e-23;

struct AnalogParams {
  double slew_rate_v_per_us = 4.0;
  double settle_time_us = 12.0;
  double rc_cutoff_hz = 48220.0;
  // Probe-referred white density, V/sqrt(Hz). The upstream figure for the
  // low-frequency band has an ambiguous unit, so this stays configurable
  // rather than defaulted to it.
  double noise_density = 0.0;
  bool dnl_halflsb = false;
  std::uint64_t dnl_seed = 0;
  DeviceOffset offset{};
  double ref_drift_ppm_per_c = 5.0;
  double temp_delta_c = 0.0;

  double tau_s() const { return 1.0 / (2.0 * kPi * rc_cutoff_hz); }
  double slew_v_per_s() const { return slew_rate_v_per_us * 1e6; }
};

// Slew-limiter state feeding a single-pole RC. target excludes the device
// offset; the offset and any noise are added at the probe.
struct AnalogChannelState {
  double target = 0.0;
  double pre_filter = 0.0;
  double out = 0.0;

  static AnalogChannelState steady(double v) { return {v, v, v}; }
};

// Code to commanded voltage, with optional per-code DNL displacement. The
// displacement table is a deterministic hash of (seed, code), uniform in
// [-LSB/4, LSB/4), so any code-to-code step stays within half an LSB of
// ideal.
inline double quantized_target(VoltageCode code, const OutputRange& range,
                               MappingConvention conv,
                               const AnalogParams& params) {
  double v = code_to_voltage(code, range, conv);
  if (params.dnl_halflsb) {
    std::uint64_t h = detail::hash_mix(params.dnl_seed, code);
    double u = static_cast<double>(h >> 11) * 0x1.0p-53;
    v += (u - 0.5) * 0.5 * lsb_size(range, conv);
  }
  if (params.temp_delta_c != 0.0) {
    v *= 1.0 + params.ref_drift_ppm_per_c * params.temp_delta_c * 1e-6;
  }
  return v;
}

// One integrator step of dt seconds. The drive ramps toward target at the
// slew limit; the filter sees that drive's time average over the step, which
// keeps the discrete update second-order accurate on ramps and exact for
// held inputs.
inline AnalogChannelState step_channel(const AnalogChannelState& ch,
                                       const AnalogParams& params, double dt) {
  double tau = params.tau_s();
  if (dt > tau / 10.0)
    throw Error(Err::StepTooLarge, "dt must be <= tau/10");
  AnalogChannelState next = ch;

  double rate = params.slew_v_per_s();
  double delta = ch.target - ch.pre_filter;
  double drive_avg;
  if (!std::isfinite(rate) || std::abs(delta) <= rate * dt) {
    double t_reach = std::isfinite(rate) && rate > 0.0 && delta != 0.0
                         ? std::abs(delta) / rate
                         : 0.0;
    next.pre_filter = ch.target;
    drive_avg = ch.pre_filter + delta * (dt - 0.5 * t_reach) / dt;
  } else {
    double moved = (delta > 0.0 ? rate : -rate) * dt;
    next.pre_filter = ch.pre_filter + moved;
    drive_avg = ch.pre_filter + 0.5 * moved;
  }

  double a = 1.0 - std::exp(-dt / tau);
  next.out = ch.out + a * (drive_avg - ch.out);
  return next;
}

// Exact evolution over an arbitrary interval: ramp phase (linear drive into
// the RC) then exponential settling. Underflow of the settling exponential
// makes long quiescent intervals land on target exactly.
inline AnalogChannelState advance_channel(const AnalogChannelState& ch,
                                          const AnalogParams& params,
                                          double delta_t) {
  if (delta_t <= 0.0) return ch;
  double tau = params.tau_s();
  double rate = params.slew_v_per_s();
  AnalogChannelState next = ch;

  double remaining = delta_t;
  double delta = ch.target - ch.pre_filter;
  if (delta != 0.0 && std::isfinite(rate)) {
    double t_ramp = std::abs(delta) / rate;
    double r = delta > 0.0 ? rate : -rate;
    if (remaining < t_ramp) {
      double t = remaining;
      next.pre_filter = ch.pre_filter + r * t;
      next.out = (ch.out - ch.pre_filter + r * tau) * std::exp(-t / tau) +
                 ch.pre_filter + r * (t - tau);
      return next;
    }
    next.pre_filter = ch.target;
    next.out = (ch.out - ch.pre_filter + r * tau) * std::exp(-t_ramp / tau) +
               ch.pre_filter + r * (t_ramp - tau);
    remaining -= t_ramp;
  } else {
    next.pre_filter = ch.target;
  }
  next.out = next.target + (next.out - next.target) * std::exp(-remaining / tau);
  return next;
}

// Analytic composed response for a steady-state start, used as the oracle
// the time-stepped integrator is judged against.
inline double closed_form_transition(const AnalogParams& params, double v_from,
                                     double v_to, double t) {
  AnalogChannelState ch = AnalogChannelState::steady(v_from);
  ch.target = v_to;
  return advance_channel(ch, params, t).out;
}

// Probe sample: filtered output plus device offset plus white noise. The
// sample variance matches a density-d white process observed at rate 1/dt
// (two-sided bandwidth 1/(2 dt)).
inline double probe_sample(const AnalogChannelState& ch,
                           const AnalogParams& params, double dt,
                           detail::Xoshiro256pp* rng) {
  double v = ch.out + params.offset.volts;
  if (rng != nullptr && params.noise_density > 0.0) {
    double sigma = params.noise_density * std::sqrt(1.0 / (2.0 * dt));
    v += sigma * rng->gaussian();
  }
  return v;
}

struct Waveform {
  double t0 = 0.0;
  double dt = 0.0;
  std::vector<double> samples;

  double time_at(std::size_t i) const { return t0 + static_cast<double>(i) * dt; }
};

inline Waveform simulate_transition(const AnalogParams& params, double v_from,
                                    double v_to, double duration, double dt,
                                    detail::Xoshiro256pp* rng = nullptr) {
  double tau = params.tau_s();
  if (duration < 10.0 * tau)
    throw Error(Err::TooShort, "duration must span at least 10 tau");
  AnalogChannelState ch = AnalogChannelState::steady(v_from);
  ch.target = v_to;
  Waveform w;
  w.dt = dt;
  auto n = static_cast<std::size_t>(std::floor(duration / dt)) + 1;
  w.samples.reserve(n);
  w.samples.push_back(probe_sample(ch, params, dt, rng));
  for (std::size_t i = 1; i < n; ++i) {
    ch = step_channel(ch, params, dt);
    w.samples.push_back(probe_sample(ch, params, dt, rng));
  }
  return w;
}

// 10-90 (by default) slew in V/us, crossing times linearly interpolated.
inline double measure_slew(const Waveform& w, double lo_frac = 0.10,
                           double hi_frac = 0.90) {
  if (w.samples.size() < 2)
    throw Error(Err::TooShort, "waveform needs at least two samples");
  double start = w.samples.front();
  double end = w.samples.back();
  double lo_level = start + lo_frac * (end - start);
  double hi_level = start + hi_frac * (end - start);
  bool rising = end > start;

  auto crossing = [&](double level) -> double {
    for (std::size_t i = 1; i < w.samples.size(); ++i) {
      bool crossed = rising ? (w.samples[i] >= level && w.samples[i - 1] < level)
                            : (w.samples[i] <= level && w.samples[i - 1] > level);
      if (crossed) {
        double frac = (level - w.samples[i - 1]) / (w.samples[i] - w.samples[i - 1]);
        return w.time_at(i - 1) + frac * w.dt;
      }
    }
    throw Error(Err::LevelsNotCrossed, "waveform never crosses slew level");
  };

  double t_lo = crossing(lo_level);
  double t_hi = crossing(hi_level);
  return std::abs(hi_level - lo_level) / (std::abs(t_hi - t_lo) * 1e6);
}

inline double johnson_noise_density(double r_ohm, double t_kelvin) {
  if (r_ohm < 0.0 || t_kelvin < 0.0)
    throw Error(Err::OutOfRange, "resistance and temperature must be nonnegative");
  return std::sqrt(4.0 * kBoltzmann * t_kelvin * r_ohm);
}

struct FilterResponse {
  double magnitude_db = 0.0;
  double phase_deg = 0.0;
};

inline FilterResponse filter_response(const AnalogParams& params, double f_hz) {
  if (f_hz <= 0.0) throw Error(Err::OutOfRange, "frequency must be positive");
  double x = f_hz / params.rc_cutoff_hz;
  FilterResponse r;
  r.magnitude_db = -10.0 * std::log10(1.0 + x * x);
  r.phase_deg = -std::atan(x) * 180.0 / kPi;
  return r;
}

}  // namespace vanguard
