#pragma once

#include <cmath>
#include <complex>
#include <cstdio>
#include <string>
#include <vector>

#include "vanguard/analog_model.hpp"
#include "vanguard/detail/fft.hpp"
#include "vanguard/errors.hpp"

namespace vanguard {

// One-sided power spectral density, V^2/Hz, bins at k * rbw.
struct Spectrum {
  double rbw = 0.0;
  std::vector<double> freq;
  std::vector<double> psd;
};

// Welch estimate: Hann window, 50% overlap, per-segment mean removal.
// Segment length is the largest power of two not exceeding 1/(rbw*dt), so
// the realized resolution bandwidth is at least the requested one.
inline Spectrum estimate_psd(const Waveform& w, double rbw) {
  if (w.dt <= 0.0) throw Error(Err::InvalidField, "waveform dt must be positive");
  if (rbw <= 0.0) throw Error(Err::OutOfRange, "rbw must be positive");
  double fs = 1.0 / w.dt;

  std::size_t target = static_cast<std::size_t>(std::floor(1.0 / (rbw * w.dt)));
  std::size_t n = 1;
  while (n * 2 <= target) n *= 2;
  if (target < 2 || w.samples.size() < 2 * n)
    throw Error(Err::TooShort, "waveform shorter than two analysis segments");

  std::vector<double> window(n);
  double u = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    window[i] = 0.5 * (1.0 - std::cos(2.0 * kPi * static_cast<double>(i) /
                                      static_cast<double>(n)));
    u += window[i] * window[i];
  }

  Spectrum s;
  s.rbw = fs / static_cast<double>(n);
  s.freq.resize(n / 2 + 1);
  s.psd.assign(n / 2 + 1, 0.0);
  for (std::size_t k = 0; k <= n / 2; ++k)
    s.freq[k] = static_cast<double>(k) * s.rbw;

  std::size_t hop = n / 2;
  std::size_t segments = 0;
  std::vector<std::complex<double>> x(n);
  for (std::size_t start = 0; start + n <= w.samples.size(); start += hop) {
    double mean = 0.0;
    for (std::size_t i = 0; i < n; ++i) mean += w.samples[start + i];
    mean /= static_cast<double>(n);
    for (std::size_t i = 0; i < n; ++i)
      x[i] = {(w.samples[start + i] - mean) * window[i], 0.0};
    detail::fft_pow2(x);
    for (std::size_t k = 0; k <= n / 2; ++k) {
      double p = std::norm(x[k]) / (fs * u);
      if (k != 0 && k != n / 2) p *= 2.0;
      s.psd[k] += p;
    }
    ++segments;
  }
  for (auto& p : s.psd) p /= static_cast<double>(segments);
  return s;
}

inline std::string spectrum_to_csv(const Spectrum& s) {
  std::string out = "f_hz,psd_v2hz\n";
  char line[64];
  for (std::size_t k = 0; k < s.freq.size(); ++k) {
    std::snprintf(line, sizeof(line), "%.12g,%.12g\n", s.freq[k], s.psd[k]);
    out += line;
  }
  return out;
}

inline std::string waveform_to_csv(const Waveform& w) {
  std::string out = "t_s,volts\n";
  char line[64];
  for (std::size_t i = 0; i < w.samples.size(); ++i) {
    std::snprintf(line, sizeof(line), "%.12g,%.12g\n", w.time_at(i), w.samples[i]);
    out += line;
  }
  return out;
}

}  // namespace vanguard
