#pragma once

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <limits>
#include <memory>
#include <string>
#include <thread>
#include <vector>

#include <json.hpp>

#include "vanguard/config.hpp"
#include "vanguard/psd.hpp"
#include "vanguard/serial.hpp"
#include "vanguard/som_simulator.hpp"

namespace vanguard {

// A campaign target: either the behavioral twin or a live serial link.
// A backend that cannot measure still drives the stimulus; campaigns then
// emit a fill-in template instead of claiming numbers.
class Backend {
 public:
  virtual ~Backend() = default;
  virtual const char* name() const = 0;
  virtual bool measures() const = 0;
  virtual void send(const Command& cmd) = 0;
  virtual std::uint16_t read_reg(int dac, std::uint8_t addr) = 0;
  virtual void trigger_edge() = 0;
  virtual void settle(double seconds) = 0;
  virtual double sample(int global_channel, double dt_s) = 0;
  virtual std::vector<double> sample_series(int global_channel, double dt_s,
                                            std::size_t count) = 0;
};

class SimBackend : public Backend {
 public:
  explicit SimBackend(const CampaignConfig& cfg) : sim_(cfg.sim) {}

  SomSimulator& sim() { return sim_; }

  const char* name() const override { return "sim"; }
  bool measures() const override { return true; }

  void send(const Command& cmd) override {
    auto p = encode_packet(cmd);
    sim_.ingest_uart(sim_.now_ticks(), p);
    // Past the SPI frame, so the command is committed on return.
    sim_.run_until(sim_.now_ticks() + 64);
  }

  std::uint16_t read_reg(int dac, std::uint8_t addr) override {
    sim_.take_responses();
    Command cmd;
    cmd.opcode = Opcode::ReadReg;
    cmd.dac_index = static_cast<std::uint8_t>(dac);
    cmd.addr = addr;
    send(cmd);
    auto resp = sim_.take_responses();
    if (resp.empty())
      throw Error(Err::BackendUnavailable, "simulator returned no response");
    if (resp.back().error)
      throw Error(Err::InvalidField, "register read reported an error");
    return resp.back().data;
  }

  void trigger_edge() override {
    sim_.pulse_trigger(sim_.now_ticks());
    sim_.run_until(sim_.now_ticks());
  }

  void settle(double seconds) override {
    auto ticks = static_cast<std::uint64_t>(
        std::ceil(seconds * sim_.config().gateware_hz));
    sim_.run_until(sim_.now_ticks() + ticks);
  }

  double sample(int global_channel, double dt_s) override {
    if (dt_s <= 0.0) return sim_.probe_voltage(global_channel);
    return sim_.sample_channel(global_channel, dt_s);
  }

  std::vector<double> sample_series(int global_channel, double dt_s,
                                    std::size_t count) override {
    return sim_.sample_series(global_channel, dt_s, count);
  }

 private:
  SomSimulator sim_;
};

class SerialBackend : public Backend {
 public:
  explicit SerialBackend(std::unique_ptr<ByteChannel> channel,
                         bool realtime = true)
      : channel_(std::move(channel)), realtime_(realtime) {}

  explicit SerialBackend(const SerialConfig& cfg)
      : SerialBackend(std::make_unique<PosixSerialPort>(cfg)) {}

  const char* name() const override { return "serial"; }
  bool measures() const override { return false; }

  void send(const Command& cmd) override {
    auto p = encode_packet(cmd);
    channel_->write(p);
  }

  std::uint16_t read_reg(int dac, std::uint8_t addr) override {
    Command cmd;
    cmd.opcode = Opcode::ReadReg;
    cmd.dac_index = static_cast<std::uint8_t>(dac);
    cmd.addr = addr;
    send(cmd);
    for (int attempt = 0; attempt < 16; ++attempt) {
      auto bytes = channel_->read(64, 250);
      auto responses = rx_.feed(bytes);
      for (const auto& r : responses) {
        if (r.addr != addr) continue;
        if (r.error) throw Error(Err::InvalidField, "register read reported an error");
        return r.data;
      }
    }
    throw Error(Err::Timeout, "no response to register read");
  }

  void trigger_edge() override {
    // No hardware pin over the wire; the soft path reaches both devices.
    for (std::uint8_t dac = 0; dac < 2; ++dac) {
      Command cmd;
      cmd.opcode = Opcode::Trigger;
      cmd.dac_index = dac;
      send(cmd);
    }
  }

  void settle(double seconds) override {
    if (realtime_ && seconds > 0.0)
      std::this_thread::sleep_for(std::chrono::duration<double>(seconds));
  }

  double sample(int, double) override {
    return std::numeric_limits<double>::quiet_NaN();
  }

  std::vector<double> sample_series(int, double, std::size_t) override {
    return {};
  }

 private:
  std::unique_ptr<ByteChannel> channel_;
  ResponseParser rx_;
  bool realtime_;
};

inline void write_reg(Backend& b, int dac, std::uint8_t addr,
                      std::uint16_t data) {
  Command cmd;
  cmd.opcode = Opcode::WriteReg;
  cmd.dac_index = static_cast<std::uint8_t>(dac);
  cmd.addr = addr;
  cmd.data = data;
  b.send(cmd);
}

// Powers every channel on both devices and selects the 10 V bipolar span.
inline void configure_baseline(Backend& b, const RegisterMap& map) {
  auto nibble = RangeNibbleTable::dac81416().nibble(RangeCode::B10);
  for (int dac = 0; dac < 2; ++dac) {
    write_reg(b, dac, map.addr(Reg::DacPwdwn), 0x0000);
    for (int bank = 0; bank < kBankCount; ++bank)
      write_reg(b, dac, map.addr(range_reg(bank)), nibble);
  }
}

inline void upload_program(Backend& b, const WaveformProgram& prog) {
  Command cmd;
  cmd.opcode = Opcode::LoadWaveformWord;
  cmd.addr = kWaveBegin;
  cmd.data = prog.mode == PlaybackMode::StagedSync ? 1 : 0;
  b.send(cmd);
  cmd.addr = kWaveAppend;
  for (auto w : program_to_words(prog)) {
    cmd.data = w;
    b.send(cmd);
  }
  cmd.addr = kWaveEnd;
  cmd.data = 0;
  b.send(cmd);
}

namespace detail {

inline std::string fmt_g(double v) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.12g", v);
  return buf;
}

inline std::string csv_header(const char* campaign, std::uint64_t seed,
                              const std::string& extras = "") {
  char buf[96];
  std::snprintf(buf, sizeof(buf), "# vanguard-csv v1 campaign=%s seed=%llu",
                campaign, static_cast<unsigned long long>(seed));
  std::string out = buf;
  if (!extras.empty()) {
    out += " ";
    out += extras;
  }
  out += "\n";
  return out;
}

inline nlohmann::json json_header(const char* campaign, std::uint64_t seed) {
  nlohmann::json j;
  j["schema"] = "vanguard-json v1";
  j["campaign"] = campaign;
  j["seed"] = seed;
  return j;
}

}  // namespace detail

// Per-code set/settle/sample over a plan of one channel per bank of four on
// each device. The observation window models the long min/max watch with a
// bounded uniform jitter band.
inline std::string run_sweep(Backend& b, const CampaignConfig& cfg) {
  configure_baseline(b, cfg.sim.map);
  detail::Xoshiro256pp rng(detail::hash_mix(cfg.sim.seed, 0x53574545ull));
  auto range = OutputRange::from_code(RangeCode::B10);

  std::string out = detail::csv_header(
      "sweep", cfg.sim.seed,
      "window=" + std::to_string(cfg.sweep_window) +
          " band_v=" + detail::fmt_g(cfg.sweep_band_v));
  out += "channel,code,v_target,v_measured,v_min,v_max,dv\n";

  for (int ch : cfg.sweep_channels) {
    int dac = ch / kChannelCount;
    std::uint8_t addr = cfg.sim.map.addr(dac_reg(ch % kChannelCount));
    for (auto code : cfg.sweep_codes) {
      write_reg(b, dac, addr, code);
      b.settle(cfg.settle_s);
      double v_target = code_to_voltage(code, range, cfg.sim.convention);
      double v_measured = std::numeric_limits<double>::quiet_NaN();
      double v_min = v_measured, v_max = v_measured;
      if (b.measures()) {
        double base = b.sample(ch, 0.0);
        if (cfg.sweep_band_v > 0.0 && cfg.sweep_window > 1) {
          v_min = v_max = base;
          double sum = 0.0;
          for (std::size_t k = 0; k < cfg.sweep_window; ++k) {
            double s = base + cfg.sweep_band_v * (2.0 * rng.uniform01() - 1.0);
            v_min = std::min(v_min, s);
            v_max = std::max(v_max, s);
            sum += s;
          }
          v_measured = sum / static_cast<double>(cfg.sweep_window);
        } else {
          v_measured = v_min = v_max = base;
        }
      }
      char row[192];
      std::snprintf(row, sizeof(row), "%d,%u,%s,%s,%s,%s,%s\n", ch, code,
                    detail::fmt_g(v_target).c_str(),
                    detail::fmt_g(v_measured).c_str(),
                    detail::fmt_g(v_min).c_str(), detail::fmt_g(v_max).c_str(),
                    detail::fmt_g(v_measured - v_target).c_str());
      out += row;
    }
  }
  return out;
}

// Walks every code in [code_lo, code_hi] and reports successive increments;
// a matched channel on the other device yields the inter-device offset.
inline std::string run_staircase(Backend& b, const CampaignConfig& cfg) {
  if (cfg.stair_hi <= cfg.stair_lo)
    throw Error(Err::OutOfRange, "staircase needs code_hi > code_lo");
  configure_baseline(b, cfg.sim.map);
  auto range = OutputRange::from_code(RangeCode::B10);

  int ch = cfg.stair_channel;
  int pair_ch = (ch + kChannelCount) % (2 * kChannelCount);
  std::uint8_t addr = cfg.sim.map.addr(dac_reg(ch % kChannelCount));

  std::vector<double> v_main, v_pair;
  for (std::uint32_t code = cfg.stair_lo; code <= cfg.stair_hi; ++code) {
    write_reg(b, ch / kChannelCount, addr, static_cast<std::uint16_t>(code));
    if (cfg.stair_pair)
      write_reg(b, pair_ch / kChannelCount, addr, static_cast<std::uint16_t>(code));
    b.settle(cfg.settle_s);
    if (b.measures()) {
      v_main.push_back(b.sample(ch, 0.0));
      if (cfg.stair_pair) v_pair.push_back(b.sample(pair_ch, 0.0));
    }
  }

  auto j = detail::json_header("staircase", cfg.sim.seed);
  j["channel"] = ch;
  j["pair_channel"] = cfg.stair_pair ? nlohmann::json(pair_ch) : nlohmann::json();
  j["code_lo"] = cfg.stair_lo;
  j["code_hi"] = cfg.stair_hi;
  j["lsb_ideal_v"] = lsb_size(range, cfg.sim.convention);
  j["hil_reference_increment_v"] = 308e-6;
  j["hil_reference_offset_v"] = 1.07e-3;

  if (v_main.size() >= 2) {
    std::vector<double> inc(v_main.size() - 1);
    double sum = 0.0;
    for (std::size_t k = 0; k + 1 < v_main.size(); ++k) {
      inc[k] = v_main[k + 1] - v_main[k];
      sum += inc[k];
    }
    double mean = sum / static_cast<double>(inc.size());
    double var = 0.0;
    for (double x : inc) var += (x - mean) * (x - mean);
    j["increments_v"] = inc;
    j["mean_increment_v"] = mean;
    j["sigma_increment_v"] = std::sqrt(var / static_cast<double>(inc.size()));
  } else {
    j["increments_v"] = nlohmann::json::array();
    j["mean_increment_v"] = nlohmann::json();
    j["sigma_increment_v"] = nlohmann::json();
  }

  if (cfg.stair_pair && !v_pair.empty()) {
    double sum = 0.0;
    for (std::size_t k = 0; k < v_pair.size(); ++k) sum += v_pair[k] - v_main[k];
    j["inter_device_offset_v"] = sum / static_cast<double>(v_pair.size());
  } else {
    j["inter_device_offset_v"] = nlohmann::json();
  }
  return j.dump(2) + "\n";
}

// Stationary noise spectrum of a settled channel via the Welch estimate.
inline std::string run_psd(Backend& b, const CampaignConfig& cfg) {
  configure_baseline(b, cfg.sim.map);
  int ch = cfg.psd_channel;
  write_reg(b, ch / kChannelCount,
            cfg.sim.map.addr(dac_reg(ch % kChannelCount)), cfg.psd_code);
  b.settle(cfg.settle_s);

  double dt = 1.0 / cfg.psd_fs_hz;
  auto n = static_cast<std::size_t>(cfg.psd_fs_hz * cfg.psd_duration_s);
  std::string extras = "fs_hz=" + detail::fmt_g(cfg.psd_fs_hz) +
                       " rbw_hz=" + detail::fmt_g(cfg.psd_rbw_hz) +
                       " channel=" + std::to_string(ch);
  if (!b.measures()) {
    return detail::csv_header("psd", cfg.sim.seed, extras + " hil=fill-in") +
           "f_hz,psd_v2hz\n";
  }
  Waveform w;
  w.t0 = 0.0;
  w.dt = dt;
  w.samples = b.sample_series(ch, dt, n);
  auto s = estimate_psd(w, cfg.psd_rbw_hz);
  auto body = spectrum_to_csv(s);
  return detail::csv_header(
             "psd", cfg.sim.seed,
             extras + " realized_rbw_hz=" + detail::fmt_g(s.rbw)) +
         body;
}

// Full-span step response with a quiet adjacent-channel monitor.
inline std::string run_transient(Backend& b, const CampaignConfig& cfg) {
  configure_baseline(b, cfg.sim.map);
  int ch = cfg.tr_channel;
  int monitor = cfg.tr_monitor >= 0 ? cfg.tr_monitor
                                    : (ch == 2 * kChannelCount - 1 ? ch - 1 : ch + 1);
  const auto& params = cfg.sim.analog[ch / kChannelCount];
  const auto& mon_params = cfg.sim.analog[monitor / kChannelCount];
  auto range = OutputRange::from_code(RangeCode::B10);

  std::uint8_t addr = cfg.sim.map.addr(dac_reg(ch % kChannelCount));
  std::uint8_t mon_addr = cfg.sim.map.addr(dac_reg(monitor % kChannelCount));
  write_reg(b, monitor / kChannelCount, mon_addr, cfg.tr_monitor_code);
  write_reg(b, ch / kChannelCount, addr, cfg.tr_from);
  b.settle(cfg.settle_s);

  double tau = params.tau_s();
  double dt = cfg.tr_dt_s > 0.0 ? cfg.tr_dt_s : tau / 100.0;
  double v_from = quantized_target(cfg.tr_from, range, cfg.sim.convention, params);
  double v_to = quantized_target(cfg.tr_to, range, cfg.sim.convention, params);
  double duration = cfg.tr_duration_s > 0.0
                        ? cfg.tr_duration_s
                        : std::max(10.0 * tau,
                                   std::abs(v_to - v_from) / params.slew_v_per_s() +
                                       12.0 * tau);

  std::string extras = "channel=" + std::to_string(ch) +
                       " code_from=" + std::to_string(cfg.tr_from) +
                       " code_to=" + std::to_string(cfg.tr_to);
  if (!b.measures()) {
    write_reg(b, ch / kChannelCount, addr, cfg.tr_to);
    return detail::csv_header("transient", cfg.sim.seed, extras + " hil=fill-in") +
           "# slew_v_per_us=nan hil_reference_v_per_us=1.76 monitor_channel=" +
           std::to_string(monitor) + " monitor_max_dev_v=nan\n" + "t_s,volts\n";
  }

  // The waveform itself comes from the channel model at full resolution;
  // the tick-gridded twin drives the register transition and the monitor.
  auto w = simulate_transition(params, v_from, v_to, duration, dt);
  for (auto& v : w.samples) v += params.offset.volts;
  double slew = measure_slew(w);

  double mon_target = quantized_target(cfg.tr_monitor_code, range,
                                       cfg.sim.convention, mon_params) +
                      mon_params.offset.volts;
  write_reg(b, ch / kChannelCount, addr, cfg.tr_to);
  double max_dev = 0.0;
  const int kMonitorSamples = 32;
  for (int k = 0; k < kMonitorSamples; ++k) {
    b.settle(duration / kMonitorSamples);
    max_dev = std::max(max_dev, std::abs(b.sample(monitor, 0.0) - mon_target));
  }

  std::string out = detail::csv_header("transient", cfg.sim.seed, extras);
  out += "# slew_v_per_us=" + detail::fmt_g(slew) +
         " hil_reference_v_per_us=1.76 monitor_channel=" +
         std::to_string(monitor) +
         " monitor_max_dev_v=" + detail::fmt_g(max_dev) + "\n";
  out += waveform_to_csv(w);
  return out;
}

// Johnson densities and integrated RMS per resistance; no backend needed.
inline std::string run_noise_budget(const CampaignConfig& cfg) {
  auto j = detail::json_header("noise-budget", cfg.sim.seed);
  j["temperature_k"] = cfg.nb_temperature_k;
  j["bandwidth_hz"] = cfg.nb_bandwidth_hz;
  auto rows = nlohmann::json::array();
  for (double r : cfg.nb_r_ohms) {
    double d = johnson_noise_density(r, cfg.nb_temperature_k);
    nlohmann::json row;
    row["r_ohms"] = r;
    row["density_v_rthz"] = d;
    row["rms_v"] = d * std::sqrt(cfg.nb_bandwidth_hz);
    rows.push_back(row);
  }
  j["rows"] = rows;
  return j.dump(2) + "\n";
}

// Update-rate table per link configuration, with the RC filter comparison
// deciding which side bottlenecks the chain.
inline std::string run_throughput(const CampaignConfig& cfg) {
  double fc = cfg.sim.analog[0].rc_cutoff_hz;
  auto j = detail::json_header("throughput", cfg.sim.seed);
  j["filter_cutoff_hz"] = fc;
  auto rows = nlohmann::json::array();
  for (double sclk : cfg.tp_sclk_hz) {
    LinkParams link = cfg.sim.link;
    link.sclk_hz = sclk;
    for (auto mode : {UpdateMode::IndividualFrames, UpdateMode::Streaming}) {
      double rate = max_update_rate(link, mode, cfg.tp_stream_k);
      nlohmann::json row;
      row["sclk_hz"] = sclk;
      row["mode"] = mode == UpdateMode::IndividualFrames ? "individual" : "streaming";
      if (mode == UpdateMode::Streaming) row["stream_k"] = cfg.tp_stream_k;
      row["rate_hz"] = rate;
      row["updates_per_s"] = static_cast<std::uint64_t>(rate);
      row["bottleneck"] = rate > fc ? "filter" : "link";
      rows.push_back(row);
    }
  }
  j["rows"] = rows;
  return j.dump(2) + "\n";
}

}  // namespace vanguard
