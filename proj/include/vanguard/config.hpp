#pragma once

#include <cstdlib>
#include <fstream>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

#include "vanguard/errors.hpp"
#include "vanguard/som_simulator.hpp"

namespace vanguard {

// Everything a campaign run needs: the twin configuration plus per-campaign
// knobs, all reachable from one flat key=value file.
struct CampaignConfig {
  SimConfig sim;
  // Quiescence wait between a code write and a measurement. The default is
  // long enough that the filter state pins to its target exactly.
  double settle_s = 3e-3;

  std::vector<int> sweep_channels{0, 4, 8, 12, 16, 20, 24, 28};
  std::vector<std::uint16_t> sweep_codes{0x0000, 0x4000, 0x7FFF,
                                         0x8000, 0xC000, 0xFFFF};
  std::size_t sweep_window = 10000;
  double sweep_band_v = 30e-6;

  int stair_channel = 0;
  std::uint16_t stair_lo = 0x7C00;
  std::uint16_t stair_hi = 0x8000;
  bool stair_pair = true;

  int psd_channel = 0;
  std::uint16_t psd_code = 0x8000;
  double psd_fs_hz = 81920.0;
  double psd_rbw_hz = 10.0;
  double psd_duration_s = 4.0;

  int tr_channel = 0;
  std::uint16_t tr_from = 0x0000;
  std::uint16_t tr_to = 0xFFFF;
  double tr_dt_s = 0.0;    // 0 selects tau/100
  double tr_duration_s = 0.0;  // 0 selects an auto span past settling
  int tr_monitor = -1;     // -1 selects the adjacent channel
  std::uint16_t tr_monitor_code = 0x8CCC;  // close to +1 V in the 10 V span

  std::vector<double> nb_r_ohms{1.0, 50.0, 1000.0};
  double nb_temperature_k = 300.0;
  double nb_bandwidth_hz = 1000.0;

  std::vector<double> tp_sclk_hz{10e6, 50e6};
  int tp_stream_k = 16;
};

namespace detail {

inline std::string cfg_trim(const std::string& s) {
  std::size_t a = s.find_first_not_of(" \t\r");
  if (a == std::string::npos) return "";
  std::size_t b = s.find_last_not_of(" \t\r");
  return s.substr(a, b - a + 1);
}

inline double cfg_double(const std::string& key, const std::string& v) {
  char* end = nullptr;
  double x = std::strtod(v.c_str(), &end);
  if (end == v.c_str() || *end != '\0')
    throw Error(Err::ConfigError, "bad numeric value for " + key);
  return x;
}

// Base 0: decimal or 0x-prefixed hex.
inline std::uint64_t cfg_u64(const std::string& key, const std::string& v) {
  char* end = nullptr;
  unsigned long long x = std::strtoull(v.c_str(), &end, 0);
  if (end == v.c_str() || *end != '\0')
    throw Error(Err::ConfigError, "bad integer value for " + key);
  return x;
}

inline bool cfg_bool(const std::string& key, const std::string& v) {
  if (v == "1" || v == "true" || v == "on") return true;
  if (v == "0" || v == "false" || v == "off") return false;
  throw Error(Err::ConfigError, "bad boolean value for " + key);
}

inline std::vector<std::string> cfg_split(const std::string& v) {
  std::vector<std::string> out;
  std::string item;
  std::istringstream in(v);
  while (std::getline(in, item, ',')) {
    item = cfg_trim(item);
    if (!item.empty()) out.push_back(item);
  }
  return out;
}

inline std::uint16_t cfg_code(const std::string& key, const std::string& v) {
  auto x = cfg_u64(key, v);
  if (x > 0xFFFF) throw Error(Err::ConfigError, "code exceeds 16 bits: " + key);
  return static_cast<std::uint16_t>(x);
}

inline int cfg_channel(const std::string& key, const std::string& v) {
  auto x = cfg_u64(key, v);
  if (x >= 2 * static_cast<std::uint64_t>(kChannelCount))
    throw Error(Err::ConfigError, "channel index out of range: " + key);
  return static_cast<int>(x);
}

inline void cfg_analog(AnalogParams& p, const std::string& field,
                       const std::string& key, const std::string& v) {
  if (field == "slew_v_per_us") {
    p.slew_rate_v_per_us = cfg_double(key, v);
  } else if (field == "settle_us") {
    p.settle_time_us = cfg_double(key, v);
  } else if (field == "rc_cutoff_hz") {
    p.rc_cutoff_hz = cfg_double(key, v);
  } else if (field == "noise_density_v_rthz") {
    p.noise_density = cfg_double(key, v);
  } else if (field == "dnl_halflsb") {
    p.dnl_halflsb = cfg_bool(key, v);
  } else if (field == "dnl_seed") {
    p.dnl_seed = cfg_u64(key, v);
  } else if (field == "offset_v") {
    p.offset = DeviceOffset{cfg_double(key, v)};
  } else if (field == "ref_drift_ppm_per_c") {
    p.ref_drift_ppm_per_c = cfg_double(key, v);
  } else if (field == "temp_delta_c") {
    p.temp_delta_c = cfg_double(key, v);
  } else {
    throw Error(Err::ConfigError, "unknown config key " + key);
  }
}

inline std::optional<Reg> reg_by_name(const std::string& name) {
  static const std::pair<const char*, Reg> table[] = {
      {"nop", Reg::Nop},           {"deviceid", Reg::DeviceId},
      {"status", Reg::Status},     {"spiconfig", Reg::SpiConfig},
      {"genconfig", Reg::GenConfig}, {"brdconfig", Reg::BrdConfig},
      {"syncconfig", Reg::SyncConfig}, {"dacpwdwn", Reg::DacPwdwn},
      {"dacrange0", Reg::DacRange0}, {"dacrange1", Reg::DacRange1},
      {"dacrange2", Reg::DacRange2}, {"dacrange3", Reg::DacRange3},
      {"trigger", Reg::Trigger},   {"brdcast", Reg::Brdcast},
  };
  for (const auto& [n, r] : table)
    if (name == n) return r;
  if (name.rfind("dac", 0) == 0 && name.size() > 3) {
    char* end = nullptr;
    long ch = std::strtol(name.c_str() + 3, &end, 10);
    if (*end == '\0' && ch >= 0 && ch < kChannelCount) return dac_reg(static_cast<int>(ch));
  }
  return std::nullopt;
}

}  // namespace detail

inline void apply_config_entry(CampaignConfig& cfg, const std::string& key,
                               const std::string& value) {
  using namespace detail;
  auto dot = key.find('.');
  if (dot == std::string::npos || dot == 0 || dot + 1 >= key.size())
    throw Error(Err::ConfigError, "config keys are section.field: " + key);
  std::string section = key.substr(0, dot);
  std::string field = key.substr(dot + 1);

  if (section == "analog") {
    cfg_analog(cfg.sim.analog[0], field, key, value);
    cfg_analog(cfg.sim.analog[1], field, key, value);
  } else if (section == "analog0") {
    cfg_analog(cfg.sim.analog[0], field, key, value);
  } else if (section == "analog1") {
    cfg_analog(cfg.sim.analog[1], field, key, value);
  } else if (section == "clock") {
    if (field == "osc_hz") cfg.sim.osc_hz = cfg_double(key, value);
    else if (field == "gateware_hz") cfg.sim.gateware_hz = cfg_double(key, value);
    else throw Error(Err::ConfigError, "unknown config key " + key);
  } else if (section == "link") {
    if (field == "sclk_hz") cfg.sim.link.sclk_hz = cfg_double(key, value);
    else if (field == "gap_s") cfg.sim.link.gap_s = cfg_double(key, value);
    else throw Error(Err::ConfigError, "unknown config key " + key);
  } else if (section == "uart") {
    if (field == "baud") cfg.sim.baud = static_cast<int>(cfg_u64(key, value));
    else if (field == "model_latency") cfg.sim.model_uart_latency = cfg_bool(key, value);
    else throw Error(Err::ConfigError, "unknown config key " + key);
  } else if (section == "sim") {
    if (field == "memory_budget") cfg.sim.memory_budget_steps = cfg_u64(key, value);
    else if (field == "seed") cfg.sim.seed = cfg_u64(key, value);
    else if (field == "settle_s") cfg.settle_s = cfg_double(key, value);
    else throw Error(Err::ConfigError, "unknown config key " + key);
  } else if (section == "codec") {
    if (field == "convention") {
      if (value == "endpoint") cfg.sim.convention = MappingConvention::EndpointInclusive;
      else if (value == "span16") cfg.sim.convention = MappingConvention::SpanOverTwoSixteen;
      else throw Error(Err::ConfigError, "convention is endpoint or span16");
    } else {
      throw Error(Err::ConfigError, "unknown config key " + key);
    }
  } else if (section == "regmap") {
    auto reg = reg_by_name(field);
    if (!reg) throw Error(Err::ConfigError, "unknown register name " + key);
    auto addr = cfg_u64(key, value);
    if (addr > 0x3F) throw Error(Err::ConfigError, "register address exceeds 6 bits: " + key);
    cfg.sim.map.addr_of[static_cast<std::size_t>(*reg)] = static_cast<std::uint8_t>(addr);
  } else if (section == "sweep") {
    if (field == "channels") {
      cfg.sweep_channels.clear();
      for (const auto& s : cfg_split(value)) cfg.sweep_channels.push_back(cfg_channel(key, s));
    } else if (field == "codes") {
      cfg.sweep_codes.clear();
      for (const auto& s : cfg_split(value)) cfg.sweep_codes.push_back(cfg_code(key, s));
    } else if (field == "window") {
      cfg.sweep_window = cfg_u64(key, value);
    } else if (field == "band_v") {
      cfg.sweep_band_v = cfg_double(key, value);
    } else {
      throw Error(Err::ConfigError, "unknown config key " + key);
    }
  } else if (section == "staircase") {
    if (field == "channel") cfg.stair_channel = cfg_channel(key, value);
    else if (field == "code_lo") cfg.stair_lo = cfg_code(key, value);
    else if (field == "code_hi") cfg.stair_hi = cfg_code(key, value);
    else if (field == "pair") cfg.stair_pair = cfg_bool(key, value);
    else throw Error(Err::ConfigError, "unknown config key " + key);
  } else if (section == "psd") {
    if (field == "channel") cfg.psd_channel = cfg_channel(key, value);
    else if (field == "code") cfg.psd_code = cfg_code(key, value);
    else if (field == "fs_hz") cfg.psd_fs_hz = cfg_double(key, value);
    else if (field == "rbw_hz") cfg.psd_rbw_hz = cfg_double(key, value);
    else if (field == "duration_s") cfg.psd_duration_s = cfg_double(key, value);
    else throw Error(Err::ConfigError, "unknown config key " + key);
  } else if (section == "transient") {
    if (field == "channel") cfg.tr_channel = cfg_channel(key, value);
    else if (field == "code_from") cfg.tr_from = cfg_code(key, value);
    else if (field == "code_to") cfg.tr_to = cfg_code(key, value);
    else if (field == "dt_s") cfg.tr_dt_s = cfg_double(key, value);
    else if (field == "duration_s") cfg.tr_duration_s = cfg_double(key, value);
    else if (field == "monitor_channel") cfg.tr_monitor = cfg_channel(key, value);
    else if (field == "monitor_code") cfg.tr_monitor_code = cfg_code(key, value);
    else throw Error(Err::ConfigError, "unknown config key " + key);
  } else if (section == "noise") {
    if (field == "r_ohms") {
      cfg.nb_r_ohms.clear();
      for (const auto& s : cfg_split(value)) cfg.nb_r_ohms.push_back(cfg_double(key, s));
    } else if (field == "temperature_k") {
      cfg.nb_temperature_k = cfg_double(key, value);
    } else if (field == "bandwidth_hz") {
      cfg.nb_bandwidth_hz = cfg_double(key, value);
    } else {
      throw Error(Err::ConfigError, "unknown config key " + key);
    }
  } else if (section == "throughput") {
    if (field == "sclk_hz") {
      cfg.tp_sclk_hz.clear();
      for (const auto& s : cfg_split(value)) cfg.tp_sclk_hz.push_back(cfg_double(key, s));
    } else if (field == "stream_k") {
      cfg.tp_stream_k = static_cast<int>(cfg_u64(key, value));
    } else {
      throw Error(Err::ConfigError, "unknown config key " + key);
    }
  } else {
    throw Error(Err::ConfigError, "unknown config section " + key);
  }
}

inline CampaignConfig parse_config_text(const std::string& text,
                                        CampaignConfig base = {}) {
  std::istringstream lines(text);
  std::string line;
  while (std::getline(lines, line)) {
    auto hash = line.find('#');
    if (hash != std::string::npos) line.erase(hash);
    line = detail::cfg_trim(line);
    if (line.empty()) continue;
    auto eq = line.find('=');
    if (eq == std::string::npos)
      throw Error(Err::ConfigError, "config line is not key=value: " + line);
    std::string key = detail::cfg_trim(line.substr(0, eq));
    std::string value = detail::cfg_trim(line.substr(eq + 1));
    if (key.empty()) throw Error(Err::ConfigError, "empty config key");
    apply_config_entry(base, key, value);
  }
  return base;
}

inline CampaignConfig load_config_file(const std::string& path,
                                       CampaignConfig base = {}) {
  std::ifstream in(path);
  if (!in) throw Error(Err::ConfigError, "cannot open config file " + path);
  std::ostringstream buf;
  buf << in.rdbuf();
  return parse_config_text(buf.str(), std::move(base));
}

}  // namespace vanguard
