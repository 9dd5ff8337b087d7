// Acceptance gate. Runs every release criterion end to end and prints one
// PASS/FAIL line per criterion; the exit status is the number of failures.
//
// The digital-twin criterion compares against a committed golden trace.
// Run with --write-golden to regenerate the fixture after an audited change.

#include <chrono>
#include <cmath>
#include <cstdarg>
#include <cstdio>
#include <cstring>
#include <fstream>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "vanguard/vanguard.hpp"

#ifndef VANGUARD_FIXTURE_DIR
#error "VANGUARD_FIXTURE_DIR must point at the committed fixtures directory"
#endif

namespace {

using namespace vanguard;

const RegisterMap kMap = RegisterMap::dac81416();
const OutputRange kB10 = OutputRange::from_code(RangeCode::B10);
const OutputRange kB5 = OutputRange::from_code(RangeCode::B5);

int g_failures = 0;

double seconds_since(std::chrono::steady_clock::time_point t0) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0)
      .count();
}

void report(int idx, const char* title, bool ok, const std::string& detail) {
  std::printf("%s %2d  %-28s  %s\n", ok ? "PASS" : "FAIL", idx, title,
              detail.c_str());
  if (!ok) ++g_failures;
}

std::string fmt(const char* f, ...) {
  char buf[512];
  va_list ap;
  va_start(ap, f);
  std::vsnprintf(buf, sizeof buf, f, ap);
  va_end(ap);
  return buf;
}

// ---- 1: code-mapping endpoints -------------------------------------------

void criterion_endpoints() {
  auto t0 = std::chrono::steady_clock::now();
  double top = code_to_voltage(0xFFFF, kB10, MappingConvention::EndpointInclusive);
  double mid = code_to_voltage(0x7FFF, kB10, MappingConvention::EndpointInclusive);
  double e_top = std::abs(top - 10.0);
  double e_mid = std::abs(mid - (-0.000152590));
  double dt = seconds_since(t0);
  bool ok = e_top < 1e-9 && e_mid < 1e-9 && dt < 1.0;
  report(1, "code-mapping endpoints", ok,
         fmt("err(0xFFFF)=%.3g err(0x7FFF)=%.3g t=%.3fs", e_top, e_mid, dt));
}

// ---- 2: round-trip totality ----------------------------------------------

void criterion_round_trip() {
  auto t0 = std::chrono::steady_clock::now();
  std::uint64_t bad = 0;
  for (auto conv : {MappingConvention::EndpointInclusive,
                    MappingConvention::SpanOverTwoSixteen})
    for (const auto& range : {kB10, kB5})
      for (std::uint32_t c = 0; c <= 0xFFFF; ++c) {
        auto v = code_to_voltage(static_cast<VoltageCode>(c), range, conv);
        if (voltage_to_code(v, range, conv) != c) ++bad;
      }
  double dt = seconds_since(t0);
  bool ok = bad == 0 && dt < 5.0;
  report(2, "round-trip totality", ok,
         fmt("mismatches=%llu of 262144 t=%.3fs",
             static_cast<unsigned long long>(bad), dt));
}

// ---- 3: Johnson benchmark ------------------------------------------------

void criterion_johnson() {
  double d = johnson_noise_density(1.0, 300.0);
  double rel = std::abs(d - 0.1287e-9) / 0.1287e-9;
  report(3, "Johnson benchmark", rel <= 0.005,
         fmt("density=%.6g V/rtHz rel_err=%.3g", d, rel));
}

// ---- 4: filter response ---------------------------------------------------

void criterion_filter() {
  AnalogParams p;
  double at_fc = filter_response(p, p.rc_cutoff_hz).magnitude_db;
  double at_10fc = filter_response(p, 10.0 * p.rc_cutoff_hz).magnitude_db;
  double at_100fc = filter_response(p, 100.0 * p.rc_cutoff_hz).magnitude_db;
  double slope = at_100fc - at_10fc;
  bool ok = std::abs(at_fc - (-3.01)) <= 0.05 && std::abs(slope - (-20.0)) <= 0.5;
  report(4, "filter response", ok,
         fmt("mag(fc)=%.4f dB slope=%.3f dB/decade", at_fc, slope));
}

// ---- 5: transient oracle equivalence -------------------------------------

void criterion_transient_oracle() {
  AnalogParams p;
  double tau = p.tau_s();
  double dt = tau / 100.0;
  double duration = 20.0 / p.slew_v_per_s() + 12.0 * tau;
  auto w = simulate_transition(p, -10.0, 10.0, duration, dt);
  double worst = 0.0;
  for (std::size_t i = 0; i < w.samples.size(); ++i) {
    double exact = closed_form_transition(p, -10.0, 10.0, w.time_at(i));
    worst = std::max(worst, std::abs(w.samples[i] - exact) / 20.0);
  }
  double slew = measure_slew(w);
  double vs_hil = std::abs(slew - 1.76) / 1.76;
  bool ok = worst < 1e-3 && slew >= 1.6 && slew <= 2.1 && vs_hil <= 0.25;
  report(5, "transient oracle", ok,
         fmt("max_rel_err=%.3g slew=%.4f V/us vs_hil=%.1f%%", worst, slew,
             vs_hil * 100.0));
}

// ---- 6: staircase exactness and DNL bounds --------------------------------

void criterion_staircase() {
  std::uint64_t bad_exact = 0;
  for (auto conv : {MappingConvention::EndpointInclusive,
                    MappingConvention::SpanOverTwoSixteen}) {
    Ratio lsb = lsb_size_exact(kB10, conv);
    for (std::uint32_t c = 0; c < 0xFFFF; ++c) {
      Ratio inc = code_to_voltage_exact(static_cast<VoltageCode>(c + 1), kB10, conv) -
                  code_to_voltage_exact(static_cast<VoltageCode>(c), kB10, conv);
      if (!(inc == lsb)) ++bad_exact;
    }
  }

  CampaignConfig cfg;
  cfg.sim.analog[0].dnl_halflsb = true;
  cfg.sim.analog[0].dnl_seed = 0x57A1C;
  cfg.stair_pair = false;
  SimBackend backend(cfg);
  auto j = nlohmann::json::parse(run_staircase(backend, cfg));
  double lsb = j["lsb_ideal_v"].get<double>();
  auto inc = j["increments_v"].get<std::vector<double>>();
  std::uint64_t out_of_band = 0;
  double sum = 0.0;
  for (double x : inc) {
    if (x < 0.5 * lsb || x > 1.5 * lsb) ++out_of_band;
    sum += x;
  }
  double mean_err = std::abs(sum / static_cast<double>(inc.size()) - lsb) / lsb;
  bool ok = bad_exact == 0 && inc.size() >= 1000 && out_of_band == 0 &&
            mean_err <= 0.01;
  report(6, "staircase exactness and DNL", ok,
         fmt("exact_mismatch=%llu n=%zu out_of_band=%llu mean_err=%.3g",
             static_cast<unsigned long long>(bad_exact), inc.size(),
             static_cast<unsigned long long>(out_of_band), mean_err));
}

// ---- 7: inter-device offset recovery --------------------------------------

void criterion_offset_recovery() {
  CampaignConfig cfg;
  cfg.sim.analog[1].offset.volts = 1.07e-3;
  SimBackend backend(cfg);
  auto j = nlohmann::json::parse(run_staircase(backend, cfg));
  double recovered = j["inter_device_offset_v"].get<double>();
  double err = std::abs(recovered - 1.07e-3);
  report(7, "inter-device offset", err < 1e-6,
         fmt("recovered=%.9g V err=%.3g V", recovered, err));
}

// ---- 8: PSD calibration ----------------------------------------------------

void criterion_psd() {
  auto t0 = std::chrono::steady_clock::now();
  CampaignConfig cfg;
  cfg.sim.analog[0].noise_density = 1e-6;
  SimBackend backend(cfg);
  std::istringstream csv(run_psd(backend, cfg));

  // Band spans rbw..Nyquist (10 Hz..40.96 kHz); judge the middle decades.
  double lo_sum = 0.0, hi_sum = 0.0;
  std::uint64_t lo_n = 0, hi_n = 0;
  std::string line;
  while (std::getline(csv, line)) {
    if (line.empty() || line[0] == '#' || line[0] == 'f') continue;
    auto comma = line.find(',');
    double f = std::strtod(line.c_str(), nullptr);
    double psd = std::strtod(line.c_str() + comma + 1, nullptr);
    if (f >= 100.0 && f < 1000.0) { lo_sum += psd; ++lo_n; }
    if (f >= 1000.0 && f < 10000.0) { hi_sum += psd; ++hi_n; }
  }
  double expect = 1e-12;
  double lo_err = std::abs(lo_sum / static_cast<double>(lo_n) - expect) / expect;
  double hi_err = std::abs(hi_sum / static_cast<double>(hi_n) - expect) / expect;
  double dt = seconds_since(t0);
  bool ok = lo_n > 0 && hi_n > 0 && lo_err <= 0.10 && hi_err <= 0.10 && dt < 30.0;
  report(8, "PSD calibration", ok,
         fmt("decade errs %.1f%% / %.1f%% t=%.3fs", lo_err * 100.0,
             hi_err * 100.0, dt));
}

// ---- 9: protocol suite -----------------------------------------------------

Command random_command(std::mt19937& rng) {
  Command c;
  c.opcode = static_cast<Opcode>(1 + rng() % 4);
  c.dac_index = static_cast<std::uint8_t>(rng() % 2);
  c.addr = static_cast<std::uint8_t>(
      c.opcode == Opcode::LoadWaveformWord ? rng() % 256 : rng() % 0x40);
  c.data = static_cast<std::uint16_t>(rng());
  return c;
}

void criterion_protocols() {
  auto t0 = std::chrono::steady_clock::now();
  std::mt19937 rng(0xACCE97);
  std::uint64_t inverse_bad = 0, chunk_bad = 0, fuzz_bad = 0, spi_bad = 0;

  {  // Encode/parse inverse on 1e5 random commands.
    Parser parser;
    for (int i = 0; i < 100000; ++i) {
      Command c = random_command(rng);
      auto r = parser.feed(encode_packet(c));
      if (r.commands.size() != 1 || !(r.commands[0] == c) || !r.errors.empty())
        ++inverse_bad;
    }
  }

  {  // Chunking invariance over 1e3 random segmentations of a 64-packet stream.
    std::vector<Command> cmds;
    std::vector<std::uint8_t> stream;
    for (int i = 0; i < 64; ++i) {
      cmds.push_back(random_command(rng));
      auto p = encode_packet(cmds.back());
      stream.insert(stream.end(), p.begin(), p.end());
    }
    for (int trial = 0; trial < 1000; ++trial) {
      Parser parser;
      std::vector<Command> got;
      std::size_t pos = 0;
      while (pos < stream.size()) {
        std::size_t n = std::min<std::size_t>(1 + rng() % 17, stream.size() - pos);
        auto r = parser.feed(std::span(stream).subspan(pos, n));
        got.insert(got.end(), r.commands.begin(), r.commands.end());
        pos += n;
      }
      if (!(got == cmds)) ++chunk_bad;
    }
  }

  {  // Byte-flip fuzz: every packet untouched by the flip must come back.
    for (int trial = 0; trial < 1000; ++trial) {
      std::vector<Command> cmds;
      std::vector<std::uint8_t> stream;
      for (int i = 0; i < 16; ++i) {
        cmds.push_back(random_command(rng));
        auto p = encode_packet(cmds.back());
        stream.insert(stream.end(), p.begin(), p.end());
      }
      std::size_t pos = rng() % stream.size();
      auto flip = static_cast<std::uint8_t>(1 + rng() % 255);
      stream[pos] ^= flip;
      std::vector<Command> expect = cmds;
      expect.erase(expect.begin() + static_cast<long>(pos / kUartPacketLen));
      Parser parser;
      auto r = parser.feed(stream);
      if (!(r.commands == expect)) ++fuzz_bad;
    }
  }

  {  // Stream-vs-individual replay equivalence on 1e3 random bursts.
    for (int trial = 0; trial < 1000; ++trial) {
      int start = static_cast<int>(rng() % 16);
      int len = 1 + static_cast<int>(rng() % (16 - start));
      std::vector<std::uint16_t> words(static_cast<std::size_t>(len));
      for (auto& w : words) w = static_cast<std::uint16_t>(rng());
      DacRegisterFile streamed, individual;
      auto base = static_cast<std::uint8_t>(kMap.addr(Reg::Dac0) + start);
      replay_stream(encode_stream(base, words), streamed);
      for (int i = 0; i < len; ++i)
        individual.write_register(static_cast<std::uint8_t>(base + i),
                                  words[static_cast<std::size_t>(i)]);
      if (streamed.serialize() != individual.serialize()) ++spi_bad;
    }
  }

  double dt = seconds_since(t0);
  bool ok = inverse_bad == 0 && chunk_bad == 0 && fuzz_bad == 0 && spi_bad == 0 &&
            dt < 30.0;
  report(9, "protocol suite", ok,
         fmt("inverse=%llu chunk=%llu fuzz=%llu spi=%llu t=%.3fs",
             static_cast<unsigned long long>(inverse_bad),
             static_cast<unsigned long long>(chunk_bad),
             static_cast<unsigned long long>(fuzz_bad),
             static_cast<unsigned long long>(spi_bad), dt));
}

// ---- 10: end-to-end digital twin ------------------------------------------

std::vector<std::uint8_t> pkt(Opcode op, std::uint8_t dac, std::uint8_t addr,
                              std::uint16_t data) {
  auto a = encode_packet(Command{op, dac, addr, data});
  return {a.begin(), a.end()};
}

void append(std::vector<std::uint8_t>& to, const std::vector<std::uint8_t>& part) {
  to.insert(to.end(), part.begin(), part.end());
}

std::vector<std::uint8_t> bring_up(std::uint8_t dac) {
  std::vector<std::uint8_t> b;
  append(b, pkt(Opcode::WriteReg, dac, kMap.addr(Reg::DacPwdwn), 0x0000));
  for (auto r : {Reg::DacRange0, Reg::DacRange1, Reg::DacRange2, Reg::DacRange3})
    append(b, pkt(Opcode::WriteReg, dac, kMap.addr(r), 0x000A));
  return b;
}

// Power-up, range config, two staged writes released by a soft trigger, then
// a 21-point ramp played back on the second device.
std::string scripted_session(SomSimulator& sim, std::uint16_t* ramp_end_code) {
  sim.ingest_uart(0, bring_up(0));
  sim.ingest_uart(0, bring_up(1));
  sim.ingest_uart(200, pkt(Opcode::WriteReg, 0, kMap.addr(Reg::SyncConfig), 0x0003));
  std::vector<std::uint8_t> staged;
  append(staged, pkt(Opcode::WriteReg, 0, kMap.addr(Reg::Dac0), 0x4000));
  append(staged, pkt(Opcode::WriteReg, 0, kMap.addr(Reg::Dac1), 0xC000));
  sim.ingest_uart(300, staged);
  sim.add_probe(400, 0);
  sim.add_probe(400, 1);
  sim.ingest_uart(500, pkt(Opcode::WriteReg, 0, kMap.addr(Reg::Trigger),
                           DacRegisterFile::kTriggerSoftLdac));
  sim.add_probe(30000, 0);
  sim.add_probe(30000, 1);

  RampSpec spec;
  spec.channel = 16;
  spec.v_start = -1.0;
  spec.v_end = 1.0;
  spec.duration_s = 2e-3;
  spec.n_points = 21;
  auto prog = generate_ramp(spec, kB10, sim.config().convention,
                            sim.config().link);
  *ramp_end_code = prog.steps.back().code;
  std::vector<std::uint8_t> upload =
      pkt(Opcode::LoadWaveformWord, 0, kWaveBegin, 0);
  for (auto w : program_to_words(prog))
    append(upload, pkt(Opcode::LoadWaveformWord, 0, kWaveAppend, w));
  append(upload, pkt(Opcode::LoadWaveformWord, 0, kWaveEnd, 0));
  sim.ingest_uart(30100, upload);

  sim.pulse_trigger(31000);
  sim.add_probe(36000, 16);
  sim.add_probe(41000, 16);
  sim.add_probe(46000, 16);
  sim.add_probe(119000, 0);
  sim.add_probe(119000, 1);
  sim.add_probe(119000, 16);
  sim.run_until(120000);
  return trace_to_text(sim.trace());
}

SimConfig session_config() {
  SimConfig sc;
  sc.analog[1].offset.volts = 1.07e-3;
  return sc;
}

void criterion_digital_twin(bool write_golden) {
  SomSimulator sim_a(session_config());
  SomSimulator sim_b(session_config());
  std::uint16_t end_code = 0;
  std::string trace_a = scripted_session(sim_a, &end_code);
  std::string trace_b = scripted_session(sim_b, &end_code);

  const std::string path = std::string(VANGUARD_FIXTURE_DIR) + "/golden_trace.txt";
  if (write_golden) {
    std::ofstream out(path, std::ios::binary);
    out << trace_a;
  }
  std::ifstream in(path, std::ios::binary);
  std::stringstream golden;
  golden << in.rdbuf();

  auto conv = sim_a.config().convention;
  double want0 = code_to_voltage(0x4000, kB10, conv);
  double want1 = code_to_voltage(0xC000, kB10, conv);
  double want16 = code_to_voltage(end_code, kB10, conv) + 1.07e-3;
  bool steady = sim_a.probe_voltage(0) == want0 &&
                sim_a.probe_voltage(1) == want1 &&
                sim_a.probe_voltage(16) == want16;

  bool reruns_match = trace_a == trace_b;
  bool golden_match = in.good() && trace_a == golden.str();
  report(10, "digital twin golden trace",
         reruns_match && golden_match && steady,
         fmt("reruns_match=%d golden_match=%d steady_exact=%d lines=%zu",
             reruns_match, golden_match, steady,
             static_cast<std::size_t>(
                 std::count(trace_a.begin(), trace_a.end(), '\n'))));
}

// ---- 11: throughput table --------------------------------------------------

void criterion_throughput() {
  CampaignConfig cfg;
  auto j = nlohmann::json::parse(run_throughput(cfg));
  const auto& row = j["rows"][0];
  auto updates = row["updates_per_s"].get<std::uint64_t>();
  std::string bottleneck = row["bottleneck"].get<std::string>();
  bool ok = row["mode"].get<std::string>() == "individual" &&
            row["sclk_hz"].get<double>() == 10e6 &&
            updates >= 416665 && updates <= 416667 && bottleneck == "filter";
  report(11, "throughput table", ok,
         fmt("updates_per_s=%llu bottleneck=%s",
             static_cast<unsigned long long>(updates), bottleneck.c_str()));
}

// ---- 12: adjacent-channel isolation ----------------------------------------

void criterion_isolation() {
  CampaignConfig cfg;
  SimBackend backend(cfg);
  std::string csv = run_transient(backend, cfg);
  auto pos = csv.find("monitor_max_dev_v=");
  bool found = pos != std::string::npos;
  double dev = found ? std::strtod(csv.c_str() + pos + 18, nullptr) : 1.0;
  report(12, "adjacent-channel isolation", found && dev == 0.0,
         fmt("monitor_max_dev_v=%g", dev));
}

}  // namespace

int main(int argc, char** argv) {
  bool write_golden = argc > 1 && std::strcmp(argv[1], "--write-golden") == 0;
  criterion_endpoints();
  criterion_round_trip();
  criterion_johnson();
  criterion_filter();
  criterion_transient_oracle();
  criterion_staircase();
  criterion_offset_recovery();
  criterion_psd();
  criterion_protocols();
  criterion_digital_twin(write_golden);
  criterion_throughput();
  criterion_isolation();
  std::printf("%d of 12 criteria failed\n", g_failures);
  return g_failures;
}
