#pragma once

#include <array>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <cstring>
#include <queue>
#include <span>
#include <sstream>
#include <string>
#include <vector>

#include "vanguard/analog_model.hpp"
#include "vanguard/dac_register_model.hpp"
#include "vanguard/detail/rng.hpp"
#include "vanguard/errors.hpp"
#include "vanguard/spi_link.hpp"
#include "vanguard/uart_protocol.hpp"
#include "vanguard/waveform_engine.hpp"

namespace vanguard {

struct SimConfig {
  double osc_hz = 50e6;
  // Gateware clock: oscillator divided down; one tick of every schedule.
  double gateware_hz = 10e6;
  LinkParams link{};
  RegisterMap map = RegisterMap::dac81416();
  std::size_t memory_budget_steps = 4096;
  MappingConvention convention = MappingConvention::EndpointInclusive;
  std::array<AnalogParams, 2> analog{};
  bool model_uart_latency = false;
  int baud = 115200;
  std::uint64_t seed = 0;
};

struct SimStats {
  ParserStats uart;
  std::uint64_t commits = 0;
  std::uint64_t write_errors = 0;
  std::uint64_t read_errors = 0;
  std::uint64_t triggers_acted = 0;
  std::uint64_t triggers_noop = 0;
  std::uint64_t triggers_ignored = 0;
  std::uint64_t programs_loaded = 0;
  std::uint64_t load_errors = 0;
};

struct TraceRecord {
  std::uint64_t t_ns = 0;
  std::string kind;
  std::string payload;
};

inline std::string trace_to_text(const std::vector<TraceRecord>& records) {
  std::string out;
  char head[32];
  for (const auto& r : records) {
    std::snprintf(head, sizeof(head), "%llu ",
                  static_cast<unsigned long long>(r.t_ns));
    out += head;
    out += r.kind;
    out += " ";
    out += r.payload;
    out += "\n";
  }
  return out;
}

// Deterministic discrete-event twin of the module: UART front end, two
// serialized SPI controllers, two register files, hardware trigger pin,
// waveform playback, and per-channel analog evolution.
class SomSimulator {
 public:
  explicit SomSimulator(SimConfig cfg = {}) : cfg_(cfg), rng_(cfg.seed) {
    // Frame tick accounting and the event clock must agree.
    cfg_.link.tick_hz = cfg_.gateware_hz;
    dacs_[0] = DacRegisterFile(cfg_.map);
    dacs_[1] = DacRegisterFile(cfg_.map);
  }

  std::uint64_t now_ticks() const { return now_; }
  double tick_s() const { return 1.0 / cfg_.gateware_hz; }
  std::uint64_t tick_ns() const {
    return static_cast<std::uint64_t>(1e9 / cfg_.gateware_hz);
  }

  const SimConfig& config() const { return cfg_; }
  const DacRegisterFile& dac(int i) const { return dacs_[i]; }
  const SimStats& stats() const { return stats_; }

  void ingest_uart(std::uint64_t at_tick, std::span<const std::uint8_t> bytes) {
    if (at_tick < now_)
      throw Error(Err::EventOutOfOrder, "uart event before current time");
    if (cfg_.model_uart_latency) {
      double wire_s = static_cast<double>(bytes.size()) * 10.0 / cfg_.baud;
      at_tick += static_cast<std::uint64_t>(std::ceil(wire_s * cfg_.gateware_hz));
    }
    Event ev;
    ev.at = at_tick;
    ev.kind = Event::Kind::UartBytes;
    ev.bytes.assign(bytes.begin(), bytes.end());
    push(std::move(ev));
  }

  void pulse_trigger(std::uint64_t at_tick) {
    if (at_tick < now_)
      throw Error(Err::EventOutOfOrder, "trigger event before current time");
    Event ev;
    ev.at = at_tick;
    ev.kind = Event::Kind::TriggerEdge;
    push(std::move(ev));
  }

  void add_probe(std::uint64_t at_tick, int global_channel,
                 std::uint64_t dt_ticks = 0) {
    if (at_tick < now_)
      throw Error(Err::EventOutOfOrder, "probe event before current time");
    Event ev;
    ev.at = at_tick;
    ev.kind = Event::Kind::ProbeSample;
    ev.channel = global_channel;
    ev.dt_ticks = dt_ticks;
    push(std::move(ev));
  }

  // Host-side program load. Rejected while playback is in flight.
  void load_waveform(const WaveformProgram& prog) {
    if (playback_running(now_))
      throw Error(Err::InvalidProgram, "load while playback is running");
    validate_program(prog);
    program_ = prog;
    program_loaded_ = true;
  }

  // Processes every queued event with timestamp <= t_end_tick and returns
  // the trace records produced by this call.
  std::vector<TraceRecord> run_until(std::uint64_t t_end_tick) {
    if (t_end_tick < now_)
      throw Error(Err::EventOutOfOrder, "run_until into the past");
    std::size_t first = trace_.size();
    while (!queue_.empty()) {
      const Event& top = queue_.top();
      if (top.at > t_end_tick) break;
      Event ev = top;
      queue_.pop();
      now_ = ev.at;
      dispatch(ev);
    }
    now_ = t_end_tick;
    return {trace_.begin() + static_cast<std::ptrdiff_t>(first), trace_.end()};
  }

  const std::vector<TraceRecord>& trace() const { return trace_; }

  std::vector<Response> take_responses() {
    auto out = std::move(responses_);
    responses_.clear();
    return out;
  }

  // Noise-free channel readout at the current time.
  ChannelOutput marker(int global_channel) const {
    return dacs_[global_channel / kChannelCount].output(global_channel %
                                                        kChannelCount);
  }

  double probe_voltage(int global_channel) {
    auto& ch = channels_[global_channel];
    advance_to(global_channel, now_);
    return ch.state.out + cfg_.analog[global_channel / kChannelCount].offset.volts;
  }

  // Noisy sample at the current time; dt_s sets the noise bandwidth. Draws
  // from the simulator stream, so call order defines the realization.
  double sample_channel(int global_channel, double dt_s) {
    auto& ch = channels_[global_channel];
    advance_to(global_channel, now_);
    const auto& params = cfg_.analog[global_channel / kChannelCount];
    return probe_sample(ch.state, params, dt_s, &rng_);
  }

  // Stationary-noise record of a settled channel. The event clock does not
  // advance, so the sampling rate is not bound to the tick grid; callers own
  // the quiescence precondition.
  std::vector<double> sample_series(int global_channel, double dt_s,
                                    std::size_t count) {
    advance_to(global_channel, now_);
    const auto& ch = channels_[global_channel];
    const auto& params = cfg_.analog[global_channel / kChannelCount];
    std::vector<double> out(count);
    for (auto& v : out) v = probe_sample(ch.state, params, dt_s, &rng_);
    return out;
  }

  bool playback_running(std::uint64_t at_tick) const {
    return playback_started_ && at_tick < playback_end_;
  }

 private:
  struct Event {
    std::uint64_t at = 0;
    std::uint64_t seq = 0;
    enum class Kind {
      UartBytes,
      TriggerEdge,
      ProbeSample,
      RegCommit,
      RegRead,
      PlaybackCommitAll,
    } kind = Kind::UartBytes;
    std::vector<std::uint8_t> bytes;
    int dac = 0;
    std::uint8_t addr = 0;
    std::uint16_t word = 0;
    bool staged_write = false;
    int channel = 0;
    std::uint64_t dt_ticks = 0;

    bool operator>(const Event& o) const {
      if (at != o.at) return at > o.at;
      return seq > o.seq;
    }
  };

  struct ChannelSim {
    AnalogChannelState state{};
    std::uint64_t last_tick = 0;
    bool active = false;
  };

  void push(Event ev) {
    ev.seq = next_seq_++;
    queue_.push(std::move(ev));
  }

  void emit(std::uint64_t at_tick, const char* kind, std::string payload) {
    TraceRecord r;
    r.t_ns = at_tick * tick_ns();
    r.kind = kind;
    r.payload = std::move(payload);
    trace_.push_back(std::move(r));
  }

  // IEEE754 bit pattern, so trace comparison is bit-exact.
  static std::string voltage_bits_hex(double v) {
    std::uint64_t bits = 0;
    std::memcpy(&bits, &v, sizeof(bits));
    char buf[20];
    std::snprintf(buf, sizeof(buf), "%016llX",
                  static_cast<unsigned long long>(bits));
    return buf;
  }

  void dispatch(const Event& ev) {
    switch (ev.kind) {
      case Event::Kind::UartBytes:
        on_uart(ev);
        break;
      case Event::Kind::TriggerEdge:
        on_trigger(ev);
        break;
      case Event::Kind::ProbeSample:
        on_probe(ev);
        break;
      case Event::Kind::RegCommit:
        on_commit(ev);
        break;
      case Event::Kind::RegRead:
        on_read(ev);
        break;
      case Event::Kind::PlaybackCommitAll:
        on_playback_commit_all(ev);
        break;
    }
  }

  // One serialized SPI transaction slot on device d starting no earlier
  // than `at`; returns the commit (completion) tick.
  std::uint64_t book_spi(int d, std::uint64_t at) {
    std::uint64_t start = std::max(at, spi_busy_until_[d]);
    std::uint64_t commit = start + cfg_.link.frame_ticks();
    spi_busy_until_[d] = commit;
    return commit;
  }

  void on_uart(const Event& ev) {
    auto result = parser_.feed(ev.bytes);
    for (const auto& cmd : result.commands) {
      switch (cmd.opcode) {
        case Opcode::WriteReg: {
          Event commit;
          commit.kind = Event::Kind::RegCommit;
          commit.at = book_spi(cmd.dac_index, ev.at);
          commit.dac = cmd.dac_index;
          commit.addr = cmd.addr;
          commit.word = cmd.data;
          push(std::move(commit));
          break;
        }
        case Opcode::Trigger: {
          // Soft trigger: an LDAC register write over SPI to one device.
          Event commit;
          commit.kind = Event::Kind::RegCommit;
          commit.at = book_spi(cmd.dac_index, ev.at);
          commit.dac = cmd.dac_index;
          commit.addr = dacs_[cmd.dac_index].map().addr(Reg::Trigger);
          commit.word = DacRegisterFile::kTriggerSoftLdac;
          push(std::move(commit));
          break;
        }
        case Opcode::ReadReg: {
          Event read;
          read.kind = Event::Kind::RegRead;
          read.at = book_spi(cmd.dac_index, ev.at);
          read.dac = cmd.dac_index;
          read.addr = cmd.addr;
          push(std::move(read));
          break;
        }
        case Opcode::LoadWaveformWord:
          on_wave_word(ev.at, cmd);
          break;
      }
    }
    stats_.uart = parser_.stats();
  }

  void on_wave_word(std::uint64_t at, const Command& cmd) {
    switch (cmd.addr) {
      case kWaveBegin:
        staging_.clear();
        staging_mode_ = (cmd.data & 1) ? PlaybackMode::StagedSync
                                       : PlaybackMode::PerStepAsync;
        staging_active_ = true;
        return;
      case kWaveAppend:
        if (!staging_active_) {
          ++stats_.load_errors;
          emit(at, "err", err_hex(Err::InvalidProgram));
          return;
        }
        if (staging_.size() >= cfg_.memory_budget_steps * 4) {
          ++stats_.load_errors;
          staging_active_ = false;
          emit(at, "err", err_hex(Err::ProgramTooLarge));
          return;
        }
        staging_.push_back(cmd.data);
        return;
      case kWaveEnd: {
        staging_active_ = false;
        try {
          auto prog = program_from_words(staging_, staging_mode_);
          if (playback_running(at))
            throw Error(Err::InvalidProgram, "load while playback is running");
          validate_program(prog);
          program_ = std::move(prog);
          program_loaded_ = true;
          char payload[16];
          std::snprintf(payload, sizeof(payload), "%04llX %02X",
                        static_cast<unsigned long long>(program_.steps.size()),
                        program_.mode == PlaybackMode::StagedSync ? 1 : 0);
          emit(at, "load", payload);
        } catch (const Error& e) {
          ++stats_.load_errors;
          emit(at, "err", err_hex(e.code()));
        }
        return;
      }
      default:
        ++stats_.load_errors;
        emit(at, "err", err_hex(Err::InvalidField));
        return;
    }
  }

  void validate_program(const WaveformProgram& prog) {
    if (prog.steps.empty())
      throw Error(Err::InvalidProgram, "empty program");
    if (prog.steps.size() > cfg_.memory_budget_steps)
      throw Error(Err::ProgramTooLarge, "program exceeds memory budget");
    for (std::size_t i = 1; i < prog.steps.size(); ++i) {
      if (prog.steps[i].offset_ticks < prog.steps[i - 1].offset_ticks)
        throw Error(Err::InvalidProgram, "step offsets must be non-decreasing");
    }
    if (prog.mode == PlaybackMode::StagedSync) {
      for (const auto& s : prog.steps) {
        if (!dacs_[s.dac_index].map().data_channel(s.addr))
          throw Error(Err::InvalidProgram,
                      "staged playback steps must target data registers");
      }
    }
    ++stats_.programs_loaded;
  }

  void on_trigger(const Event& ev) {
    bool committed = false;
    bool staged_any = false;
    for (auto& d : dacs_) {
      for (int ch = 0; ch < kChannelCount; ++ch) {
        if (d.staged(ch)) staged_any = true;
      }
    }
    if (staged_any) {
      // Hardware LDAC: both devices commit on the same edge.
      dacs_[0].commit_trigger();
      dacs_[1].commit_trigger();
      refresh_device(0, ev.at);
      refresh_device(1, ev.at);
      committed = true;
    }

    int playback_code = 0;
    if (program_loaded_ && playback_running(ev.at)) {
      playback_code = 2;
      ++stats_.triggers_ignored;
    } else if (program_loaded_) {
      start_playback(ev.at);
      playback_code = 1;
    }

    if (committed || playback_code == 1) {
      ++stats_.triggers_acted;
    } else if (playback_code != 2) {
      ++stats_.triggers_noop;
    }
    char payload[8];
    std::snprintf(payload, sizeof(payload), "%02X %02X", committed ? 1 : 0,
                  playback_code);
    emit(ev.at, "trigger", payload);
  }

  void start_playback(std::uint64_t at) {
    playback_started_ = true;
    std::uint64_t last_commit = at;
    for (const auto& s : program_.steps) {
      Event commit;
      commit.kind = Event::Kind::RegCommit;
      commit.at = book_spi(s.dac_index, at + s.offset_ticks);
      commit.dac = s.dac_index;
      commit.addr = s.addr;
      commit.word = s.code;
      commit.staged_write = program_.mode == PlaybackMode::StagedSync;
      last_commit = std::max(last_commit, commit.at);
      push(std::move(commit));
    }
    if (program_.mode == PlaybackMode::StagedSync) {
      Event fin;
      fin.kind = Event::Kind::PlaybackCommitAll;
      fin.at = last_commit;
      push(std::move(fin));
    }
    playback_end_ = last_commit;
  }

  void on_commit(const Event& ev) {
    dacs_[ev.dac].set_dac_busy(spi_busy_until_[ev.dac] > ev.at);
    char payload[16];
    std::snprintf(payload, sizeof(payload), "%02X %02X %04X", ev.dac, ev.addr,
                  ev.word);
    try {
      if (ev.staged_write) {
        auto ch = dacs_[ev.dac].map().data_channel(ev.addr);
        dacs_[ev.dac].stage_code(*ch, ev.word);
      } else {
        dacs_[ev.dac].write_register(ev.addr, ev.word);
      }
      ++stats_.commits;
      emit(ev.at, "commit", payload);
      refresh_device(ev.dac, ev.at);
    } catch (const Error& e) {
      ++stats_.write_errors;
      emit(ev.at, "err", err_hex(e.code()));
    }
  }

  void on_read(const Event& ev) {
    dacs_[ev.dac].set_dac_busy(spi_busy_until_[ev.dac] > ev.at);
    Response resp;
    resp.addr = ev.addr;
    resp.dac_index = static_cast<std::uint8_t>(ev.dac);
    try {
      resp.data = dacs_[ev.dac].read_register(ev.addr);
    } catch (const Error&) {
      resp.error = true;
      ++stats_.read_errors;
    }
    responses_.push_back(resp);
    char payload[20];
    std::snprintf(payload, sizeof(payload), "%02X %02X %04X %02X", ev.dac,
                  ev.addr, resp.data, resp.error ? 1 : 0);
    emit(ev.at, "resp", payload);
  }

  void on_playback_commit_all(const Event& ev) {
    dacs_[0].commit_trigger();
    dacs_[1].commit_trigger();
    refresh_device(0, ev.at);
    refresh_device(1, ev.at);
    emit(ev.at, "commitall", "00");
  }

  void on_probe(const Event& ev) {
    int g = ev.channel;
    advance_to(g, ev.at);
    auto& ch = channels_[g];
    char head[8];
    std::snprintf(head, sizeof(head), "%02X ", g);
    if (!ch.active) {
      emit(ev.at, "probe", std::string(head) + "00 0000000000000000");
      return;
    }
    const auto& params = cfg_.analog[g / kChannelCount];
    double dt_s = static_cast<double>(ev.dt_ticks) * tick_s();
    double v = ev.dt_ticks == 0
                   ? ch.state.out + params.offset.volts
                   : probe_sample(ch.state, params, dt_s, &rng_);
    emit(ev.at, "probe", std::string(head) + "01 " + voltage_bits_hex(v));
  }

  void advance_to(int g, std::uint64_t t) {
    auto& ch = channels_[g];
    if (t <= ch.last_tick) return;
    if (ch.active) {
      double dt = static_cast<double>(t - ch.last_tick) * tick_s();
      ch.state = advance_channel(ch.state, cfg_.analog[g / kChannelCount], dt);
    }
    ch.last_tick = t;
  }

  // Re-derive analog targets from the register file after any commit.
  void refresh_device(int d, std::uint64_t t) {
    const auto& file = dacs_[d];
    const auto& params = cfg_.analog[d];
    for (int i = 0; i < kChannelCount; ++i) {
      int g = d * kChannelCount + i;
      auto out = file.output(i);
      auto& ch = channels_[g];
      if (out.kind == ChannelOutput::Kind::HighImpedance) {
        if (ch.active) {
          advance_to(g, t);
          ch.active = false;
        }
        continue;
      }
      double target = quantized_target(out.code, OutputRange::from_code(out.range),
                                       cfg_.convention, params);
      if (!ch.active) {
        advance_to(g, t);
        ch.active = true;
        ch.state.target = target;
        // The drive resumes from wherever the output floated.
        ch.state.pre_filter = ch.state.out;
      } else if (target != ch.state.target) {
        advance_to(g, t);
        ch.state.target = target;
      }
    }
  }

  static std::string err_hex(Err code) {
    char buf[8];
    std::snprintf(buf, sizeof(buf), "%02X", static_cast<int>(code));
    return buf;
  }

  SimConfig cfg_;
  detail::Xoshiro256pp rng_;
  std::array<DacRegisterFile, 2> dacs_{DacRegisterFile(), DacRegisterFile()};
  std::array<ChannelSim, 2 * kChannelCount> channels_{};
  Parser parser_;
  std::priority_queue<Event, std::vector<Event>, std::greater<Event>> queue_;
  std::uint64_t next_seq_ = 0;
  std::uint64_t now_ = 0;
  std::array<std::uint64_t, 2> spi_busy_until_{0, 0};
  std::vector<TraceRecord> trace_;
  std::vector<Response> responses_;
  SimStats stats_;

  WaveformProgram program_;
  bool program_loaded_ = false;
  bool playback_started_ = false;
  std::uint64_t playback_end_ = 0;
  std::vector<std::uint16_t> staging_;
  PlaybackMode staging_mode_ = PlaybackMode::PerStepAsync;
  bool staging_active_ = false;
};

// Recorded stimulus. Applying the same log to two simulators with equal
// configuration yields byte-identical traces.
struct InputEvent {
  std::uint64_t at_tick = 0;
  enum class Kind { Uart, Trigger, Probe } kind = Kind::Trigger;
  std::vector<std::uint8_t> bytes;
  int channel = 0;
  std::uint64_t dt_ticks = 0;
};

inline std::string input_log_to_text(const std::vector<InputEvent>& events) {
  std::string out;
  char buf[48];
  for (const auto& ev : events) {
    std::snprintf(buf, sizeof(buf), "%llu ",
                  static_cast<unsigned long long>(ev.at_tick));
    out += buf;
    switch (ev.kind) {
      case InputEvent::Kind::Uart:
        out += "uart";
        for (auto b : ev.bytes) {
          std::snprintf(buf, sizeof(buf), " %02X", b);
          out += buf;
        }
        break;
      case InputEvent::Kind::Trigger:
        out += "trigger";
        break;
      case InputEvent::Kind::Probe:
        std::snprintf(buf, sizeof(buf), "probe %02X %llu", ev.channel,
                      static_cast<unsigned long long>(ev.dt_ticks));
        out += buf;
        break;
    }
    out += "\n";
  }
  return out;
}

inline std::vector<InputEvent> parse_input_log(const std::string& text) {
  std::vector<InputEvent> events;
  std::istringstream lines(text);
  std::string line;
  while (std::getline(lines, line)) {
    if (line.empty()) continue;
    std::istringstream in(line);
    InputEvent ev;
    std::string kind;
    unsigned long long at = 0;
    if (!(in >> at >> kind))
      throw Error(Err::InvalidField, "malformed input log line");
    ev.at_tick = at;
    if (kind == "uart") {
      ev.kind = InputEvent::Kind::Uart;
      unsigned b = 0;
      while (in >> std::hex >> b) ev.bytes.push_back(static_cast<std::uint8_t>(b));
      if (ev.bytes.empty())
        throw Error(Err::InvalidField, "uart input line carries no bytes");
    } else if (kind == "trigger") {
      ev.kind = InputEvent::Kind::Trigger;
    } else if (kind == "probe") {
      ev.kind = InputEvent::Kind::Probe;
      unsigned ch = 0;
      unsigned long long dt = 0;
      if (!(in >> std::hex >> ch >> std::dec >> dt))
        throw Error(Err::InvalidField, "malformed probe input line");
      ev.channel = static_cast<int>(ch);
      ev.dt_ticks = dt;
    } else {
      throw Error(Err::InvalidField, "unknown input event kind");
    }
    events.push_back(std::move(ev));
  }
  return events;
}

inline void apply_inputs(SomSimulator& sim, const std::vector<InputEvent>& events) {
  for (const auto& ev : events) {
    switch (ev.kind) {
      case InputEvent::Kind::Uart:
        sim.ingest_uart(ev.at_tick, ev.bytes);
        break;
      case InputEvent::Kind::Trigger:
        sim.pulse_trigger(ev.at_tick);
        break;
      case InputEvent::Kind::Probe:
        sim.add_probe(ev.at_tick, ev.channel, ev.dt_ticks);
        break;
    }
  }
}

}  // namespace vanguard
