#include "vanguard/harness.hpp"

#include <catch2/catch_amalgamated.hpp>
#include <sstream>

using namespace vanguard;

namespace {

// Splits CSV body rows, skipping # comment lines and the column header.
std::vector<std::vector<std::string>> csv_rows(const std::string& text) {
  std::vector<std::vector<std::string>> rows;
  std::istringstream in(text);
  std::string line;
  bool header_seen = false;
  while (std::getline(in, line)) {
    if (line.empty() || line[0] == '#') continue;
    if (!header_seen) {
      header_seen = true;
      continue;
    }
    std::vector<std::string> cells;
    std::istringstream cs(line);
    std::string cell;
    while (std::getline(cs, cell, ',')) cells.push_back(cell);
    rows.push_back(std::move(cells));
  }
  return rows;
}

double cell_d(const std::vector<std::string>& row, std::size_t i) {
  return std::stod(row.at(i));
}

// Scripted serial endpoint: records writes, plays back queued reads.
class ScriptedChannel : public ByteChannel {
 public:
  void write(std::span<const std::uint8_t> bytes) override {
    written.insert(written.end(), bytes.begin(), bytes.end());
  }
  std::vector<std::uint8_t> read(std::size_t max_bytes, int timeout_ms) override {
    if (rx.empty()) {
      if (timeout_ms > 0) throw Error(Err::Timeout, "scripted channel empty");
      return {};
    }
    std::size_t n = std::min(max_bytes, rx.size());
    std::vector<std::uint8_t> out(rx.begin(), rx.begin() + static_cast<std::ptrdiff_t>(n));
    rx.erase(rx.begin(), rx.begin() + static_cast<std::ptrdiff_t>(n));
    return out;
  }
  std::vector<std::uint8_t> written;
  std::vector<std::uint8_t> rx;
};

}  // namespace

TEST_CASE("sweep on the ideal twin recovers the decoded voltage exactly") {
  CampaignConfig cfg;
  cfg.sweep_band_v = 0.0;
  cfg.sim.analog[1].offset = DeviceOffset{1.07e-3};
  SimBackend b(cfg);
  auto csv = run_sweep(b, cfg);

  auto rows = csv_rows(csv);
  REQUIRE(rows.size() == cfg.sweep_channels.size() * cfg.sweep_codes.size());
  for (const auto& row : rows) {
    int ch = std::stoi(row[0]);
    double offset = ch >= kChannelCount ? 1.07e-3 : 0.0;
    double dv = cell_d(row, 6);
    CHECK(dv == offset);
    CHECK(cell_d(row, 3) == cell_d(row, 4));
    CHECK(cell_d(row, 3) == cell_d(row, 5));
  }
  CHECK(csv.rfind("# vanguard-csv v1 campaign=sweep seed=0", 0) == 0);
}

TEST_CASE("sweep jitter stays inside the configured band") {
  CampaignConfig cfg;
  cfg.sweep_window = 500;
  cfg.sweep_channels = {0, 20};
  cfg.sweep_codes = {0x0000, 0xFFFF};
  cfg.sim.seed = 7;
  SimBackend b(cfg);
  auto csv = run_sweep(b, cfg);
  for (const auto& row : csv_rows(csv)) {
    double v_target = cell_d(row, 2);
    double v_measured = cell_d(row, 3);
    double v_min = cell_d(row, 4);
    double v_max = cell_d(row, 5);
    CHECK(v_min <= v_measured);
    CHECK(v_measured <= v_max);
    CHECK(std::abs(v_measured - v_target) <= cfg.sweep_band_v);
    CHECK(v_max - v_min <= 2 * cfg.sweep_band_v);
    CHECK(v_max - v_min > 0.0);
  }

  // Same seed, fresh backend: byte-identical output.
  SimBackend b2(cfg);
  CHECK(run_sweep(b2, cfg) == csv);

  cfg.sim.seed = 8;
  SimBackend b3(cfg);
  CHECK(run_sweep(b3, cfg) != csv);
}

TEST_CASE("staircase increments and inter-device offset") {
  CampaignConfig cfg;
  cfg.stair_lo = 0x7F00;
  cfg.stair_hi = 0x7F40;
  cfg.sim.analog[1].offset = DeviceOffset{1.07e-3};
  SimBackend b(cfg);
  auto j = nlohmann::json::parse(run_staircase(b, cfg));

  CHECK(j["schema"] == "vanguard-json v1");
  double lsb = j["lsb_ideal_v"];
  CHECK(lsb == lsb_size(OutputRange::from_code(RangeCode::B10),
                        MappingConvention::EndpointInclusive));
  auto inc = j["increments_v"].get<std::vector<double>>();
  REQUIRE(inc.size() == 0x40);
  for (double x : inc) CHECK(std::abs(x - lsb) < 1e-12);
  CHECK(std::abs(double(j["mean_increment_v"]) - lsb) < 1e-12);
  CHECK(double(j["sigma_increment_v"]) < 1e-12);
  CHECK(std::abs(double(j["inter_device_offset_v"]) - 1.07e-3) < 1e-9);
}

TEST_CASE("staircase with half-LSB differential nonlinearity") {
  CampaignConfig cfg;
  cfg.stair_lo = 0x7C00;
  cfg.stair_hi = 0x8000;
  cfg.stair_pair = false;
  cfg.sim.analog[0].dnl_halflsb = true;
  cfg.sim.analog[0].dnl_seed = 2024;
  SimBackend b(cfg);
  auto j = nlohmann::json::parse(run_staircase(b, cfg));

  double lsb = j["lsb_ideal_v"];
  auto inc = j["increments_v"].get<std::vector<double>>();
  REQUIRE(inc.size() == 1024);
  for (double x : inc) {
    CHECK(x >= lsb / 2);
    CHECK(x <= 1.5 * lsb);
  }
  CHECK(std::abs(double(j["mean_increment_v"]) - lsb) < 0.01 * lsb);
  CHECK(double(j["sigma_increment_v"]) > 0.0);
  CHECK(j["inter_device_offset_v"].is_null());
  CHECK(j["pair_channel"].is_null());
}

TEST_CASE("staircase precondition") {
  CampaignConfig cfg;
  cfg.stair_lo = 0x1000;
  cfg.stair_hi = 0x1000;
  SimBackend b(cfg);
  CHECK_THROWS_AS(run_staircase(b, cfg), Error);
}

TEST_CASE("psd campaign recovers a configured white density") {
  CampaignConfig cfg;
  cfg.sim.analog[0].noise_density = 1e-6;
  cfg.psd_duration_s = 2.0;
  SimBackend b(cfg);
  auto csv = run_psd(b, cfg);
  CHECK(csv.find("realized_rbw_hz=10") != std::string::npos);

  auto rows = csv_rows(csv);
  REQUIRE(rows.size() > 1000);
  double sum = 0.0;
  int n = 0;
  for (const auto& row : rows) {
    double f = cell_d(row, 0);
    if (f >= 100.0 && f < 10000.0) {
      sum += cell_d(row, 1);
      ++n;
    }
  }
  double mean = sum / n;
  CHECK(std::abs(mean - 1e-12) < 0.1e-12);
}

TEST_CASE("psd campaign with noise off sits on the numerical floor") {
  CampaignConfig cfg;
  cfg.psd_duration_s = 1.0;
  SimBackend b(cfg);
  auto rows = csv_rows(run_psd(b, cfg));
  REQUIRE(!rows.empty());
  for (const auto& row : rows) CHECK(cell_d(row, 1) < 1e-25);
}

TEST_CASE("transient campaign reports slew and a silent neighbor") {
  CampaignConfig cfg;
  SimBackend b(cfg);
  auto csv = run_transient(b, cfg);

  auto pos = csv.find("slew_v_per_us=");
  REQUIRE(pos != std::string::npos);
  double slew = std::stod(csv.substr(pos + 14));
  CHECK(slew > 1.6);
  CHECK(slew < 2.1);
  CHECK(csv.find("hil_reference_v_per_us=1.76") != std::string::npos);
  auto dev_pos = csv.find("monitor_max_dev_v=");
  REQUIRE(dev_pos != std::string::npos);
  CHECK(std::stod(csv.substr(dev_pos + 18)) == 0.0);

  auto rows = csv_rows(csv);
  REQUIRE(rows.size() > 1000);
  CHECK(cell_d(rows.front(), 1) == -10.0);
  CHECK(std::abs(cell_d(rows.back(), 1) - 10.0) < 1e-3);

  // Reversed step: equal magnitude slew by symmetry.
  CampaignConfig rev = cfg;
  rev.tr_from = 0xFFFF;
  rev.tr_to = 0x0000;
  SimBackend b2(rev);
  auto csv2 = run_transient(b2, rev);
  auto pos2 = csv2.find("slew_v_per_us=");
  REQUIRE(pos2 != std::string::npos);
  CHECK(std::stod(csv2.substr(pos2 + 14)) == slew);
}

TEST_CASE("noise budget table") {
  CampaignConfig cfg;
  cfg.nb_r_ohms = {1.0, 0.0};
  auto j = nlohmann::json::parse(run_noise_budget(cfg));
  auto rows = j["rows"];
  REQUIRE(rows.size() == 2);
  double d = rows[0]["density_v_rthz"];
  CHECK(std::abs(d - 0.1287e-9) < 0.005 * 0.1287e-9);
  CHECK(double(rows[0]["rms_v"]) == d * std::sqrt(1000.0));
  CHECK(double(rows[1]["density_v_rthz"]) == 0.0);

  cfg.nb_r_ohms = {};
  auto empty = nlohmann::json::parse(run_noise_budget(cfg));
  CHECK(empty["rows"].empty());
}

TEST_CASE("throughput table flags the filter as the bottleneck") {
  CampaignConfig cfg;
  auto j = nlohmann::json::parse(run_throughput(cfg));
  CHECK(double(j["filter_cutoff_hz"]) == 48220.0);
  auto rows = j["rows"];
  REQUIRE(rows.size() == 4);

  CHECK(double(rows[0]["sclk_hz"]) == 10e6);
  CHECK(rows[0]["mode"] == "individual");
  CHECK(std::uint64_t(rows[0]["updates_per_s"]) == 416666);
  CHECK(rows[0]["bottleneck"] == "filter");

  CHECK(rows[1]["mode"] == "streaming");
  CHECK(std::abs(double(rows[1]["rate_hz"]) - 10e6 * 16 / 264) < 1e-6);

  CHECK(double(rows[2]["sclk_hz"]) == 50e6);
  CHECK(std::uint64_t(rows[2]["updates_per_s"]) == 2083333);

  cfg.tp_sclk_hz = {};
  auto empty = nlohmann::json::parse(run_throughput(cfg));
  CHECK(empty["rows"].empty());
}

TEST_CASE("ramp playback through the backend lands on the exact endpoint") {
  CampaignConfig cfg;
  SimBackend b(cfg);
  configure_baseline(b, cfg.sim.map);

  RampSpec spec;
  spec.channel = 0;
  spec.v_start = -1.0;
  spec.v_end = 1.0;
  spec.duration_s = 1e-3;
  spec.n_points = 11;
  auto range = OutputRange::from_code(RangeCode::B10);
  auto prog = generate_ramp(spec, range, cfg.sim.convention, cfg.sim.link,
                            cfg.sim.map);
  upload_program(b, prog);
  b.trigger_edge();
  b.settle(5e-3);

  auto end_code = voltage_to_code(1.0, range, cfg.sim.convention);
  CHECK(b.sample(0, 0.0) == code_to_voltage(end_code, range, cfg.sim.convention));
  CHECK(b.sim().stats().commits >= 10 + 11);
}

TEST_CASE("serial backend emits stimulus and a fill-in template") {
  CampaignConfig cfg;
  cfg.sweep_channels = {0};
  cfg.sweep_codes = {0x1234};
  auto channel = std::make_unique<ScriptedChannel>();
  auto* raw = channel.get();
  SerialBackend b(std::move(channel), false);

  auto csv = run_sweep(b, cfg);
  auto rows = csv_rows(csv);
  REQUIRE(rows.size() == 1);
  CHECK(rows[0][3] == "nan");
  // Baseline (10 packets) plus the code write reached the wire.
  CHECK(raw->written.size() == 11 * kUartPacketLen);

  auto pj = nlohmann::json::parse(run_staircase(b, cfg));
  CHECK(pj["mean_increment_v"].is_null());

  auto psd = run_psd(b, cfg);
  CHECK(psd.find("hil=fill-in") != std::string::npos);
  auto tr = run_transient(b, cfg);
  CHECK(tr.find("slew_v_per_us=nan") != std::string::npos);
}

TEST_CASE("serial backend round-trips a scripted register read") {
  auto channel = std::make_unique<ScriptedChannel>();
  auto* raw = channel.get();
  Response r;
  r.addr = 0x01;
  r.data = 0x29C0;
  r.dac_index = 0;
  auto bytes = encode_response(r);
  raw->rx.assign(bytes.begin(), bytes.end());

  SerialBackend b(std::move(channel), false);
  CHECK(b.read_reg(0, 0x01) == 0x29C0);
  CHECK(raw->written.size() == kUartPacketLen);

  // Nothing more scripted: the next read times out.
  CHECK_THROWS_AS(b.read_reg(0, 0x01), Error);
}
