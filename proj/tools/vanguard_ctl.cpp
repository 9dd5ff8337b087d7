// Characterization harness CLI. Runs one measurement campaign against the
// behavioral simulator or a serial-attached module and writes the record to
// stdout or a file.
//
// Exit codes: 0 success, 2 campaign or usage error, 3 backend error.

#include <fstream>
#include <iostream>
#include <memory>
#include <string>

#include <CLI11.hpp>

#include "vanguard/vanguard.hpp"

namespace {

bool is_backend_error(vanguard::Err code) {
  return code == vanguard::Err::PortUnavailable ||
         code == vanguard::Err::Timeout ||
         code == vanguard::Err::BackendUnavailable;
}

void write_output(const std::string& path, const std::string& body) {
  if (path == "-") {
    std::cout << body;
    return;
  }
  std::ofstream out(path, std::ios::binary);
  if (!out) throw vanguard::Error(vanguard::Err::ConfigError,
                                  "cannot open output file " + path);
  out << body;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"electrode-module characterization harness"};
  app.require_subcommand(1);
  app.fallthrough();

  std::string backend_name = "sim";
  std::string port;
  unsigned baud = 115200;
  std::uint64_t seed = 0;
  std::string config_path;
  std::string out_path = "-";

  app.add_option("--backend", backend_name, "backend: sim or serial")
      ->check(CLI::IsMember({"sim", "serial"}))
      ->capture_default_str();
  app.add_option("--port", port, "serial device path (serial backend)");
  auto* baud_opt = app.add_option("--baud", baud, "serial baud rate");
  auto* seed_opt = app.add_option("--seed", seed, "campaign RNG seed");
  app.add_option("--config", config_path, "campaign config file")
      ->check(CLI::ExistingFile);
  app.add_option("--out", out_path, "output file, - for stdout")
      ->capture_default_str();

  app.add_subcommand("sweep", "static voltage sweep over channels and codes");
  app.add_subcommand("staircase", "single-LSB staircase and inter-device offset");
  app.add_subcommand("psd", "noise power spectral density estimate");
  app.add_subcommand("transient", "step transient, slew, adjacent-channel watch");
  app.add_subcommand("noise-budget", "Johnson noise density and rms table");
  app.add_subcommand("throughput", "link update-rate table and bottleneck");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    int rc = app.exit(e);
    return rc == 0 ? 0 : 2;
  }

  try {
    vanguard::CampaignConfig cfg;
    if (!config_path.empty()) cfg = vanguard::load_config_file(config_path, cfg);
    if (seed_opt->count() > 0) cfg.sim.seed = seed;
    if (baud_opt->count() > 0) cfg.sim.baud = baud;

    const std::string campaign = app.get_subcommands().front()->get_name();

    // Table campaigns derive everything from the config; no module needed.
    if (campaign == "noise-budget") {
      write_output(out_path, vanguard::run_noise_budget(cfg));
      return 0;
    }
    if (campaign == "throughput") {
      write_output(out_path, vanguard::run_throughput(cfg));
      return 0;
    }

    std::unique_ptr<vanguard::Backend> backend;
    if (backend_name == "serial") {
      if (port.empty())
        throw vanguard::Error(vanguard::Err::PortUnavailable,
                              "serial backend needs --port");
      vanguard::SerialConfig scfg;
      scfg.port = port;
      scfg.baud = baud;
      backend = std::make_unique<vanguard::SerialBackend>(scfg);
    } else {
      backend = std::make_unique<vanguard::SimBackend>(cfg);
    }

    std::string body;
    if (campaign == "sweep") body = vanguard::run_sweep(*backend, cfg);
    else if (campaign == "staircase") body = vanguard::run_staircase(*backend, cfg);
    else if (campaign == "psd") body = vanguard::run_psd(*backend, cfg);
    else body = vanguard::run_transient(*backend, cfg);
    write_output(out_path, body);
    return 0;
  } catch (const vanguard::Error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return is_backend_error(e.code()) ? 3 : 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  }
}
