// SPDX-License-Identifier: Apache-2.0
//
// phasecal: experiment runner front end.
// Exit codes: 0 success, 1 usage error, 2 data error, 3 numerical failure.

#include <cstdint>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "phasecal/config.hpp"
#include "phasecal/errors.hpp"
#include "phasecal/runners.hpp"

namespace {

int exit_code(phasecal::ErrorKind kind) {
  switch (kind) {
    case phasecal::ErrorKind::kUsage: return 1;
    case phasecal::ErrorKind::kData: return 2;
    case phasecal::ErrorKind::kNumerical: return 3;
  }
  return 1;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Phase-offset CRLB, SAF and calibration experiments"};
  app.require_subcommand(1);

  std::string config_path;
  std::optional<std::uint64_t> seed;
  std::string out_dir;
  std::vector<std::string> overrides;
  app.add_option("--config", config_path, "JSON config file")->check(CLI::ExistingFile);
  app.add_option("--seed", seed, "experiment seed");
  app.add_option("--out-dir", out_dir, "output directory");
  app.add_option("--set", overrides, "override one config key, key=value")->take_all();

  auto* simulate = app.add_subcommand("simulate", "synthesize a capture and its truth sidecar");
  auto* crlb = app.add_subcommand("crlb-sweep", "CRLB versus offset spread");
  auto* saf = app.add_subcommand("saf", "ambiguity maps, cuts and PMSR per scenario");
  auto* pmsr = app.add_subcommand("pmsr-sweep", "PMSR versus offset spread over seeds");
  auto* calibrate = app.add_subcommand("calibrate-localize",
                                       "calibrate a capture and localize at three stages");
  auto* inspect = app.add_subcommand("inspect", "print a capture header and payload stats");
  std::string inspect_path;
  inspect->add_option("file", inspect_path, "CSIB file (defaults to the configured capture)");
  for (auto* sub : {simulate, crlb, saf, pmsr, calibrate, inspect}) sub->fallthrough();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? 0 : 1;
  }

  try {
    if (seed) overrides.push_back("seed=" + std::to_string(*seed));
    if (!out_dir.empty()) overrides.push_back("out_dir=\"" + out_dir + "\"");
    if (!inspect_path.empty()) overrides.push_back("csi_path=\"" + inspect_path + "\"");
    const phasecal::ExperimentConfig config = phasecal::load_config(
        config_path.empty() ? std::nullopt : std::optional<std::filesystem::path>(config_path),
        overrides);

    phasecal::OutputList written;
    if (*simulate) written = phasecal::run_simulate(config);
    else if (*crlb) written = phasecal::run_crlb_sweep(config);
    else if (*saf) written = phasecal::run_saf(config);
    else if (*pmsr) written = phasecal::run_pmsr_sweep(config);
    else if (*calibrate) written = phasecal::run_calibrate_localize(config);
    else if (*inspect) phasecal::run_inspect(config, std::cout);

    for (const auto& p : written) std::cout << p.string() << '\n';
    return 0;
  } catch (const phasecal::Error& e) {
    std::cerr << "phasecal: " << e.what() << '\n';
    return exit_code(e.kind());
  } catch (const std::filesystem::filesystem_error& e) {
    std::cerr << "phasecal: " << e.what() << '\n';
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "phasecal: " << e.what() << '\n';
    return 1;
  }
}
