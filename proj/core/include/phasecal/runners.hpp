// SPDX-License-Identifier: Apache-2.0
//
// Experiment runners behind the command-line tool. Each one writes its
// outputs under config.out_dir and returns the paths it wrote. Every CSV
// starts with two comment lines, "# schema: <name>/<version>" and
// "# config: <resolved config JSON>".

#pragma once

#include <filesystem>
#include <ostream>
#include <vector>

#include "phasecal/config.hpp"

namespace phasecal {

using OutputList = std::vector<std::filesystem::path>;

/// capture.csib (or csi_path) plus truth.json (or truth_path) with the UE
/// location, seed, offset spec and the drawn offsets.
OutputList run_simulate(const ExperimentConfig& config);

/// crlb_sweep.csv: kind,N,sigma,rmse_m for both nuisance kinds.
OutputList run_crlb_sweep(const ExperimentConfig& config);

/// saf_<scenario>.csv (x,y,power_db), saf_<scenario>_xcut.csv and _ycut.csv
/// (coord,power_db) per scenario, and saf_report.csv.
OutputList run_saf(const ExperimentConfig& config);

/// pmsr_sweep.csv (kind,sigma,seed,pmsr_db) and pmsr_median.csv
/// (kind,sigma,median_pmsr_db).
OutputList run_pmsr_sweep(const ExperimentConfig& config);

/// phi_f_hat.csv, phi_a_hat.csv, localization.json and image_{uncalibrated,
/// frequency,calibrated}.csv. Throws DataError when the truth sidecar is
/// missing or incomplete.
OutputList run_calibrate_localize(const ExperimentConfig& config);

/// Header fields and payload statistics of the configured CSI file.
void run_inspect(const ExperimentConfig& config, std::ostream& out);

}  // namespace phasecal
