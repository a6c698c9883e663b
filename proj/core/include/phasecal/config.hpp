// SPDX-License-Identifier: Apache-2.0
//
// Experiment configuration: a flat JSON object whose keys mirror the system,
// offset, grid and sweep parameters. Unknown keys are rejected.

#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "phasecal/saf.hpp"
#include "phasecal/types.hpp"

namespace phasecal {

struct ExperimentConfig {
  SystemConfig system = default_system();

  double freq_offset_mean = 0.0;
  double freq_offset_std = kPi / 4.0;
  double spatial_offset_half_width = kPi;

  UeLocation ue{-2.0, 1.0};
  std::uint64_t seed = 1;

  SpatialGrid grid;
  double mainlobe_radius = kDefaultMainlobeRadius;
  int range_oversampling = 8;

  /// SNR at which the CRLB sweep is evaluated (separate from system.snr_db).
  double crlb_snr_db = 6.0;
  std::vector<double> crlb_sigmas;
  std::vector<int> crlb_antenna_counts{8, 16, 23, 32, 64};

  std::vector<double> pmsr_sigmas;
  std::vector<std::uint64_t> pmsr_seeds;

  bool saf_ideal = true;
  std::vector<double> saf_frequency_sigmas{kPi / 4.0};
  std::vector<double> saf_spatial_sigmas{kPi / 4.0};

  std::string out_dir = "out";
  std::string csi_path;    ///< empty: <out_dir>/capture.csib
  std::string truth_path;  ///< empty: <out_dir>/truth.json

  ExperimentConfig();

  static SystemConfig default_system();

  OffsetSpec offset_spec() const;
  ArrayGeometry geometry() const;
  std::filesystem::path resolved_csi_path() const;
  std::filesystem::path resolved_truth_path() const;

  /// Throws InvalidArgument on out-of-range values.
  void validate() const;
};

/// Parses a JSON object on top of the defaults. Throws InvalidArgument for
/// unknown keys, wrong types and malformed text.
ExperimentConfig parse_config(const std::string& json_text);

/// Defaults, then the file (if any), then each "key=value" override in order.
/// A value that is not valid JSON is taken as a string.
ExperimentConfig load_config(const std::optional<std::filesystem::path>& path,
                             std::span<const std::string> overrides);

/// Compact JSON with sorted keys; parse_config(to_json(c)) reproduces c.
std::string to_json(const ExperimentConfig& config);

}  // namespace phasecal
