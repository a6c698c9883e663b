// SPDX-License-Identifier: Apache-2.0
//
// Localization image from per-antenna LoS values, sub-grid peak refinement
// and RMSE scoring.

#pragma once

#include <span>

#include "phasecal/saf.hpp"
#include "phasecal/types.hpp"

namespace phasecal {

/// |sum_n los_n exp(+j 2 pi f_c d_n(x, y) / c)|^2 over the grid (carrier only).
/// Throws ShapeMismatch unless los has one entry per antenna.
SafMap localization_image(const Eigen::VectorXcd& los, const SystemConfig& config,
                          const ArrayGeometry& geometry, const SpatialGrid& grid,
                          double mainlobe_radius = kDefaultMainlobeRadius);

/// Three-point parabola in log power through the peak cell, separately
/// along x and y, offset clamped to +-step/2. A peak on the grid boundary
/// returns the raw cell.
Position refine_peak(const SafMap& image);

/// Root mean square of per-capture errors. Throws EmptyInput.
double score(std::span<const double> errors);

struct LocalizationResult {
  SafMap image;
  Position estimate;
  UeLocation ground_truth;
  double error = 0.0;  ///< m
  double pmsr_db = 0.0;
};

/// Image, refined estimate and error against `truth`.
LocalizationResult localize(const Eigen::VectorXcd& los, const SystemConfig& config,
                            const ArrayGeometry& geometry, const SpatialGrid& grid,
                            const UeLocation& truth,
                            double mainlobe_radius = kDefaultMainlobeRadius);

}  // namespace phasecal
