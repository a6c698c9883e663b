// SPDX-License-Identifier: Apache-2.0
//
// Spatial ambiguity function (matched filter of a snapshot against the
// hypothesised response of every grid point), peak-to-median-sidelobe ratio
// and cuts through the peak.

#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "phasecal/crlb.hpp"
#include "phasecal/types.hpp"

namespace phasecal {

inline constexpr double kDefaultMainlobeRadius = 0.5;  // m

/// Regular evaluation grid, x(i) = x_min + i * step for i < nx() (same for y).
struct SpatialGrid {
  double x_min = -5.0;
  double x_max = 5.0;
  double y_min = 0.5;
  double y_max = 8.0;
  double step = 0.02;

  int nx() const;
  int ny() const;
  double x(int i) const { return x_min + i * step; }
  double y(int i) const { return y_min + i * step; }

  /// step > 0, x_max > x_min, y_max > y_min, all finite.
  void validate() const;
  /// Same as validate(), plus no grid node may sit on an antenna.
  void validate(const ArrayGeometry& geometry) const;
};

struct SafMap {
  SpatialGrid grid;
  Eigen::MatrixXd power;  ///< nx x ny, linear power
  int peak_ix = 0;
  int peak_iy = 0;
  Position peak_cell;      ///< coordinates of the peak cell
  Position peak_location;  ///< sub-grid refined peak (see refine_peak)
  double peak_power = 0.0;
  double mainlobe_radius = kDefaultMainlobeRadius;
  double pmsr_db = 0.0;  ///< NaN when fewer than two cells lie outside the mainlobe
};

/// Wraps a power array: locates the peak (ties resolve to the smallest
/// (ix, iy)), refines it and computes the PMSR for `mainlobe_radius`.
SafMap make_saf_map(const SpatialGrid& grid, Eigen::MatrixXd power, double mainlobe_radius);

/// |sum_n sum_k s_nk exp(+j 2 pi f_k d_n(x, y) / c)|^2 at every grid point.
/// For the noiseless ideal snapshot this is the ambiguity function of the
/// true location, with (NK)^2 at that location for unit amplitudes.
SafMap saf_from_csi(const Snapshot& snapshot, const SystemConfig& config,
                    const ArrayGeometry& geometry, const SpatialGrid& grid,
                    double mainlobe_radius = kDefaultMainlobeRadius);

/// Ambiguity function of the noiseless (optionally offset) model signal.
SafMap saf_model(const SystemConfig& config, const ArrayGeometry& geometry,
                 const UeLocation& true_loc, const SpatialGrid& grid,
                 double mainlobe_radius = kDefaultMainlobeRadius);
SafMap saf_model(const SystemConfig& config, const ArrayGeometry& geometry,
                 const UeLocation& true_loc, const OffsetRealization& offsets,
                 const SpatialGrid& grid, double mainlobe_radius = kDefaultMainlobeRadius);

/// sum_{k=1..K} exp(j theta k) in closed form,
/// exp(j theta (K+1)/2) sin(K theta / 2) / sin(theta / 2).
cdouble dirichlet_sum(double theta, int num_terms);

/// Same map as saf_model when no offset varies with k: the subcarrier sum
/// collapses to dirichlet_sum, so each cell costs O(N) instead of O(NK).
/// `spatial_offsets` is empty (ideal) or holds N per-antenna phases.
SafMap saf_fast_path(const SystemConfig& config, const ArrayGeometry& geometry,
                     const UeLocation& true_loc, std::span<const double> spatial_offsets,
                     const SpatialGrid& grid, double mainlobe_radius = kDefaultMainlobeRadius);

/// Overload for a full realization. Throws PreconditionViolation if any
/// antenna's frequency offsets vary across k; a constant row is folded into
/// that antenna's phase.
SafMap saf_fast_path(const SystemConfig& config, const ArrayGeometry& geometry,
                     const UeLocation& true_loc, const OffsetRealization& offsets,
                     const SpatialGrid& grid, double mainlobe_radius = kDefaultMainlobeRadius);

/// Lower-middle element for even counts. Throws EmptyInput.
double median_lower(std::vector<double> values);

/// 10 log10(peak / median power over the cells farther than
/// `mainlobe_radius` from the peak cell). Throws EmptyInput when fewer than
/// two cells remain and NumericalFailure when that median is zero.
double pmsr(const SafMap& map, double mainlobe_radius);

struct Cut {
  std::vector<double> coord;     ///< m
  std::vector<double> power_db;  ///< relative to the peak (0 dB), floored at -300 dB
};

struct SafCuts {
  Cut x;  ///< varies x at the peak's y
  Cut y;  ///< varies y at the peak's x
};

SafCuts cuts(const SafMap& map);

struct PmsrSweepRow {
  NuisanceKind kind = NuisanceKind::kFrequency;
  double sigma = 0.0;
  std::uint64_t seed = 0;
  double pmsr_db = 0.0;
};

struct PmsrMedianRow {
  NuisanceKind kind = NuisanceKind::kFrequency;
  double sigma = 0.0;
  double median_pmsr_db = 0.0;
};

struct PmsrSweepResult {
  std::vector<PmsrSweepRow> rows;       ///< sigma-major, seed-minor
  std::vector<PmsrMedianRow> medians;   ///< one per sigma
};

/// PMSR of the model map for every (sigma, seed). Frequency kind draws
/// phi_f ~ N(0, sigma^2); spatial kind draws phi_a ~ U(-sqrt(3) sigma, sqrt(3) sigma)
/// and evaluates through the fast path.
PmsrSweepResult pmsr_sweep(const SystemConfig& config, const ArrayGeometry& geometry,
                           const UeLocation& true_loc, NuisanceKind kind,
                           std::span<const double> sigmas, std::span<const std::uint64_t> seeds,
                           const SpatialGrid& grid,
                           double mainlobe_radius = kDefaultMainlobeRadius);

}  // namespace phasecal
