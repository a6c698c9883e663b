// SPDX-License-Identifier: Apache-2.0
//
// Ideal and phase-impaired OFDM array signal model:
//   r_nk  = alpha_n exp(-j 2 pi f_k d_n / c) + w_nk
//   r~_nk = alpha_n exp(-j 2 pi f_k d_n / c) exp(j phi^f_nk) exp(j phi^a_n) + w_nk
// with f_k = f_c + k * delta_f for k = 1..K.

#pragma once

#include <cstdint>
#include <functional>
#include <optional>
#include <span>
#include <vector>

#include "phasecal/types.hpp"

namespace phasecal {

/// d_n for every antenna. Throws CoincidentLocation if any d_n == 0.
Eigen::VectorXd distances(const ArrayGeometry& geometry, const UeLocation& loc);

/// f_k = f_c + delta_f * k, k = 1..K.
Eigen::VectorXd subcarrier_frequencies(const SystemConfig& config);

/// alpha_n for the configured amplitude model.
Eigen::VectorXd amplitudes(const SystemConfig& config, const Eigen::VectorXd& distances);

/// Noiseless N x K snapshot alpha_n exp(-j 2 pi f_k d_n / c).
Snapshot ideal_snapshot(const SystemConfig& config, const ArrayGeometry& geometry,
                        const UeLocation& loc);

/// Streams a capture one (n, k) lane at a time.
///
/// Each lane holds the L symbols of r~_nk(l) = mu_nk exp(j(phi^f_nk + phi^a_n)) + w_nk(l).
/// Noise for antenna n comes from Substream(seed, kNoise, n), consumed in
/// (k, l) order, so a lane sequence is reproducible without holding the
/// whole tensor in memory.
class CaptureSynthesizer {
 public:
  using LaneFn = std::function<void(int n, int k, std::span<const cdouble> lane)>;

  CaptureSynthesizer(const SystemConfig& config, const ArrayGeometry& geometry,
                     const UeLocation& loc, std::optional<OffsetRealization> offsets,
                     std::uint64_t seed);

  /// Visits all lanes in file order (n-major, k-minor).
  void for_each_lane(const LaneFn& fn) const;

 private:
  SystemConfig config_;
  Snapshot mean_;
  double noise_variance_;
  std::uint64_t seed_;
};

/// Noiseless-plus-noise capture per the ideal model (no offsets).
CsiTensor synthesize_ideal(const SystemConfig& config, const ArrayGeometry& geometry,
                           const UeLocation& loc, std::uint64_t seed);

/// Phase-impaired capture; offsets multiply the signal only, noise is added after.
CsiTensor synthesize_impaired(const SystemConfig& config, const ArrayGeometry& geometry,
                              const UeLocation& loc, const OffsetRealization& offsets,
                              std::uint64_t seed);

/// Draws an N x K frequency table and an N spatial vector. phi_f comes from
/// Substream(seed, kFrequencyOffsets) in (n, k) order and phi_a from
/// Substream(seed, kSpatialOffsets) in n order.
OffsetRealization sample_offsets(const OffsetSpec& spec, int num_antennas, int num_subcarriers);

/// Multiplies every entry by exp(j(phi^f_nk + phi^a_n)). Throws ShapeMismatch.
CsiTensor apply_offsets(const CsiTensor& csi, const OffsetRealization& offsets);

struct OffsetStatistics {
  double mean = 0.0;
  double stddev = 0.0;  ///< population convention (divides by the count)
  double min = 0.0;
  double max = 0.0;
  std::vector<double> bin_edges;  ///< bins + 1 edges spanning [min, max]
  std::vector<std::size_t> counts;
};

/// Summary and equal-width histogram of a table of phases. A constant table
/// puts every sample in the first bin. Throws EmptyInput.
OffsetStatistics offset_statistics(std::span<const double> values, int bins = 32);

}  // namespace phasecal
