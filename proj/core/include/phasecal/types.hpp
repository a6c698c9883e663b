// SPDX-License-Identifier: Apache-2.0
//
// Domain types shared by every stage: system parameters, array geometry,
// UE location, phase offset models and the CSI tensor.

#pragma once

#include <complex>
#include <cstddef>
#include <cstdint>
#include <numbers>
#include <optional>
#include <span>
#include <vector>

#include <Eigen/Dense>

namespace phasecal {

inline constexpr double kSpeedOfLight = 299792458.0;
inline constexpr double kPi = std::numbers::pi;
inline constexpr double kTwoPi = 2.0 * std::numbers::pi;

using cdouble = std::complex<double>;

/// N x K complex matrix (antenna rows, subcarrier columns).
using Snapshot = Eigen::MatrixXcd;

enum class AmplitudeModel {
  kUnit,             ///< alpha_n = 1
  kInverseDistance,  ///< alpha_n = 1 / d_n
};

/// OFDM / array parameters. Defaults are the 3.5 GHz, 64-antenna testbed.
struct SystemConfig {
  double carrier_frequency = 3.5e9;   // Hz
  double subcarrier_spacing = 180e3;  // Hz
  int num_subcarriers = 100;          // K
  int num_antennas = 64;              // N
  double antenna_spacing = 0.07;      // m
  int num_symbols = 1;                // L
  /// SNR per antenna-subcarrier-symbol sample. std::nullopt means noiseless.
  std::optional<double> snr_db = 20.0;
  AmplitudeModel amplitude_model = AmplitudeModel::kUnit;

  static constexpr double speed_of_light = kSpeedOfLight;

  /// Throws InvalidArgument unless K >= 1, N >= 2, L >= 1 and all
  /// frequencies/spacings are strictly positive and finite.
  void validate() const;

  /// sigma_n^2 = alpha_ref^2 / 10^(snr_db/10) with alpha_ref = 1 (the
  /// amplitude at unit distance). Zero when noiseless.
  double noise_variance() const;
};

struct Position {
  double x = 0.0;
  double y = 0.0;
};

struct UeLocation {
  double x = 0.0;
  double y = 0.0;
};

double distance(const Position& a, const UeLocation& b);

/// Antenna positions in the (x, y) plane.
class ArrayGeometry {
 public:
  /// Throws InvalidArgument for fewer than two antennas, non-finite or
  /// repeated positions.
  explicit ArrayGeometry(std::vector<Position> positions);

  /// Uniform linear array along the x axis, centred on the origin.
  static ArrayGeometry ula(int num_antennas, double spacing);

  std::size_t size() const { return positions_.size(); }
  const Position& operator[](std::size_t n) const { return positions_[n]; }
  const std::vector<Position>& positions() const { return positions_; }

  /// Element spacing when the geometry was built by ula().
  std::optional<double> ula_spacing() const { return ula_spacing_; }

 private:
  std::vector<Position> positions_;
  std::optional<double> ula_spacing_;
};

/// Phase offset model: phi_f ~ N(freq_mean, freq_std^2) per (n, k) and
/// phi_a ~ U(-spatial_half_width, spatial_half_width) per antenna.
struct OffsetSpec {
  double freq_mean = 0.0;
  double freq_std = 0.0;
  double spatial_half_width = 0.0;
  std::uint64_t seed = 0;

  /// Standard deviation of the uniform spatial offset, Delta / sqrt(3).
  double spatial_std() const;

  /// Builds a spec whose spatial std equals `sigma` (Delta = sqrt(3) sigma).
  static OffsetSpec from_spatial_std(double sigma, std::uint64_t seed = 0);

  /// freq_std >= 0, spatial_half_width in [0, pi], all finite.
  void validate() const;
};

/// One draw of the offsets. Constant over the symbol index.
struct OffsetRealization {
  Eigen::MatrixXd phi_f;  // N x K, rad
  Eigen::VectorXd phi_a;  // N, rad

  static OffsetRealization zeros(int num_antennas, int num_subcarriers);
  int num_antennas() const { return static_cast<int>(phi_f.rows()); }
  int num_subcarriers() const { return static_cast<int>(phi_f.cols()); }
};

/// Complex CSI indexed (n, k, l), stored n-major, k-middle, l-minor so that
/// the L symbols of one (n, k) lane are contiguous.
class CsiTensor {
 public:
  CsiTensor(int num_antennas, int num_subcarriers, int num_symbols, double carrier_frequency,
            double subcarrier_spacing);
  CsiTensor(const SystemConfig& config);

  int num_antennas() const { return n_; }
  int num_subcarriers() const { return k_; }
  int num_symbols() const { return l_; }
  double carrier_frequency() const { return carrier_frequency_; }
  double subcarrier_spacing() const { return subcarrier_spacing_; }

  cdouble& operator()(int n, int k, int l) { return data_[index(n, k, l)]; }
  const cdouble& operator()(int n, int k, int l) const { return data_[index(n, k, l)]; }

  std::span<cdouble> lane(int n, int k) {
    return {data_.data() + index(n, k, 0), static_cast<std::size_t>(l_)};
  }
  std::span<const cdouble> lane(int n, int k) const {
    return {data_.data() + index(n, k, 0), static_cast<std::size_t>(l_)};
  }

  std::span<cdouble> data() { return data_; }
  std::span<const cdouble> data() const { return data_; }

  /// N x K matrix of symbol l.
  Snapshot symbol(int l) const;
  /// Coherent mean over the L symbols.
  Snapshot symbol_mean() const;

  bool same_shape(const CsiTensor& other) const {
    return n_ == other.n_ && k_ == other.k_ && l_ == other.l_;
  }

 private:
  std::size_t index(int n, int k, int l) const {
    return (static_cast<std::size_t>(n) * k_ + k) * l_ + l;
  }

  int n_;
  int k_;
  int l_;
  double carrier_frequency_;
  double subcarrier_spacing_;
  std::vector<cdouble> data_;
};

/// Wraps an angle into (-pi, pi].
double wrap_phase(double phi);

}  // namespace phasecal
