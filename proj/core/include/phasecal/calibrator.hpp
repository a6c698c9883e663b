// SPDX-License-Identifier: Apache-2.0
//
// Extrinsic phase calibration with a UE at a known location:
//   1. frequency offsets by least squares against the noiseless model,
//   2. compensation and coherent averaging over symbols,
//   3. range matched filter across subcarriers to read each antenna's LoS value,
//   4. spatial offsets from the LoS values against exp(-j 2 pi f_c d_n / c).

#pragma once

#include <filesystem>
#include <span>
#include <string>
#include <vector>

#include "phasecal/types.hpp"

namespace phasecal {

/// Running per-(n, k) sums over symbols. Enough to evaluate the least
/// squares estimate against a template that is constant over symbols,
/// without keeping the capture in memory.
class SymbolAccumulator {
 public:
  SymbolAccumulator(int num_antennas, int num_subcarriers);

  void add(int n, int k, std::span<const cdouble> samples);
  void add(const CsiTensor& csi);

  int num_antennas() const { return static_cast<int>(sum_.rows()); }
  int num_subcarriers() const { return static_cast<int>(sum_.cols()); }
  /// Symbols seen by lane (n, k).
  long long count(int n, int k) const { return count_(n, k); }

  const Snapshot& sum() const { return sum_; }
  const Eigen::MatrixXd& energy() const { return energy_; }  // sum |r~|^2
  /// Coherent mean over symbols. Throws PreconditionViolation if a lane is empty.
  Snapshot mean() const;

 private:
  Snapshot sum_;
  Eigen::MatrixXd energy_;
  Eigen::Matrix<long long, Eigen::Dynamic, Eigen::Dynamic> count_;
};

struct CalibrationTables {
  Eigen::MatrixXd phi_f_hat;       ///< N x K, (-pi, pi]
  Eigen::VectorXd phi_a_hat;       ///< N, (-pi, pi]
  Eigen::MatrixXd residual_power;  ///< N x K, mean per-symbol least-squares residual
  Eigen::MatrixXd ratio_modulus;   ///< N x K, |r^H r~ / r^H r|, 1 without noise

  static CalibrationTables zeros(int num_antennas, int num_subcarriers);
};

/// exp(j phi_nk) = r_nk^H r~_nk / (r_nk^H r_nk) over the L symbols, with r_nk the
/// noiseless template at `true_loc`. Fills phi_f_hat, residual_power and
/// ratio_modulus; phi_a_hat is zero. Throws NumericalFailure if a template
/// entry vanishes.
CalibrationTables estimate_frequency_offsets(const SymbolAccumulator& measured,
                                             const SystemConfig& config,
                                             const ArrayGeometry& geometry,
                                             const UeLocation& true_loc);
CalibrationTables estimate_frequency_offsets(const CsiTensor& measured, const SystemConfig& config,
                                             const ArrayGeometry& geometry,
                                             const UeLocation& true_loc);

/// Per-antenna circular mean over k of a frequency table, and the table with
/// that mean removed (wrapped into (-pi, pi]).
struct CommonPhaseSplit {
  Eigen::VectorXd common;     ///< N
  Eigen::MatrixXd varying;    ///< N x K
};
CommonPhaseSplit split_antenna_common_phase(const Eigen::MatrixXd& phi_f);

/// r^_nk(l) = r~_nk(l) exp(-j phi_f_hat_nk). Throws ShapeMismatch.
CsiTensor compensate_frequency(const CsiTensor& measured, const CalibrationTables& tables);
Snapshot compensate_frequency(const Snapshot& measured, const CalibrationTables& tables);

struct RangeProfile {
  Eigen::MatrixXcd profile;    ///< N x bins
  double bin_spacing = 0.0;    ///< c / (K delta_f oversampling), m
  std::vector<int> peak_bin;   ///< largest magnitude bin per antenna (lowest index on ties)
  Eigen::VectorXcd los_values; ///< profile value at each antenna's peak bin

  double range_of_bin(int bin) const { return bin * bin_spacing; }
};

/// r_n(d) = sum_k s_nk exp(+j 2 pi delta_f k d / c) for d = b * bin_spacing,
/// b = 0 .. K * oversampling - 1, covering the unambiguous range [0, c / delta_f).
RangeProfile range_matched_filter(const Snapshot& snapshot, const SystemConfig& config,
                                  int oversampling = 8);

/// phi_a_hat_n = arg(los_n conj(exp(-j 2 pi f_c d_n / c))). The modulus of the
/// ratio is discarded. Throws NumericalFailure for a zero LoS value.
Eigen::VectorXd estimate_spatial_offsets(const Eigen::VectorXcd& los_values,
                                         const SystemConfig& config,
                                         const ArrayGeometry& geometry,
                                         const UeLocation& true_loc);

/// r^_n = r~_n exp(-j phi_a_hat_n). Throws ShapeMismatch.
Eigen::VectorXcd compensate_spatial(const Eigen::VectorXcd& los_values,
                                    const Eigen::VectorXd& phi_a_hat);

struct PipelineOptions {
  int oversampling = 8;
  bool compensate_frequency = true;
};

/// Everything the pipeline produces, stage by stage.
struct CalibrationOutcome {
  CalibrationTables tables;        ///< applied tables: phi_f_hat (varying part) and phi_a_hat
  Eigen::MatrixXd raw_phi_f;       ///< least-squares phases before the common-phase split
  Snapshot mean_snapshot;          ///< uncalibrated symbol mean
  Snapshot frequency_snapshot;     ///< symbol mean after frequency compensation
  RangeProfile uncalibrated_profile;
  RangeProfile frequency_profile;
  Eigen::VectorXcd los_uncalibrated;
  Eigen::VectorXcd los_frequency;   ///< after frequency compensation only
  Eigen::VectorXcd los_calibrated;  ///< after both compensations
};

/// Frequency estimation -> compensation -> mean over L -> range MF -> spatial
/// estimation -> compensation.
///
/// The least-squares phase of each (n, k) also contains that antenna's
/// spatial offset. The per-antenna circular mean over k is therefore left in
/// the data at the frequency stage and picked up by the spatial stage, so the
/// frequency stage removes only the subcarrier-varying part.
CalibrationOutcome calibrate_pipeline(const SymbolAccumulator& measured, const SystemConfig& config,
                                      const ArrayGeometry& geometry, const UeLocation& true_loc,
                                      const PipelineOptions& options = {});
CalibrationOutcome calibrate_pipeline(const CsiTensor& measured, const SystemConfig& config,
                                      const ArrayGeometry& geometry, const UeLocation& true_loc,
                                      const PipelineOptions& options = {});

/// CSV tables: "n,k,phi_f_hat" and "n,phi_a_hat". Each line of `comment`
/// becomes a "# " line above the column header.
void write_frequency_table(const std::filesystem::path& path, const Eigen::MatrixXd& phi_f_hat,
                           const std::string& comment = {});
void write_spatial_table(const std::filesystem::path& path, const Eigen::VectorXd& phi_a_hat,
                         const std::string& comment = {});
Eigen::MatrixXd read_frequency_table(const std::filesystem::path& path);
Eigen::VectorXd read_spatial_table(const std::filesystem::path& path);

}  // namespace phasecal
