// SPDX-License-Identifier: Apache-2.0
//
// Cramer-Rao bound on the UE position with phase offsets as nuisance
// parameters. The nuisance block of the Fisher information is diagonal, so
// the effective (x, y) information is a rank-P update of a 2x2 matrix and is
// computed without ever forming the P x P block.

#pragma once

#include <optional>
#include <span>
#include <string_view>
#include <vector>

#include "phasecal/types.hpp"

namespace phasecal {

enum class NuisanceKind {
  kFrequency,  ///< one phase per (n, k), P = N K, Gaussian prior
  kSpatial,    ///< one phase per antenna, P = N, uniform prior
};

std::string_view to_string(NuisanceKind kind);
NuisanceKind parse_nuisance_kind(std::string_view name);

/// mu_nk = alpha_n exp(-j 2 pi f_k d_n / c). Offset phases are left out: the
/// information depends on mu only through |mu|^2 and the geometry.
Snapshot mean_signal(const SystemConfig& config, const ArrayGeometry& geometry,
                     const UeLocation& loc);

struct MeanGradients {
  Snapshot d_dx;  // d mu_nk / dx
  Snapshot d_dy;  // d mu_nk / dy
};

/// d mu / dx = -j 2 pi (f_k / c) (x - x_n) / d_n * mu_nk, likewise for y.
MeanGradients mean_gradients(const SystemConfig& config, const ArrayGeometry& geometry,
                             const UeLocation& loc);

struct FimBlocks {
  Eigen::Matrix2d j_xy;        ///< position block
  Eigen::Matrix2Xd j_xy_phi;   ///< 2 x P cross block
  Eigen::VectorXd j_phi_diag;  ///< diagonal of the nuisance block, +inf for a zero prior width
  NuisanceKind kind = NuisanceKind::kFrequency;

  // Optional data-only terms. When set, effective_fim forms the Schur
  // complement as a sum of positive semidefinite parts instead of
  // j_xy - sum c c^T / j_phi, which loses digits when the prior is wide.
  std::optional<Eigen::Matrix2d> j_xy_projected;  ///< position block with each nuisance direction projected out
  Eigen::VectorXd j_phi_data;                     ///< nuisance diagonal without the prior
};

/// Nuisance index p = n K + k for the frequency kind, p = n for spatial.
/// Prior precision is 1 / freq_std^2 (frequency) or 3 / Delta^2 (spatial); a
/// zero width gives infinite precision, i.e. a known phase. Any Delta >= 0 is
/// accepted here (sweeps run past Delta = pi).
FimBlocks fim_blocks(const SystemConfig& config, const ArrayGeometry& geometry,
                     const UeLocation& loc, const OffsetSpec& spec, NuisanceKind kind);

struct CrlbResult {
  Eigen::Matrix2d j_eff;
  Eigen::Matrix2d crlb_xy;  // m^2
  double rmse = 0.0;        // sqrt(trace(crlb_xy)), m
};

/// Largest admissible condition number of the 2x2 effective information.
inline constexpr double kMaxEfimCondition = 1e12;

/// Inverts a symmetric 2x2 information matrix through its adjugate. Throws
/// SingularMatrix when it is not positive definite or its condition number
/// exceeds kMaxEfimCondition.
CrlbResult crlb_from_information(const Eigen::Matrix2d& information);

/// J_eff = J_xy - sum_p c_p c_p^T / J_phi,pp (Schur complement), then the bound.
CrlbResult effective_fim(const FimBlocks& blocks);

struct CrlbSweepRow {
  NuisanceKind kind = NuisanceKind::kFrequency;
  int num_antennas = 0;
  double sigma = 0.0;  // rad; the spatial prior uses Delta = sqrt(3) sigma
  double rmse = 0.0;   // m
};

/// One row per (N, sigma) pair, N-major, on a ULA with the template spacing.
std::vector<CrlbSweepRow> crlb_sweep(const SystemConfig& config_template, const UeLocation& loc,
                                     NuisanceKind kind, std::span<const double> sigmas,
                                     std::span<const int> antenna_counts);

}  // namespace phasecal
