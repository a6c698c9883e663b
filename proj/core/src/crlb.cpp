// SPDX-License-Identifier: Apache-2.0

#include "phasecal/crlb.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>

#include "phasecal/errors.hpp"
#include "phasecal/model.hpp"

namespace phasecal {

std::string_view to_string(NuisanceKind kind) {
  return kind == NuisanceKind::kFrequency ? "frequency" : "spatial";
}

NuisanceKind parse_nuisance_kind(std::string_view name) {
  if (name == "frequency") return NuisanceKind::kFrequency;
  if (name == "spatial") return NuisanceKind::kSpatial;
  throw InvalidArgument("unknown offset kind '" + std::string(name) + "'");
}

Snapshot mean_signal(const SystemConfig& config, const ArrayGeometry& geometry,
                     const UeLocation& loc) {
  return ideal_snapshot(config, geometry, loc);
}

MeanGradients mean_gradients(const SystemConfig& config, const ArrayGeometry& geometry,
                             const UeLocation& loc) {
  const Snapshot mu = mean_signal(config, geometry, loc);
  const Eigen::VectorXd d = distances(geometry, loc);
  const Eigen::VectorXd f = subcarrier_frequencies(config);

  MeanGradients g{Snapshot(mu.rows(), mu.cols()), Snapshot(mu.rows(), mu.cols())};
  for (Eigen::Index n = 0; n < mu.rows(); ++n) {
    const double ux = (loc.x - geometry[n].x) / d[n];
    const double uy = (loc.y - geometry[n].y) / d[n];
    for (Eigen::Index k = 0; k < mu.cols(); ++k) {
      const cdouble factor(0.0, -kTwoPi * f[k] / kSpeedOfLight);
      g.d_dx(n, k) = factor * ux * mu(n, k);
      g.d_dy(n, k) = factor * uy * mu(n, k);
    }
  }
  return g;
}

namespace {

// Re{a conj(b)}
double re_cross(const cdouble& a, const cdouble& b) { return a.real() * b.real() + a.imag() * b.imag(); }

double prior_precision(const OffsetSpec& spec, NuisanceKind kind) {
  const double width = kind == NuisanceKind::kFrequency ? spec.freq_std : spec.spatial_half_width;
  if (!std::isfinite(width) || width < 0.0) throw InvalidArgument("prior width must be >= 0");
  if (width == 0.0) return std::numeric_limits<double>::infinity();
  return kind == NuisanceKind::kFrequency ? 1.0 / (width * width) : 3.0 / (width * width);
}

}  // namespace

FimBlocks fim_blocks(const SystemConfig& config, const ArrayGeometry& geometry,
                     const UeLocation& loc, const OffsetSpec& spec, NuisanceKind kind) {
  config.validate();
  const double noise_var = config.noise_variance();
  if (noise_var <= 0.0) throw InvalidArgument("Fisher information needs a finite SNR");
  const double scale = 2.0 / noise_var;
  const double prior = prior_precision(spec, kind);

  const Snapshot mu = mean_signal(config, geometry, loc);
  const MeanGradients g = mean_gradients(config, geometry, loc);
  const Eigen::Index num_n = mu.rows();
  const Eigen::Index num_k = mu.cols();
  const Eigen::Index p_count = kind == NuisanceKind::kFrequency ? num_n * num_k : num_n;

  FimBlocks blocks;
  blocks.kind = kind;
  blocks.j_xy.setZero();
  blocks.j_xy_phi = Eigen::Matrix2Xd::Zero(2, p_count);
  blocks.j_phi_diag = Eigen::VectorXd::Zero(p_count);

  for (Eigen::Index n = 0; n < num_n; ++n) {
    for (Eigen::Index k = 0; k < num_k; ++k) {
      const cdouble gx = g.d_dx(n, k);
      const cdouble gy = g.d_dy(n, k);
      const cdouble gphi = cdouble(0.0, 1.0) * mu(n, k);  // d mu / d phi = j mu

      blocks.j_xy(0, 0) += scale * re_cross(gx, gx);
      blocks.j_xy(0, 1) += scale * re_cross(gx, gy);
      blocks.j_xy(1, 1) += scale * re_cross(gy, gy);

      const Eigen::Index p = kind == NuisanceKind::kFrequency ? n * num_k + k : n;
      blocks.j_xy_phi(0, p) += scale * re_cross(gx, gphi);
      blocks.j_xy_phi(1, p) += scale * re_cross(gy, gphi);
      blocks.j_phi_diag[p] += scale * std::norm(mu(n, k));
    }
  }

  // Position information left after projecting out each group's phase
  // direction, in closed form. With d mu / dx = -j beta_k u_x mu, a frequency
  // group (one entry) keeps nothing. An antenna group keeps
  // sum_k (beta_k - mean beta)^2 |mu|^2 u u^T, and
  // sum_k (beta_k - mean beta)^2 = (2 pi delta_f / c)^2 K (K^2 - 1) / 12.
  Eigen::Matrix2d projected = Eigen::Matrix2d::Zero();
  if (kind == NuisanceKind::kSpatial) {
    const Eigen::VectorXd d = distances(geometry, loc);
    const Eigen::VectorXd alpha = amplitudes(config, d);
    const double step = kTwoPi * config.subcarrier_spacing / kSpeedOfLight;
    const double kk = static_cast<double>(num_k);
    const double spread = step * step * kk * (kk * kk - 1.0) / 12.0;
    for (Eigen::Index n = 0; n < num_n; ++n) {
      const Eigen::Vector2d u((loc.x - geometry[n].x) / d[n], (loc.y - geometry[n].y) / d[n]);
      projected.noalias() += (scale * alpha[n] * alpha[n] * spread) * (u * u.transpose());
    }
  }
  blocks.j_xy_projected = projected;
  blocks.j_phi_data = blocks.j_phi_diag;
  blocks.j_xy(1, 0) = blocks.j_xy(0, 1);
  blocks.j_phi_diag.array() += prior;
  return blocks;
}

CrlbResult crlb_from_information(const Eigen::Matrix2d& information) {
  const double a = information(0, 0);
  const double b = 0.5 * (information(0, 1) + information(1, 0));
  const double d = information(1, 1);
  const double det = a * d - b * b;
  const double trace = a + d;
  if (!std::isfinite(det) || !(det > 0.0) || !(trace > 0.0))
    throw SingularMatrix("effective Fisher information is not positive definite");

  // Eigenvalues of a symmetric 2x2 matrix.
  const double half = 0.5 * trace;
  const double root = std::sqrt(std::max(0.0, half * half - det));
  const double lambda_max = half + root;
  const double lambda_min = det / lambda_max;
  if (!(lambda_min > 0.0) || lambda_max / lambda_min > kMaxEfimCondition)
    throw SingularMatrix("effective Fisher information is ill-conditioned (cond > 1e12)");

  CrlbResult out;
  out.j_eff << a, b, b, d;
  out.crlb_xy << d / det, -b / det, -b / det, a / det;
  out.rmse = std::sqrt(out.crlb_xy.trace());
  return out;
}

CrlbResult effective_fim(const FimBlocks& blocks) {
  if (blocks.j_xy_phi.cols() != blocks.j_phi_diag.size())
    throw ShapeMismatch("cross block and nuisance diagonal disagree on P");
  const bool split = blocks.j_xy_projected.has_value() &&
                     blocks.j_phi_data.size() == blocks.j_phi_diag.size() &&
                     (blocks.j_phi_data.array() > 0.0).all() &&
                     blocks.j_phi_diag.array().isFinite().all();
  // split: J_eff = projected + sum c c^T (1/D - 1/J), with 1/D - 1/J = prior / (D J) >= 0.
  Eigen::Matrix2d sum = Eigen::Matrix2d::Zero();
  for (Eigen::Index p = 0; p < blocks.j_phi_diag.size(); ++p) {
    const double precision = blocks.j_phi_diag[p];
    if (!(precision > 0.0)) throw InvalidArgument("nuisance information must be positive");
    const Eigen::Vector2d c = blocks.j_xy_phi.col(p);
    if (split) {
      const double data = blocks.j_phi_data[p];
      sum.noalias() += (c * c.transpose()) * ((precision - data) / (data * precision));
    } else if (!std::isinf(precision)) {  // infinite: known phase, nothing to marginalize
      sum.noalias() += (c * c.transpose()) / precision;
    }
  }
  return crlb_from_information(split ? Eigen::Matrix2d(*blocks.j_xy_projected + sum)
                                     : Eigen::Matrix2d(blocks.j_xy - sum));
}

std::vector<CrlbSweepRow> crlb_sweep(const SystemConfig& config_template, const UeLocation& loc,
                                     NuisanceKind kind, std::span<const double> sigmas,
                                     std::span<const int> antenna_counts) {
  if (sigmas.empty() || antenna_counts.empty())
    throw EmptyInput("CRLB sweep needs at least one sigma and one antenna count");
  std::vector<CrlbSweepRow> rows;
  rows.reserve(sigmas.size() * antenna_counts.size());
  for (int num_antennas : antenna_counts) {
    SystemConfig config = config_template;
    config.num_antennas = num_antennas;
    const ArrayGeometry geometry = ArrayGeometry::ula(num_antennas, config.antenna_spacing);
    for (double sigma : sigmas) {
      if (!std::isfinite(sigma) || sigma < 0.0) throw InvalidArgument("sigma must be >= 0");
      OffsetSpec spec;
      if (kind == NuisanceKind::kFrequency) {
        spec.freq_std = sigma;
      } else {
        spec.spatial_half_width = std::sqrt(3.0) * sigma;
      }
      const CrlbResult result = effective_fim(fim_blocks(config, geometry, loc, spec, kind));
      rows.push_back({kind, num_antennas, sigma, result.rmse});
    }
  }
  return rows;
}

}  // namespace phasecal
