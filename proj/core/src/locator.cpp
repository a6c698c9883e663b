// SPDX-License-Identifier: Apache-2.0

#include "phasecal/locator.hpp"

#include <algorithm>
#include <cmath>

#include "phasecal/errors.hpp"

namespace phasecal {

SafMap localization_image(const Eigen::VectorXcd& los, const SystemConfig& config,
                          const ArrayGeometry& geometry, const SpatialGrid& grid,
                          double mainlobe_radius) {
  if (los.size() != static_cast<Eigen::Index>(geometry.size()))
    throw ShapeMismatch("LoS vector must have one entry per antenna");
  grid.validate();
  const int nx = grid.nx();
  const int ny = grid.ny();
  const double kc = kTwoPi * config.carrier_frequency / kSpeedOfLight;

  Eigen::MatrixXd power(nx, ny);
  for (int ix = 0; ix < nx; ++ix) {
    const double x = grid.x(ix);
    for (int iy = 0; iy < ny; ++iy) {
      const double y = grid.y(iy);
      double re = 0.0;
      double im = 0.0;
      for (std::size_t n = 0; n < geometry.size(); ++n) {
        const double dx = x - geometry[n].x;
        const double dy = y - geometry[n].y;
        const double phase = kc * std::sqrt(dx * dx + dy * dy);
        const double c = std::cos(phase);
        const double s = std::sin(phase);
        const cdouble v = los[static_cast<Eigen::Index>(n)];
        re += v.real() * c - v.imag() * s;
        im += v.real() * s + v.imag() * c;
      }
      power(ix, iy) = re * re + im * im;
    }
  }
  return make_saf_map(grid, std::move(power), mainlobe_radius);
}

namespace {

// Vertex offset of the parabola through (-1, a), (0, b), (1, c), in cells.
double parabola_offset(double pm, double p0, double pp) {
  if (!(pm > 0.0) || !(p0 > 0.0) || !(pp > 0.0)) return 0.0;
  const double lm = std::log(pm / p0);
  const double lp = std::log(pp / p0);
  const double curvature = lm + lp;
  if (!(curvature < 0.0)) return 0.0;
  return std::clamp(0.5 * (lm - lp) / curvature, -0.5, 0.5);
}

}  // namespace

Position refine_peak(const SafMap& image) {
  const int ix = image.peak_ix;
  const int iy = image.peak_iy;
  const Position raw{image.grid.x(ix), image.grid.y(iy)};
  if (ix <= 0 || iy <= 0 || ix >= image.power.rows() - 1 || iy >= image.power.cols() - 1)
    return raw;
  const auto& p = image.power;
  const double ox = parabola_offset(p(ix - 1, iy), p(ix, iy), p(ix + 1, iy));
  const double oy = parabola_offset(p(ix, iy - 1), p(ix, iy), p(ix, iy + 1));
  return {raw.x + ox * image.grid.step, raw.y + oy * image.grid.step};
}

double score(std::span<const double> errors) {
  if (errors.empty()) throw EmptyInput("no errors to score");
  double acc = 0.0;
  for (double e : errors) acc += e * e;
  return std::sqrt(acc / static_cast<double>(errors.size()));
}

LocalizationResult localize(const Eigen::VectorXcd& los, const SystemConfig& config,
                            const ArrayGeometry& geometry, const SpatialGrid& grid,
                            const UeLocation& truth, double mainlobe_radius) {
  LocalizationResult out;
  out.image = localization_image(los, config, geometry, grid, mainlobe_radius);
  out.estimate = out.image.peak_location;
  out.ground_truth = truth;
  out.error = std::hypot(out.estimate.x - truth.x, out.estimate.y - truth.y);
  out.pmsr_db = out.image.pmsr_db;
  return out;
}

}  // namespace phasecal
