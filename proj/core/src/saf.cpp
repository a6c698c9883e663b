// SPDX-License-Identifier: Apache-2.0

#include "phasecal/saf.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>

#include "phasecal/errors.hpp"
#include "phasecal/locator.hpp"
#include "phasecal/model.hpp"

namespace phasecal {

// ---------- grid ----------

namespace {

int axis_count(double lo, double hi, double step) {
  return static_cast<int>(std::floor((hi - lo) / step + 1e-9)) + 1;
}

constexpr long long kMaxGridCells = 50'000'000;

}  // namespace

int SpatialGrid::nx() const { return axis_count(x_min, x_max, step); }
int SpatialGrid::ny() const { return axis_count(y_min, y_max, step); }

void SpatialGrid::validate() const {
  if (!std::isfinite(x_min) || !std::isfinite(x_max) || !std::isfinite(y_min) ||
      !std::isfinite(y_max) || !std::isfinite(step))
    throw InvalidArgument("grid bounds must be finite");
  if (!(step > 0.0)) throw InvalidArgument("grid step must be positive");
  if (!(x_max > x_min) || !(y_max > y_min)) throw EmptyInput("grid region is empty");
  if (static_cast<long long>(nx()) * ny() > kMaxGridCells)
    throw InvalidArgument("grid has more than 5e7 cells");
}

void SpatialGrid::validate(const ArrayGeometry& geometry) const {
  validate();
  for (std::size_t n = 0; n < geometry.size(); ++n) {
    const double fx = (geometry[n].x - x_min) / step;
    const double fy = (geometry[n].y - y_min) / step;
    const long ix = std::lround(fx);
    const long iy = std::lround(fy);
    if (ix < 0 || iy < 0 || ix >= nx() || iy >= ny()) continue;
    if (x(static_cast<int>(ix)) == geometry[n].x && y(static_cast<int>(iy)) == geometry[n].y)
      throw InvalidArgument("grid node coincides with antenna " + std::to_string(n));
  }
}

// ---------- peak / PMSR ----------

double median_lower(std::vector<double> values) {
  if (values.empty()) throw EmptyInput("median of an empty set");
  const auto mid = values.begin() + static_cast<std::ptrdiff_t>((values.size() - 1) / 2);
  std::nth_element(values.begin(), mid, values.end());
  return *mid;
}

namespace {

std::vector<double> sidelobe_values(const SafMap& map, double radius) {
  std::vector<double> side;
  side.reserve(static_cast<std::size_t>(map.power.size()));
  const double r2 = radius * radius;
  for (int ix = 0; ix < map.power.rows(); ++ix) {
    const double dx = map.grid.x(ix) - map.peak_cell.x;
    for (int iy = 0; iy < map.power.cols(); ++iy) {
      const double dy = map.grid.y(iy) - map.peak_cell.y;
      if (dx * dx + dy * dy > r2) side.push_back(map.power(ix, iy));
    }
  }
  return side;
}

}  // namespace

double pmsr(const SafMap& map, double mainlobe_radius) {
  if (!(mainlobe_radius >= 0.0)) throw InvalidArgument("mainlobe radius must be >= 0");
  std::vector<double> side = sidelobe_values(map, mainlobe_radius);
  if (side.size() < 2) throw EmptyInput("fewer than two grid cells outside the mainlobe region");
  const double median = median_lower(std::move(side));
  if (!(median > 0.0)) throw NumericalFailure("median sidelobe power is zero");
  return 10.0 * std::log10(map.peak_power / median);
}

SafMap make_saf_map(const SpatialGrid& grid, Eigen::MatrixXd power, double mainlobe_radius) {
  if (power.rows() != grid.nx() || power.cols() != grid.ny())
    throw ShapeMismatch("power array does not match the grid dimensions");
  SafMap map;
  map.grid = grid;
  map.power = std::move(power);
  map.mainlobe_radius = mainlobe_radius;

  double best = -1.0;
  for (int ix = 0; ix < map.power.rows(); ++ix) {
    for (int iy = 0; iy < map.power.cols(); ++iy) {
      if (map.power(ix, iy) > best) {
        best = map.power(ix, iy);
        map.peak_ix = ix;
        map.peak_iy = iy;
      }
    }
  }
  map.peak_power = best;
  map.peak_cell = {grid.x(map.peak_ix), grid.y(map.peak_iy)};
  map.peak_location = refine_peak(map);

  if (sidelobe_values(map, mainlobe_radius).size() >= 2) {
    try {
      map.pmsr_db = pmsr(map, mainlobe_radius);
    } catch (const NumericalFailure&) {
      map.pmsr_db = std::numeric_limits<double>::infinity();
    }
  } else {
    map.pmsr_db = std::numeric_limits<double>::quiet_NaN();
  }
  return map;
}

SafCuts cuts(const SafMap& map) {
  const double floor = map.peak_power * 1e-30;
  auto to_db = [&](double p) { return 10.0 * std::log10(std::max(p, floor) / map.peak_power); };
  SafCuts out;
  for (int ix = 0; ix < map.power.rows(); ++ix) {
    out.x.coord.push_back(map.grid.x(ix));
    out.x.power_db.push_back(to_db(map.power(ix, map.peak_iy)));
  }
  for (int iy = 0; iy < map.power.cols(); ++iy) {
    out.y.coord.push_back(map.grid.y(iy));
    out.y.power_db.push_back(to_db(map.power(map.peak_ix, iy)));
  }
  return out;
}

// ---------- evaluation kernels ----------

SafMap saf_from_csi(const Snapshot& snapshot, const SystemConfig& config,
                    const ArrayGeometry& geometry, const SpatialGrid& grid,
                    double mainlobe_radius) {
  const int num_n = static_cast<int>(geometry.size());
  const int num_k = config.num_subcarriers;
  if (snapshot.rows() != num_n || snapshot.cols() != num_k)
    throw ShapeMismatch("snapshot must be N x K");
  grid.validate(geometry);

  // Row-contiguous split copy of the snapshot for the Horner loop.
  std::vector<double> re(static_cast<std::size_t>(num_n) * num_k);
  std::vector<double> im(re.size());
  for (int n = 0; n < num_n; ++n) {
    for (int k = 0; k < num_k; ++k) {
      re[static_cast<std::size_t>(n) * num_k + k] = snapshot(n, k).real();
      im[static_cast<std::size_t>(n) * num_k + k] = snapshot(n, k).imag();
    }
  }

  const double carrier_wavenumber = kTwoPi * config.carrier_frequency / kSpeedOfLight;
  const double spacing_wavenumber = kTwoPi * config.subcarrier_spacing / kSpeedOfLight;
  const int nx = grid.nx();
  const int ny = grid.ny();
  Eigen::MatrixXd power(nx, ny);

  // One grid column at a time: the Horner recursion runs over k for all
  // cells of the column together, so the inner loop has no carried
  // dependency and vectorizes.
  const auto cells = static_cast<std::size_t>(ny);
  std::vector<double> zr(cells), zi(cells), hr(cells), hi(cells), acc_re(cells), acc_im(cells);
  std::vector<double> dist(cells);
  for (int ix = 0; ix < nx; ++ix) {
    const double x = grid.x(ix);
    std::fill(acc_re.begin(), acc_re.end(), 0.0);
    std::fill(acc_im.begin(), acc_im.end(), 0.0);
    for (int n = 0; n < num_n; ++n) {
      const double dx = x - geometry[n].x;
      for (std::size_t iy = 0; iy < cells; ++iy) {
        const double dy = grid.y(static_cast<int>(iy)) - geometry[n].y;
        dist[iy] = std::sqrt(dx * dx + dy * dy);
        zr[iy] = std::cos(spacing_wavenumber * dist[iy]);
        zi[iy] = std::sin(spacing_wavenumber * dist[iy]);
      }
      // sum_{k=1..K} s_k z^k = z (s_1 + z (s_2 + ... + z s_K))
      const double* sr = re.data() + static_cast<std::size_t>(n) * num_k;
      const double* si = im.data() + static_cast<std::size_t>(n) * num_k;
      std::fill(hr.begin(), hr.end(), sr[num_k - 1]);
      std::fill(hi.begin(), hi.end(), si[num_k - 1]);
      for (int k = num_k - 2; k >= 0; --k) {
        const double ar = sr[k];
        const double ai = si[k];
        for (std::size_t iy = 0; iy < cells; ++iy) {
          const double tr = hr[iy] * zr[iy] - hi[iy] * zi[iy] + ar;
          hi[iy] = hr[iy] * zi[iy] + hi[iy] * zr[iy] + ai;
          hr[iy] = tr;
        }
      }
      for (std::size_t iy = 0; iy < cells; ++iy) {
        const double phase = carrier_wavenumber * dist[iy];
        const double cr = std::cos(phase);
        const double ci = std::sin(phase);
        // carrier * z * h
        const double wr = cr * zr[iy] - ci * zi[iy];
        const double wi = cr * zi[iy] + ci * zr[iy];
        acc_re[iy] += wr * hr[iy] - wi * hi[iy];
        acc_im[iy] += wr * hi[iy] + wi * hr[iy];
      }
    }
    for (std::size_t iy = 0; iy < cells; ++iy)
      power(ix, static_cast<Eigen::Index>(iy)) = acc_re[iy] * acc_re[iy] + acc_im[iy] * acc_im[iy];
  }
  return make_saf_map(grid, std::move(power), mainlobe_radius);
}

namespace {

Snapshot offset_snapshot(const SystemConfig& config, const ArrayGeometry& geometry,
                         const UeLocation& loc, const OffsetRealization& offsets) {
  Snapshot s = ideal_snapshot(config, geometry, loc);
  if (offsets.num_antennas() != s.rows() || offsets.num_subcarriers() != s.cols() ||
      offsets.phi_a.size() != s.rows())
    throw ShapeMismatch("offset realization does not match N x K");
  for (Eigen::Index n = 0; n < s.rows(); ++n)
    for (Eigen::Index k = 0; k < s.cols(); ++k)
      s(n, k) *= std::polar(1.0, offsets.phi_f(n, k) + offsets.phi_a[n]);
  return s;
}

}  // namespace

SafMap saf_model(const SystemConfig& config, const ArrayGeometry& geometry,
                 const UeLocation& true_loc, const SpatialGrid& grid, double mainlobe_radius) {
  return saf_from_csi(ideal_snapshot(config, geometry, true_loc), config, geometry, grid,
                      mainlobe_radius);
}

SafMap saf_model(const SystemConfig& config, const ArrayGeometry& geometry,
                 const UeLocation& true_loc, const OffsetRealization& offsets,
                 const SpatialGrid& grid, double mainlobe_radius) {
  return saf_from_csi(offset_snapshot(config, geometry, true_loc, offsets), config, geometry,
                      grid, mainlobe_radius);
}

cdouble dirichlet_sum(double theta, int num_terms) {
  if (num_terms < 1) throw InvalidArgument("dirichlet_sum needs at least one term");
  const double half_sin = std::sin(0.5 * theta);
  if (std::abs(half_sin) < 1e-9) {
    // Next to a multiple of 2 pi; sum directly.
    cdouble sum{};
    for (int k = 1; k <= num_terms; ++k) sum += std::polar(1.0, theta * k);
    return sum;
  }
  const double magnitude = std::sin(0.5 * num_terms * theta) / half_sin;
  return std::polar(magnitude, 0.5 * theta * (num_terms + 1));
}

SafMap saf_fast_path(const SystemConfig& config, const ArrayGeometry& geometry,
                     const UeLocation& true_loc, std::span<const double> spatial_offsets,
                     const SpatialGrid& grid, double mainlobe_radius) {
  const int num_n = static_cast<int>(geometry.size());
  if (num_n != config.num_antennas) throw ShapeMismatch("geometry does not match config N");
  if (!spatial_offsets.empty() && static_cast<int>(spatial_offsets.size()) != num_n)
    throw ShapeMismatch("spatial offsets must have N entries");
  grid.validate(geometry);

  const Eigen::VectorXd d0 = distances(geometry, true_loc);
  const Eigen::VectorXd alpha = amplitudes(config, d0);
  std::vector<double> antenna_phase(num_n, 0.0);
  if (!spatial_offsets.empty()) std::copy(spatial_offsets.begin(), spatial_offsets.end(), antenna_phase.begin());

  const double carrier_wavenumber = kTwoPi * config.carrier_frequency / kSpeedOfLight;
  const double spacing_wavenumber = kTwoPi * config.subcarrier_spacing / kSpeedOfLight;
  const int num_k = config.num_subcarriers;
  const int nx = grid.nx();
  const int ny = grid.ny();
  Eigen::MatrixXd power(nx, ny);

  for (int ix = 0; ix < nx; ++ix) {
    const double x = grid.x(ix);
    for (int iy = 0; iy < ny; ++iy) {
      const double y = grid.y(iy);
      cdouble acc{};
      for (int n = 0; n < num_n; ++n) {
        const double delta = std::hypot(x - geometry[n].x, y - geometry[n].y) - d0[n];
        const cdouble inner = dirichlet_sum(spacing_wavenumber * delta, num_k);
        const double phase = carrier_wavenumber * delta + antenna_phase[n];
        const double cr = alpha[n] * std::cos(phase);
        const double ci = alpha[n] * std::sin(phase);
        acc += cdouble(cr * inner.real() - ci * inner.imag(), cr * inner.imag() + ci * inner.real());
      }
      power(ix, iy) = std::norm(acc);
    }
  }
  return make_saf_map(grid, std::move(power), mainlobe_radius);
}

SafMap saf_fast_path(const SystemConfig& config, const ArrayGeometry& geometry,
                     const UeLocation& true_loc, const OffsetRealization& offsets,
                     const SpatialGrid& grid, double mainlobe_radius) {
  if (offsets.num_antennas() != config.num_antennas ||
      offsets.num_subcarriers() != config.num_subcarriers ||
      offsets.phi_a.size() != config.num_antennas)
    throw ShapeMismatch("offset realization does not match N x K");
  std::vector<double> phase(static_cast<std::size_t>(config.num_antennas));
  for (int n = 0; n < config.num_antennas; ++n) {
    const double first = offsets.phi_f(n, 0);
    for (int k = 1; k < config.num_subcarriers; ++k) {
      if (offsets.phi_f(n, k) != first)
        throw PreconditionViolation(
            "fast path needs offsets that are constant across subcarriers (antenna " +
            std::to_string(n) + ")");
    }
    phase[n] = first + offsets.phi_a[n];
  }
  return saf_fast_path(config, geometry, true_loc, phase, grid, mainlobe_radius);
}

PmsrSweepResult pmsr_sweep(const SystemConfig& config, const ArrayGeometry& geometry,
                           const UeLocation& true_loc, NuisanceKind kind,
                           std::span<const double> sigmas, std::span<const std::uint64_t> seeds,
                           const SpatialGrid& grid, double mainlobe_radius) {
  if (sigmas.empty() || seeds.empty()) throw EmptyInput("PMSR sweep needs sigmas and seeds");
  PmsrSweepResult result;
  for (double sigma : sigmas) {
    std::vector<double> values;
    for (std::uint64_t seed : seeds) {
      OffsetSpec spec;
      spec.seed = seed;
      double value = 0.0;
      if (kind == NuisanceKind::kFrequency) {
        spec.freq_std = sigma;
        const OffsetRealization off =
            sample_offsets(spec, config.num_antennas, config.num_subcarriers);
        value = saf_model(config, geometry, true_loc, off, grid, mainlobe_radius).pmsr_db;
      } else {
        spec.spatial_half_width = std::sqrt(3.0) * sigma;
        const OffsetRealization off =
            sample_offsets(spec, config.num_antennas, config.num_subcarriers);
        value = saf_fast_path(config, geometry, true_loc,
                              std::span<const double>(off.phi_a.data(), off.phi_a.size()), grid,
                              mainlobe_radius)
                    .pmsr_db;
      }
      result.rows.push_back({kind, sigma, seed, value});
      values.push_back(value);
    }
    result.medians.push_back({kind, sigma, median_lower(std::move(values))});
  }
  return result;
}

}  // namespace phasecal
