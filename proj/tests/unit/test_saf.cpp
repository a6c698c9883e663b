// SPDX-License-Identifier: Apache-2.0

#include <gtest/gtest.h>

#include <cmath>
#include <random>

#include "oracles.hpp"
#include "phasecal/errors.hpp"
#include "phasecal/model.hpp"
#include "phasecal/saf.hpp"

using namespace phasecal;

namespace {

const std::span<const double> kIdeal{};

SystemConfig noiseless(int n = 64, int k = 100) {
  SystemConfig c;
  c.num_antennas = n;
  c.num_subcarriers = k;
  c.snr_db.reset();
  return c;
}

SpatialGrid grid_at(double x0, double y0, double step, int nx, int ny) {
  return {x0, x0 + step * (nx - 1), y0, y0 + step * (ny - 1), step};
}

double max_rel(const Eigen::MatrixXd& a, const Eigen::MatrixXd& b) {
  return ((a - b).cwiseAbs().array() / b.cwiseAbs().array().max(1e-300)).maxCoeff();
}

SafMap flat_map(int nx, int ny, double value) {
  return make_saf_map(grid_at(0.0, 1.0, 0.1, nx, ny), Eigen::MatrixXd::Constant(nx, ny, value), 0.05);
}

}  // namespace

TEST(SpatialGrid, DimensionsAndValidation) {
  const SpatialGrid g;
  EXPECT_EQ(g.nx(), 501);
  EXPECT_EQ(g.ny(), 376);
  EXPECT_THROW((SpatialGrid{0.0, 1.0, 0.0, 1.0, 0.0}).validate(), InvalidArgument);
  EXPECT_THROW((SpatialGrid{1.0, 1.0, 0.0, 1.0, 0.1}).validate(), EmptyInput);
  const ArrayGeometry a({{0.0, 0.0}, {0.5, 0.0}});
  EXPECT_THROW((SpatialGrid{-1.0, 1.0, 0.0, 1.0, 0.25}).validate(a), InvalidArgument);
}

TEST(SafFromCsi, IdealPeakIsNkSquared) {
  const SystemConfig c = noiseless();
  const ArrayGeometry g = ArrayGeometry::ula(64, 0.07);
  const SafMap m = saf_from_csi(ideal_snapshot(c, g, {-2.0, 1.0}), c, g, grid_at(-2.0, 1.0, 0.02, 3, 3));
  EXPECT_NEAR(m.power(0, 0) / (6400.0 * 6400.0), 1.0, 1e-12);
  EXPECT_EQ(m.peak_ix, 0);
  EXPECT_EQ(m.peak_iy, 0);
}

TEST(SafFromCsi, BruteForceTinyCase) {
  const SystemConfig c = noiseless(2, 2);
  const ArrayGeometry g = ArrayGeometry::ula(2, 0.07);
  std::mt19937_64 rng(1);
  std::normal_distribution<double> nd;
  Snapshot s(2, 2);
  std::vector<std::complex<double>> flat;
  for (int n = 0; n < 2; ++n)
    for (int k = 0; k < 2; ++k) {
      s(n, k) = {nd(rng), nd(rng)};
      flat.push_back(s(n, k));
    }
  const SpatialGrid grid = grid_at(-1.0, 1.0, 0.37, 3, 3);
  const SafMap m = saf_from_csi(s, c, g, grid);
  for (int ix = 0; ix < 3; ++ix)
    for (int iy = 0; iy < 3; ++iy) {
      const double ref = oracle::saf_cell(flat, 2, 2, 0.07, c.carrier_frequency,
                                          c.subcarrier_spacing, grid.x(ix), grid.y(iy));
      EXPECT_NEAR(m.power(ix, iy), ref, 1e-10 * ref);
    }
}

TEST(SafFromCsi, ShapeMismatch) {
  const SystemConfig c = noiseless(4, 3);
  EXPECT_THROW(saf_from_csi(Snapshot::Ones(4, 2), c, ArrayGeometry::ula(4, 0.07), SpatialGrid{}),
               ShapeMismatch);
}

TEST(SafModel, ReductionIdentity) {
  const SystemConfig c = noiseless(16, 20);
  const ArrayGeometry g = ArrayGeometry::ula(16, 0.07);
  const SpatialGrid grid = grid_at(-3.0, 0.5, 0.1, 21, 21);
  const SafMap a = saf_model(c, g, {-2.0, 1.0}, grid);
  const SafMap b = saf_from_csi(ideal_snapshot(c, g, {-2.0, 1.0}), c, g, grid);
  EXPECT_LE(max_rel(a.power, b.power), 1e-12);
}

TEST(SafModel, FrequencyOffsetsFoldIntoSnapshot) {
  const SystemConfig c = noiseless(16, 20);
  const ArrayGeometry g = ArrayGeometry::ula(16, 0.07);
  const SpatialGrid grid = grid_at(-3.0, 0.5, 0.1, 21, 21);
  const OffsetRealization r = sample_offsets(OffsetSpec{0.0, 0.8, 0.0, 4}, 16, 20);
  Snapshot s = ideal_snapshot(c, g, {-2.0, 1.0});
  for (int n = 0; n < 16; ++n)
    for (int k = 0; k < 20; ++k) s(n, k) *= std::polar(1.0, r.phi_f(n, k));
  EXPECT_LE(max_rel(saf_model(c, g, {-2.0, 1.0}, r, grid).power, saf_from_csi(s, c, g, grid).power),
            1e-12);
}

TEST(SafModel, GlobalMaximumAtTruthCell) {
  const SystemConfig c = noiseless();
  const ArrayGeometry g = ArrayGeometry::ula(64, 0.07);
  const SpatialGrid grid = grid_at(-2.5, 0.6, 0.05, 21, 21);  // truth at (10, 8)
  const SafMap m = saf_fast_path(c, g, {grid.x(10), grid.y(8)}, kIdeal, grid);
  EXPECT_EQ(m.peak_ix, 10);
  EXPECT_EQ(m.peak_iy, 8);
}

TEST(SafModel, GlobalPhaseInvariance) {
  const SystemConfig c = noiseless(8, 10);
  const ArrayGeometry g = ArrayGeometry::ula(8, 0.07);
  const SpatialGrid grid = grid_at(-3.0, 0.5, 0.2, 11, 11);
  const Snapshot s = ideal_snapshot(c, g, {-2.0, 1.0});
  const SafMap a = saf_from_csi(s, c, g, grid);
  const SafMap b = saf_from_csi(s * std::polar(1.0, 0.3), c, g, grid);
  EXPECT_LE(max_rel(a.power, b.power), 1e-12);
  EXPECT_NEAR(a.pmsr_db, b.pmsr_db, 1e-9);
}

TEST(SafModel, FrequencyOffsetsShrinkPeakByGaussianFactor) {
  const SystemConfig c = noiseless();
  const ArrayGeometry g = ArrayGeometry::ula(64, 0.07);
  const SpatialGrid grid = grid_at(-2.0, 1.0, 0.02, 2, 2);
  const double sigma = oracle::pi / 4.0;
  double acc = 0.0;
  for (std::uint64_t seed = 0; seed < 200; ++seed) {
    const OffsetRealization r = sample_offsets(OffsetSpec{0.0, sigma, 0.0, seed}, 64, 100);
    acc += std::sqrt(saf_model(c, g, {-2.0, 1.0}, r, grid).power(0, 0));
  }
  EXPECT_NEAR(acc / 200.0 / (6400.0 * std::exp(-sigma * sigma / 2.0)), 1.0, 0.02);
}

TEST(Dirichlet, ClosedFormCases) {
  EXPECT_NEAR(std::abs(dirichlet_sum(0.0, 100) - cdouble(100.0, 0.0)), 0.0, 1e-12);
  EXPECT_NEAR(std::abs(dirichlet_sum(2.0 * oracle::pi / 100.0, 100)), 0.0, 1e-12);
  EXPECT_NEAR(std::abs(dirichlet_sum(4.0 * oracle::pi, 100) - cdouble(100.0, 0.0)), 0.0, 1e-9);
  std::mt19937_64 rng(3);
  std::uniform_real_distribution<double> u(-10.0, 10.0);
  for (int i = 0; i < 100; ++i) {
    const double theta = u(rng);
    std::complex<double> naive = 0.0;
    for (int k = 1; k <= 100; ++k) naive += std::polar(1.0, theta * k);
    EXPECT_NEAR(std::abs(dirichlet_sum(theta, 100) - naive), 0.0, 1e-10);
  }
}

TEST(FastPath, MatchesNaiveIdealAndSpatial) {
  const SystemConfig c = noiseless();
  const ArrayGeometry g = ArrayGeometry::ula(64, 0.07);
  const SpatialGrid grid = grid_at(-4.0, 0.5, 0.05, 41, 41);
  EXPECT_LE(max_rel(saf_fast_path(c, g, {-2.0, 1.0}, kIdeal, grid).power,
                    saf_model(c, g, {-2.0, 1.0}, grid).power),
            1e-9);
  const OffsetRealization r = sample_offsets(OffsetSpec::from_spatial_std(oracle::pi / 4.0, 6), 64, 100);
  EXPECT_LE(max_rel(saf_fast_path(c, g, {-2.0, 1.0}, r, grid).power,
                    saf_model(c, g, {-2.0, 1.0}, r, grid).power),
            1e-9);
}

TEST(FastPath, RejectsSubcarrierVaryingOffsets) {
  const SystemConfig c = noiseless(4, 5);
  const ArrayGeometry g = ArrayGeometry::ula(4, 0.07);
  OffsetRealization r = OffsetRealization::zeros(4, 5);
  r.phi_f.row(1).setConstant(0.4);  // constant per antenna: allowed
  EXPECT_NO_THROW(saf_fast_path(c, g, {-2.0, 1.0}, r, grid_at(-3.0, 1.0, 0.5, 3, 3)));
  r.phi_f(2, 3) = 0.1;
  EXPECT_THROW(saf_fast_path(c, g, {-2.0, 1.0}, r, grid_at(-3.0, 1.0, 0.5, 3, 3)),
               PreconditionViolation);
}

TEST(Pmsr, ConstantAndStepMaps) {
  EXPECT_NEAR(flat_map(10, 10, 3.0).pmsr_db, 0.0, 1e-12);
  Eigen::MatrixXd p = Eigen::MatrixXd::Ones(10, 10);
  p(4, 4) = 100.0;
  const SafMap m = make_saf_map(grid_at(0.0, 1.0, 0.1, 10, 10), p, 0.05);
  EXPECT_NEAR(m.pmsr_db, 20.0, 1e-12);
  EXPECT_NEAR(pmsr(m, 0.05), 20.0, 1e-12);
}

TEST(Pmsr, EmptySidelobeRegion) {
  const SafMap m = flat_map(3, 3, 1.0);
  EXPECT_THROW(pmsr(m, 10.0), EmptyInput);
  EXPECT_TRUE(std::isnan(make_saf_map(m.grid, m.power, 10.0).pmsr_db));
}

TEST(Pmsr, LowerMiddleMedianAndTieBreak) {
  EXPECT_EQ(median_lower({4.0, 1.0, 3.0, 2.0}), 2.0);
  EXPECT_EQ(median_lower({5.0}), 5.0);
  EXPECT_THROW(median_lower({}), EmptyInput);
  Eigen::MatrixXd p = Eigen::MatrixXd::Ones(5, 5);
  p(3, 1) = 7.0;
  p(1, 3) = 7.0;
  const SafMap m = make_saf_map(grid_at(0.0, 1.0, 0.1, 5, 5), p, 0.0);
  EXPECT_EQ(m.peak_ix, 1);
  EXPECT_EQ(m.peak_iy, 3);
}

TEST(Pmsr, IdealBeatsSpatialOnEverySeed) {
  const SystemConfig c = noiseless();
  const ArrayGeometry g = ArrayGeometry::ula(64, 0.07);
  const SpatialGrid grid;
  const double ideal = saf_fast_path(c, g, {-2.0, 1.0}, kIdeal, grid).pmsr_db;
  for (std::uint64_t seed = 1; seed <= 20; ++seed) {
    const OffsetRealization r =
        sample_offsets(OffsetSpec::from_spatial_std(oracle::pi / 4.0, seed), 64, 100);
    EXPECT_GT(ideal, saf_fast_path(c, g, {-2.0, 1.0}, r, grid).pmsr_db) << seed;
  }
}

TEST(Cuts, NormalisedThroughPeak) {
  const SystemConfig c = noiseless();
  const ArrayGeometry g = ArrayGeometry::ula(64, 0.07);
  const SafMap m = saf_fast_path(c, g, {-2.0, 1.0}, kIdeal, SpatialGrid{});
  const SafCuts cut = cuts(m);
  ASSERT_EQ(cut.x.coord.size(), static_cast<std::size_t>(m.grid.nx()));
  ASSERT_EQ(cut.y.coord.size(), static_cast<std::size_t>(m.grid.ny()));
  EXPECT_EQ(cut.x.power_db[m.peak_ix], 0.0);
  EXPECT_EQ(cut.y.power_db[m.peak_iy], 0.0);
  EXPECT_NEAR(cut.x.coord[m.peak_ix], -2.0, 1e-9);
  EXPECT_NEAR(cut.y.coord[m.peak_iy], 1.0, 1e-9);
  for (double v : cut.x.power_db) EXPECT_LE(v, 0.0);
  for (double v : cut.y.power_db) EXPECT_LE(v, 0.0);
}

// The ceiling of the ideal x-cut outside the mainlobe, recomputed cell by
// cell with the double-loop oracle. Measured at -9.86 dB: the near sidelobes
// of the uniform aperture sit just past the 0.5 m mainlobe radius.
TEST(Cuts, IdealXCutSidelobeCeilingMatchesOracle) {
  const SystemConfig c = noiseless();
  const ArrayGeometry g = ArrayGeometry::ula(64, 0.07);
  const SafMap m = saf_fast_path(c, g, {-2.0, 1.0}, kIdeal, SpatialGrid{});
  const SafCuts cut = cuts(m);
  const auto s = oracle::ula_ideal(64, 100, 0.07, 3.5e9, 180e3, -2.0, 1.0);
  const double peak = oracle::saf_cell(s, 64, 100, 0.07, 3.5e9, 180e3, m.peak_cell.x, m.peak_cell.y);
  double ceiling = -1e9;
  double expected = -1e9;
  for (std::size_t i = 0; i < cut.x.coord.size(); ++i) {
    if (std::abs(cut.x.coord[i] - m.peak_cell.x) <= m.mainlobe_radius) continue;
    ceiling = std::max(ceiling, cut.x.power_db[i]);
    const double p = oracle::saf_cell(s, 64, 100, 0.07, 3.5e9, 180e3, cut.x.coord[i], m.peak_cell.y);
    expected = std::max(expected, 10.0 * std::log10(p / peak));
  }
  EXPECT_NEAR(ceiling, expected, 1e-8);
  EXPECT_LT(ceiling, 0.0);
}

TEST(PmsrSweep, RowsAndMedians) {
  const SystemConfig c = noiseless(16, 20);
  const ArrayGeometry g = ArrayGeometry::ula(16, 0.07);
  const SpatialGrid grid = grid_at(-4.0, 0.5, 0.1, 41, 31);
  const std::vector<double> sigmas{0.2, 0.6};
  const std::vector<std::uint64_t> seeds{1, 2, 3};
  for (NuisanceKind kind : {NuisanceKind::kFrequency, NuisanceKind::kSpatial}) {
    const PmsrSweepResult r = pmsr_sweep(c, g, {-2.0, 1.0}, kind, sigmas, seeds, grid);
    ASSERT_EQ(r.rows.size(), 6u);
    ASSERT_EQ(r.medians.size(), 2u);
    for (int s = 0; s < 2; ++s) {
      std::vector<double> v;
      for (int i = 0; i < 3; ++i) v.push_back(r.rows[s * 3 + i].pmsr_db);
      EXPECT_EQ(r.medians[s].median_pmsr_db, median_lower(v));
    }
  }
}
