// SPDX-License-Identifier: Apache-2.0

#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>

#include "oracles.hpp"
#include "phasecal/calibrator.hpp"
#include "phasecal/errors.hpp"
#include "phasecal/model.hpp"

using namespace phasecal;

namespace {

const UeLocation kUe{-2.0, 1.0};

SystemConfig config(int n, int k, int l, std::optional<double> snr = std::nullopt) {
  SystemConfig c;
  c.num_antennas = n;
  c.num_subcarriers = k;
  c.num_symbols = l;
  c.snr_db = snr;
  return c;
}

Eigen::VectorXcd carrier_steering(const SystemConfig& c, const ArrayGeometry& g) {
  Eigen::VectorXcd v(static_cast<Eigen::Index>(g.size()));
  for (std::size_t n = 0; n < g.size(); ++n) {
    const double d = oracle::dist(g[n].x, g[n].y, kUe.x, kUe.y);
    v[static_cast<Eigen::Index>(n)] = std::polar(1.0, -2.0 * oracle::pi * c.carrier_frequency * d / oracle::c);
  }
  return v;
}

std::vector<double> estimate_errors(int l, std::uint64_t seed) {
  const SystemConfig c = config(8, 20, l, 20.0);
  const ArrayGeometry g = ArrayGeometry::ula(8, 0.07);
  const OffsetRealization r = sample_offsets(OffsetSpec{0.0, oracle::pi / 4.0, 0.0, seed}, 8, 20);
  const CalibrationTables t =
      estimate_frequency_offsets(synthesize_impaired(c, g, kUe, r, seed), c, g, kUe);
  std::vector<double> err;
  for (int n = 0; n < 8; ++n)
    for (int k = 0; k < 20; ++k) err.push_back(oracle::wrap(t.phi_f_hat(n, k) - r.phi_f(n, k)));
  return err;
}

}  // namespace

TEST(Accumulator, LanesMatchTensorAndMean) {
  const SystemConfig c = config(3, 4, 5, 10.0);
  const ArrayGeometry g = ArrayGeometry::ula(3, 0.07);
  const CsiTensor t = synthesize_ideal(c, g, kUe, 2);
  SymbolAccumulator a(3, 4), b(3, 4);
  a.add(t);
  for (int n = 0; n < 3; ++n)
    for (int k = 0; k < 4; ++k) b.add(n, k, t.lane(n, k));
  EXPECT_EQ(a.sum(), b.sum());
  EXPECT_EQ(a.count(2, 3), 5);
  EXPECT_LE((a.mean() - t.symbol_mean()).cwiseAbs().maxCoeff(), 1e-15);
  SymbolAccumulator empty(2, 2);
  EXPECT_THROW(empty.mean(), PreconditionViolation);
  EXPECT_THROW(a.add(0, 4, t.lane(0, 0)), ShapeMismatch);
}

TEST(FrequencyEstimate, NoiselessIdealIsZero) {
  const SystemConfig c = config(64, 100, 1);
  const ArrayGeometry g = ArrayGeometry::ula(64, 0.07);
  const CalibrationTables t = estimate_frequency_offsets(synthesize_ideal(c, g, kUe, 0), c, g, kUe);
  EXPECT_LE(t.phi_f_hat.cwiseAbs().maxCoeff(), 1e-12);
  EXPECT_LE(t.residual_power.maxCoeff(), 1e-12);
  EXPECT_LE((t.ratio_modulus.array() - 1.0).abs().maxCoeff(), 1e-12);
}

TEST(FrequencyEstimate, GlobalRotationRecovered) {
  const SystemConfig c = config(8, 10, 2);
  const ArrayGeometry g = ArrayGeometry::ula(8, 0.07);
  OffsetRealization r = OffsetRealization::zeros(8, 10);
  r.phi_f.setConstant(0.7);
  const CalibrationTables t =
      estimate_frequency_offsets(synthesize_impaired(c, g, kUe, r, 0), c, g, kUe);
  EXPECT_LE((t.phi_f_hat.array() - 0.7).abs().maxCoeff(), 1e-12);
}

TEST(FrequencyEstimate, WrapContinuity) {
  const SystemConfig c = config(2, 3, 1);
  const ArrayGeometry g = ArrayGeometry::ula(2, 0.07);
  for (double phi : {oracle::pi - 1e-6, -oracle::pi + 1e-6}) {
    OffsetRealization r = OffsetRealization::zeros(2, 3);
    r.phi_f.setConstant(phi);
    const CalibrationTables t =
        estimate_frequency_offsets(synthesize_impaired(c, g, kUe, r, 0), c, g, kUe);
    for (int n = 0; n < 2; ++n)
      for (int k = 0; k < 3; ++k) {
        EXPECT_NEAR(t.phi_f_hat(n, k), phi, 1e-9);
        EXPECT_GT(t.phi_f_hat(n, k), -oracle::pi);
        EXPECT_LE(t.phi_f_hat(n, k), oracle::pi);
      }
  }
}

TEST(FrequencyEstimate, NoisyHighSymbolCount) {
  const std::vector<double> err = estimate_errors(10000, 3);
  const auto good = std::count_if(err.begin(), err.end(), [](double e) { return std::abs(e) < 0.01; });
  EXPECT_GE(static_cast<double>(good), 0.99 * static_cast<double>(err.size()));
}

TEST(FrequencyEstimate, ErrorShrinksAsInverseRootL) {
  const double ratio = oracle::stddev(estimate_errors(100, 8)) / oracle::stddev(estimate_errors(10000, 8));
  EXPECT_GE(ratio, 8.0);
  EXPECT_LE(ratio, 12.0);
}

TEST(FrequencyEstimate, ZeroTemplateAndShape) {
  SystemConfig c = config(2, 3, 1);
  c.amplitude_model = AmplitudeModel::kInverseDistance;
  const ArrayGeometry g = ArrayGeometry::ula(2, 0.07);
  EXPECT_THROW(estimate_frequency_offsets(CsiTensor(2, 4, 1, 3.5e9, 180e3), c, g, kUe),
               ShapeMismatch);
  UeLocation far{0.0, 1e308};
  EXPECT_THROW(estimate_frequency_offsets(CsiTensor(2, 3, 1, 3.5e9, 180e3), c, g, far),
               NumericalFailure);
}

TEST(CompensateFrequency, IdentityExactAndEstimated) {
  const SystemConfig c = config(4, 6, 3);
  const ArrayGeometry g = ArrayGeometry::ula(4, 0.07);
  const OffsetRealization r = sample_offsets(OffsetSpec{0.0, 1.0, 0.0, 5}, 4, 6);
  const CsiTensor off = synthesize_impaired(c, g, kUe, r, 0);
  const CsiTensor same = compensate_frequency(off, CalibrationTables::zeros(4, 6));
  EXPECT_TRUE(std::equal(same.data().begin(), same.data().end(), off.data().begin()));

  CalibrationTables exact = CalibrationTables::zeros(4, 6);
  exact.phi_f_hat = r.phi_f;
  const CsiTensor fixed = compensate_frequency(off, exact);
  const Snapshot ideal = ideal_snapshot(c, g, kUe);
  for (int n = 0; n < 4; ++n)
    for (int k = 0; k < 6; ++k)
      for (int l = 0; l < 3; ++l)
        EXPECT_NEAR(oracle::wrap(std::arg(fixed(n, k, l)) - std::arg(ideal(n, k))), 0.0, 1e-12);

  // Noisy capture: the phase left on the clean signal is the estimator error.
  const SystemConfig noisy = config(4, 6, 50, 10.0);
  const CalibrationTables est =
      estimate_frequency_offsets(synthesize_impaired(noisy, g, kUe, r, 1), noisy, g, kUe);
  const CsiTensor clean_fixed = compensate_frequency(synthesize_impaired(config(4, 6, 1), g, kUe, r, 0), est);
  for (int n = 0; n < 4; ++n)
    for (int k = 0; k < 6; ++k)
      EXPECT_NEAR(oracle::wrap(std::arg(clean_fixed(n, k, 0) / ideal(n, k)) -
                               (r.phi_f(n, k) - est.phi_f_hat(n, k))),
                  0.0, 1e-12);

  EXPECT_THROW(compensate_frequency(off, CalibrationTables::zeros(4, 5)), ShapeMismatch);
}

TEST(CommonPhaseSplit, ReconstructsAndCentres) {
  const OffsetRealization r = sample_offsets(OffsetSpec{0.5, 0.6, 0.0, 2}, 5, 30);
  const CommonPhaseSplit s = split_antenna_common_phase(r.phi_f);
  for (int n = 0; n < 5; ++n) {
    std::complex<double> resultant = 0.0;
    for (int k = 0; k < 30; ++k) {
      EXPECT_NEAR(oracle::wrap(s.common[n] + s.varying(n, k) - r.phi_f(n, k)), 0.0, 1e-12);
      resultant += std::polar(1.0, s.varying(n, k));
    }
    EXPECT_NEAR(std::arg(resultant), 0.0, 1e-12);
  }
}

TEST(RangeFilter, IdealPeaksAtRangeModuloAmbiguity) {
  const SystemConfig c = config(64, 100, 1);
  const ArrayGeometry g = ArrayGeometry::ula(64, 0.07);
  const RangeProfile p = range_matched_filter(ideal_snapshot(c, g, kUe), c, 8);
  const double unambiguous = oracle::c / c.subcarrier_spacing;
  EXPECT_NEAR(p.bin_spacing * 8.0, 16.655136555555556, 1e-9);
  EXPECT_NEAR(p.bin_spacing, unambiguous / 800.0, 1e-12);
  ASSERT_EQ(p.profile.cols(), 800);
  for (int n = 0; n < 64; ++n) {
    const double d = std::fmod(oracle::dist(g[n].x, g[n].y, kUe.x, kUe.y), unambiguous);
    EXPECT_LE(std::abs(p.range_of_bin(p.peak_bin[n]) - d), p.bin_spacing) << n;
    EXPECT_NEAR(std::abs(p.los_values[n]), p.profile.row(n).cwiseAbs().maxCoeff(), 0.0);
  }
}

TEST(RangeFilter, FlatSnapshotPeaksAtZero) {
  const SystemConfig c = config(2, 100, 1);
  const RangeProfile p = range_matched_filter(Snapshot::Ones(2, 100), c, 4);
  EXPECT_EQ(p.peak_bin[0], 0);
  EXPECT_NEAR(std::abs(p.los_values[1] - cdouble(100.0, 0.0)), 0.0, 1e-12);
  EXPECT_THROW(range_matched_filter(Snapshot::Ones(2, 100), c, 0), InvalidArgument);
}

TEST(SpatialEstimate, ExactRecovery) {
  const SystemConfig c = config(64, 100, 1);
  const ArrayGeometry g = ArrayGeometry::ula(64, 0.07);
  const Eigen::VectorXcd ideal = carrier_steering(c, g);
  EXPECT_LE(estimate_spatial_offsets(ideal, c, g, kUe).cwiseAbs().maxCoeff(), 1e-9);
  const OffsetRealization r = sample_offsets(OffsetSpec{0.0, 0.0, oracle::pi, 4}, 64, 1);
  Eigen::VectorXcd rotated = ideal;
  for (int n = 0; n < 64; ++n) rotated[n] *= 3.0 * std::polar(1.0, r.phi_a[n]);
  const Eigen::VectorXd est = estimate_spatial_offsets(rotated, c, g, kUe);
  for (int n = 0; n < 64; ++n) EXPECT_NEAR(oracle::wrap(est[n] - r.phi_a[n]), 0.0, 1e-9);
  Eigen::VectorXcd zero = ideal;
  zero[5] = 0.0;
  EXPECT_THROW(estimate_spatial_offsets(zero, c, g, kUe), NumericalFailure);
}

TEST(SpatialCompensation, IdentityAndExact) {
  const SystemConfig c = config(8, 10, 1);
  const ArrayGeometry g = ArrayGeometry::ula(8, 0.07);
  const Eigen::VectorXcd ideal = carrier_steering(c, g);
  EXPECT_EQ(compensate_spatial(ideal, Eigen::VectorXd::Zero(8)), ideal);
  const OffsetRealization r = sample_offsets(OffsetSpec{0.0, 0.0, 2.0, 1}, 8, 1);
  Eigen::VectorXcd rotated = ideal;
  for (int n = 0; n < 8; ++n) rotated[n] *= std::polar(1.0, r.phi_a[n]);
  const Eigen::VectorXcd fixed = compensate_spatial(rotated, r.phi_a);
  for (int n = 0; n < 8; ++n) EXPECT_NEAR(oracle::wrap(std::arg(fixed[n] / ideal[n])), 0.0, 1e-12);
  EXPECT_THROW(compensate_spatial(ideal, Eigen::VectorXd::Zero(7)), ShapeMismatch);
}

TEST(Pipeline, NoiselessOffsetsOnlyRecoversSteering) {
  const SystemConfig c = config(64, 100, 1);
  const ArrayGeometry g = ArrayGeometry::ula(64, 0.07);
  const OffsetRealization r = sample_offsets(OffsetSpec{0.0, oracle::pi / 4.0, oracle::pi, 9}, 64, 100);
  const CalibrationOutcome out = calibrate_pipeline(synthesize_impaired(c, g, kUe, r, 0), c, g, kUe);
  const Eigen::VectorXcd ideal = carrier_steering(c, g);
  for (int n = 0; n < 64; ++n) {
    const cdouble unit = out.los_calibrated[n] / std::abs(out.los_calibrated[n]);
    EXPECT_NEAR(std::abs(unit - ideal[n]), 0.0, 1e-10);
  }
  for (int n = 0; n < 64; ++n)
    for (int k = 0; k < 100; ++k) {
      EXPECT_GT(out.tables.phi_f_hat(n, k), -oracle::pi);
      EXPECT_LE(out.tables.phi_f_hat(n, k), oracle::pi);
    }
}

TEST(Pipeline, SpatialOffsetsWithinTolerance) {
  SystemConfig c = config(64, 100, 200, 20.0);
  const ArrayGeometry g = ArrayGeometry::ula(64, 0.07);
  const OffsetRealization r = sample_offsets(OffsetSpec{0.0, 0.0, oracle::pi, 12}, 64, 100);
  PipelineOptions opt;
  opt.oversampling = 64;
  const CalibrationOutcome out = calibrate_pipeline(synthesize_impaired(c, g, kUe, r, 3), c, g, kUe, opt);
  double worst = 0.0;
  for (int n = 0; n < 64; ++n)
    worst = std::max(worst, std::abs(oracle::wrap(out.tables.phi_a_hat[n] - r.phi_a[n])));
  EXPECT_LT(worst, 0.05);
}

TEST(Pipeline, CoherenceAfterCompensation) {
  SystemConfig c = config(64, 100, 100, 20.0);
  const ArrayGeometry g = ArrayGeometry::ula(64, 0.07);
  const OffsetRealization r = sample_offsets(OffsetSpec{0.0, oracle::pi / 4.0, oracle::pi, 4}, 64, 100);
  const CalibrationOutcome out = calibrate_pipeline(synthesize_impaired(c, g, kUe, r, 4), c, g, kUe);
  const Eigen::VectorXcd ideal = carrier_steering(c, g);
  cdouble coherent = 0.0;
  double total = 0.0;
  for (int n = 0; n < 64; ++n) {
    coherent += out.los_calibrated[n] * std::conj(ideal[n]);
    total += std::abs(out.los_calibrated[n]);
  }
  EXPECT_GE(std::abs(coherent), 0.95 * total);
}

TEST(Tables, CsvRoundTrip) {
  const auto dir = std::filesystem::temp_directory_path() / "phasecal_tables_test";
  std::filesystem::create_directories(dir);
  const OffsetRealization r = sample_offsets(OffsetSpec{0.0, 1.0, 2.0, 3}, 4, 5);
  write_frequency_table(dir / "f.csv", r.phi_f, "note");
  write_spatial_table(dir / "a.csv", r.phi_a);
  EXPECT_EQ(read_frequency_table(dir / "f.csv"), r.phi_f);
  EXPECT_EQ(read_spatial_table(dir / "a.csv"), r.phi_a);
  {
    std::ofstream bad(dir / "bad.csv");
    bad << "n,phi_a_hat\n0,abc\n";
  }
  EXPECT_THROW(read_spatial_table(dir / "bad.csv"), DataError);
  EXPECT_THROW(read_frequency_table(dir / "a.csv"), DataError);
  EXPECT_THROW(read_frequency_table(dir / "missing.csv"), DataError);
  std::filesystem::remove_all(dir);
}
