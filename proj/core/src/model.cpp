// SPDX-License-Identifier: Apache-2.0

#include "phasecal/model.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <string>

#include "phasecal/errors.hpp"
#include "phasecal/rng.hpp"

namespace phasecal {

namespace {

bool positive_finite(double v) { return std::isfinite(v) && v > 0.0; }

}  // namespace

// ---------- SystemConfig ----------

void SystemConfig::validate() const {
  if (num_subcarriers < 1) throw InvalidArgument("num_subcarriers must be >= 1");
  if (num_antennas < 2) throw InvalidArgument("num_antennas must be >= 2");
  if (num_symbols < 1) throw InvalidArgument("num_symbols must be >= 1");
  if (!positive_finite(carrier_frequency))
    throw InvalidArgument("carrier_frequency must be positive");
  if (!positive_finite(subcarrier_spacing))
    throw InvalidArgument("subcarrier_spacing must be positive");
  if (!positive_finite(antenna_spacing)) throw InvalidArgument("antenna_spacing must be positive");
  if (snr_db && !std::isfinite(*snr_db)) throw InvalidArgument("snr_db must be finite");
}

double SystemConfig::noise_variance() const {
  if (!snr_db) return 0.0;
  return 1.0 / std::pow(10.0, *snr_db / 10.0);
}

// ---------- geometry ----------

double distance(const Position& a, const UeLocation& b) { return std::hypot(b.x - a.x, b.y - a.y); }

ArrayGeometry::ArrayGeometry(std::vector<Position> positions) : positions_(std::move(positions)) {
  if (positions_.size() < 2) throw InvalidArgument("array needs at least two antennas");
  for (std::size_t i = 0; i < positions_.size(); ++i) {
    const auto& p = positions_[i];
    if (!std::isfinite(p.x) || !std::isfinite(p.y))
      throw InvalidArgument("antenna position " + std::to_string(i) + " is not finite");
    for (std::size_t j = 0; j < i; ++j) {
      if (positions_[j].x == p.x && positions_[j].y == p.y)
        throw InvalidArgument("antennas " + std::to_string(j) + " and " + std::to_string(i) +
                              " coincide");
    }
  }
}

ArrayGeometry ArrayGeometry::ula(int num_antennas, double spacing) {
  if (num_antennas < 2) throw InvalidArgument("ULA needs at least two antennas");
  if (!positive_finite(spacing)) throw InvalidArgument("ULA spacing must be positive");
  std::vector<Position> positions(static_cast<std::size_t>(num_antennas));
  const double centre = 0.5 * (num_antennas - 1);
  for (int n = 0; n < num_antennas; ++n) positions[n] = {(n - centre) * spacing, 0.0};
  ArrayGeometry geometry(std::move(positions));
  geometry.ula_spacing_ = spacing;
  return geometry;
}

// ---------- offsets ----------

double OffsetSpec::spatial_std() const { return spatial_half_width / std::sqrt(3.0); }

OffsetSpec OffsetSpec::from_spatial_std(double sigma, std::uint64_t seed) {
  OffsetSpec spec;
  spec.spatial_half_width = std::sqrt(3.0) * sigma;
  spec.seed = seed;
  return spec;
}

void OffsetSpec::validate() const {
  if (!std::isfinite(freq_mean)) throw InvalidArgument("freq_mean must be finite");
  if (!std::isfinite(freq_std) || freq_std < 0.0) throw InvalidArgument("freq_std must be >= 0");
  if (!std::isfinite(spatial_half_width) || spatial_half_width < 0.0 || spatial_half_width > kPi)
    throw InvalidArgument("spatial_half_width must lie in [0, pi]");
}

OffsetRealization OffsetRealization::zeros(int num_antennas, int num_subcarriers) {
  return {Eigen::MatrixXd::Zero(num_antennas, num_subcarriers),
          Eigen::VectorXd::Zero(num_antennas)};
}

// ---------- CsiTensor ----------

CsiTensor::CsiTensor(int num_antennas, int num_subcarriers, int num_symbols,
                     double carrier_frequency, double subcarrier_spacing)
    : n_(num_antennas),
      k_(num_subcarriers),
      l_(num_symbols),
      carrier_frequency_(carrier_frequency),
      subcarrier_spacing_(subcarrier_spacing) {
  if (n_ < 1 || k_ < 1 || l_ < 1) throw InvalidArgument("CSI tensor dimensions must be >= 1");
  data_.assign(static_cast<std::size_t>(n_) * k_ * l_, cdouble{});
}

CsiTensor::CsiTensor(const SystemConfig& config)
    : CsiTensor(config.num_antennas, config.num_subcarriers, config.num_symbols,
                config.carrier_frequency, config.subcarrier_spacing) {}

Snapshot CsiTensor::symbol(int l) const {
  if (l < 0 || l >= l_) throw InvalidArgument("symbol index out of range");
  Snapshot out(n_, k_);
  for (int n = 0; n < n_; ++n)
    for (int k = 0; k < k_; ++k) out(n, k) = (*this)(n, k, l);
  return out;
}

Snapshot CsiTensor::symbol_mean() const {
  Snapshot out(n_, k_);
  for (int n = 0; n < n_; ++n) {
    for (int k = 0; k < k_; ++k) {
      const auto samples = lane(n, k);
      out(n, k) = std::accumulate(samples.begin(), samples.end(), cdouble{}) /
                  static_cast<double>(l_);
    }
  }
  return out;
}

double wrap_phase(double phi) {
  double wrapped = std::remainder(phi, kTwoPi);  // [-pi, pi]
  if (wrapped <= -kPi) wrapped += kTwoPi;
  return wrapped;
}

// ---------- signal model ----------

Eigen::VectorXd distances(const ArrayGeometry& geometry, const UeLocation& loc) {
  if (!std::isfinite(loc.x) || !std::isfinite(loc.y))
    throw InvalidArgument("UE location must be finite");
  Eigen::VectorXd d(static_cast<Eigen::Index>(geometry.size()));
  for (std::size_t n = 0; n < geometry.size(); ++n) {
    d[n] = distance(geometry[n], loc);
    if (d[n] == 0.0)
      throw CoincidentLocation("UE location coincides with antenna " + std::to_string(n));
  }
  return d;
}

Eigen::VectorXd subcarrier_frequencies(const SystemConfig& config) {
  if (config.num_subcarriers < 1) throw InvalidArgument("num_subcarriers must be >= 1");
  Eigen::VectorXd f(config.num_subcarriers);
  for (int k = 0; k < config.num_subcarriers; ++k)
    f[k] = config.carrier_frequency + config.subcarrier_spacing * (k + 1);
  return f;
}

Eigen::VectorXd amplitudes(const SystemConfig& config, const Eigen::VectorXd& d) {
  switch (config.amplitude_model) {
    case AmplitudeModel::kUnit:
      return Eigen::VectorXd::Ones(d.size());
    case AmplitudeModel::kInverseDistance:
      return d.cwiseInverse();
  }
  return Eigen::VectorXd::Ones(d.size());
}

Snapshot ideal_snapshot(const SystemConfig& config, const ArrayGeometry& geometry,
                        const UeLocation& loc) {
  if (static_cast<int>(geometry.size()) != config.num_antennas)
    throw ShapeMismatch("geometry has " + std::to_string(geometry.size()) +
                        " antennas, config expects " + std::to_string(config.num_antennas));
  const Eigen::VectorXd d = distances(geometry, loc);
  const Eigen::VectorXd f = subcarrier_frequencies(config);
  const Eigen::VectorXd alpha = amplitudes(config, d);
  Snapshot mu(d.size(), f.size());
  for (Eigen::Index n = 0; n < d.size(); ++n)
    for (Eigen::Index k = 0; k < f.size(); ++k)
      mu(n, k) = std::polar(alpha[n], -kTwoPi * f[k] * d[n] / kSpeedOfLight);
  return mu;
}

CaptureSynthesizer::CaptureSynthesizer(const SystemConfig& config, const ArrayGeometry& geometry,
                                       const UeLocation& loc,
                                       std::optional<OffsetRealization> offsets,
                                       std::uint64_t seed)
    : config_(config), noise_variance_(config.noise_variance()), seed_(seed) {
  config_.validate();
  mean_ = ideal_snapshot(config_, geometry, loc);
  if (offsets) {
    if (offsets->num_antennas() != config_.num_antennas ||
        offsets->num_subcarriers() != config_.num_subcarriers ||
        offsets->phi_a.size() != config_.num_antennas)
      throw ShapeMismatch("offset realization does not match the configured N x K");
    for (int n = 0; n < config_.num_antennas; ++n)
      for (int k = 0; k < config_.num_subcarriers; ++k)
        mean_(n, k) *= std::polar(1.0, offsets->phi_f(n, k) + offsets->phi_a[n]);
  }
}

void CaptureSynthesizer::for_each_lane(const LaneFn& fn) const {
  std::vector<cdouble> lane(static_cast<std::size_t>(config_.num_symbols));
  for (int n = 0; n < config_.num_antennas; ++n) {
    Substream noise(seed_, StreamId::kNoise, static_cast<std::uint32_t>(n));
    for (int k = 0; k < config_.num_subcarriers; ++k) {
      const cdouble mu = mean_(n, k);
      if (noise_variance_ > 0.0) {
        for (auto& sample : lane) sample = mu + noise.complex_normal(noise_variance_);
      } else {
        std::fill(lane.begin(), lane.end(), mu);
      }
      fn(n, k, lane);
    }
  }
}

namespace {

CsiTensor fill_tensor(const SystemConfig& config, const CaptureSynthesizer& synth) {
  CsiTensor csi(config);
  synth.for_each_lane([&](int n, int k, std::span<const cdouble> lane) {
    std::copy(lane.begin(), lane.end(), csi.lane(n, k).begin());
  });
  return csi;
}

}  // namespace

CsiTensor synthesize_ideal(const SystemConfig& config, const ArrayGeometry& geometry,
                           const UeLocation& loc, std::uint64_t seed) {
  return fill_tensor(config, CaptureSynthesizer(config, geometry, loc, std::nullopt, seed));
}

CsiTensor synthesize_impaired(const SystemConfig& config, const ArrayGeometry& geometry,
                              const UeLocation& loc, const OffsetRealization& offsets,
                              std::uint64_t seed) {
  return fill_tensor(config, CaptureSynthesizer(config, geometry, loc, offsets, seed));
}

OffsetRealization sample_offsets(const OffsetSpec& spec, int num_antennas, int num_subcarriers) {
  spec.validate();
  if (num_antennas < 1 || num_subcarriers < 1)
    throw InvalidArgument("offset table dimensions must be >= 1");
  OffsetRealization out = OffsetRealization::zeros(num_antennas, num_subcarriers);

  Substream freq(spec.seed, StreamId::kFrequencyOffsets);
  for (int n = 0; n < num_antennas; ++n)
    for (int k = 0; k < num_subcarriers; ++k)
      out.phi_f(n, k) = spec.freq_std > 0.0 ? freq.normal(spec.freq_mean, spec.freq_std)
                                            : spec.freq_mean;

  Substream spatial(spec.seed, StreamId::kSpatialOffsets);
  for (int n = 0; n < num_antennas; ++n)
    out.phi_a[n] = spec.spatial_half_width > 0.0
                       ? spatial.uniform(-spec.spatial_half_width, spec.spatial_half_width)
                       : 0.0;
  return out;
}

CsiTensor apply_offsets(const CsiTensor& csi, const OffsetRealization& offsets) {
  if (offsets.num_antennas() != csi.num_antennas() ||
      offsets.num_subcarriers() != csi.num_subcarriers() ||
      offsets.phi_a.size() != csi.num_antennas())
    throw ShapeMismatch("offset realization does not match the CSI tensor shape");
  CsiTensor out = csi;
  for (int n = 0; n < csi.num_antennas(); ++n) {
    for (int k = 0; k < csi.num_subcarriers(); ++k) {
      const cdouble rot = std::polar(1.0, offsets.phi_f(n, k) + offsets.phi_a[n]);
      for (auto& sample : out.lane(n, k)) sample *= rot;
    }
  }
  return out;
}

OffsetStatistics offset_statistics(std::span<const double> values, int bins) {
  if (values.empty()) throw EmptyInput("offset_statistics needs at least one value");
  if (bins < 1) throw InvalidArgument("histogram needs at least one bin");

  OffsetStatistics stats;
  const auto [lo, hi] = std::minmax_element(values.begin(), values.end());
  stats.min = *lo;
  stats.max = *hi;
  const double count = static_cast<double>(values.size());
  stats.mean = std::accumulate(values.begin(), values.end(), 0.0) / count;
  double sq = 0.0;
  for (double v : values) sq += (v - stats.mean) * (v - stats.mean);
  stats.stddev = std::sqrt(sq / count);

  stats.bin_edges.resize(static_cast<std::size_t>(bins) + 1);
  const double width = (stats.max - stats.min) / bins;
  for (int b = 0; b <= bins; ++b) stats.bin_edges[b] = stats.min + width * b;
  stats.bin_edges.back() = stats.max;
  stats.counts.assign(static_cast<std::size_t>(bins), 0);
  for (double v : values) {
    int b = width > 0.0 ? static_cast<int>((v - stats.min) / width) : 0;
    b = std::clamp(b, 0, bins - 1);
    ++stats.counts[b];
  }
  return stats;
}

}  // namespace phasecal
