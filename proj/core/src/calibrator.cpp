// SPDX-License-Identifier: Apache-2.0

#include "phasecal/calibrator.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <sstream>
#include <string>
#include <tuple>
#include <vector>

#include "phasecal/errors.hpp"
#include "phasecal/model.hpp"

namespace phasecal {

// ---------- accumulator ----------

SymbolAccumulator::SymbolAccumulator(int num_antennas, int num_subcarriers) {
  if (num_antennas < 1 || num_subcarriers < 1)
    throw InvalidArgument("accumulator dimensions must be >= 1");
  sum_ = Snapshot::Zero(num_antennas, num_subcarriers);
  energy_ = Eigen::MatrixXd::Zero(num_antennas, num_subcarriers);
  count_ = Eigen::Matrix<long long, Eigen::Dynamic, Eigen::Dynamic>::Zero(num_antennas,
                                                                          num_subcarriers);
}

void SymbolAccumulator::add(int n, int k, std::span<const cdouble> samples) {
  if (n < 0 || k < 0 || n >= num_antennas() || k >= num_subcarriers())
    throw ShapeMismatch("lane index outside the accumulator");
  cdouble s{};
  double e = 0.0;
  for (const cdouble& v : samples) {
    s += v;
    e += std::norm(v);
  }
  sum_(n, k) += s;
  energy_(n, k) += e;
  count_(n, k) += static_cast<long long>(samples.size());
}

void SymbolAccumulator::add(const CsiTensor& csi) {
  if (csi.num_antennas() != num_antennas() || csi.num_subcarriers() != num_subcarriers())
    throw ShapeMismatch("CSI tensor does not match the accumulator");
  for (int n = 0; n < csi.num_antennas(); ++n)
    for (int k = 0; k < csi.num_subcarriers(); ++k) add(n, k, csi.lane(n, k));
}

Snapshot SymbolAccumulator::mean() const {
  Snapshot out(sum_.rows(), sum_.cols());
  for (Eigen::Index n = 0; n < sum_.rows(); ++n) {
    for (Eigen::Index k = 0; k < sum_.cols(); ++k) {
      if (count_(n, k) == 0) throw PreconditionViolation("accumulator lane has no symbols");
      out(n, k) = sum_(n, k) / static_cast<double>(count_(n, k));
    }
  }
  return out;
}

CalibrationTables CalibrationTables::zeros(int num_antennas, int num_subcarriers) {
  return {Eigen::MatrixXd::Zero(num_antennas, num_subcarriers),
          Eigen::VectorXd::Zero(num_antennas),
          Eigen::MatrixXd::Zero(num_antennas, num_subcarriers),
          Eigen::MatrixXd::Ones(num_antennas, num_subcarriers)};
}

// ---------- frequency offsets ----------

CalibrationTables estimate_frequency_offsets(const SymbolAccumulator& measured,
                                             const SystemConfig& config,
                                             const ArrayGeometry& geometry,
                                             const UeLocation& true_loc) {
  const Snapshot tmpl = ideal_snapshot(config, geometry, true_loc);
  if (tmpl.rows() != measured.num_antennas() || tmpl.cols() != measured.num_subcarriers())
    throw ShapeMismatch("measured CSI does not match the configured N x K");

  CalibrationTables tables = CalibrationTables::zeros(static_cast<int>(tmpl.rows()),
                                                      static_cast<int>(tmpl.cols()));
  for (Eigen::Index n = 0; n < tmpl.rows(); ++n) {
    for (Eigen::Index k = 0; k < tmpl.cols(); ++k) {
      const double count = static_cast<double>(measured.count(n, k));
      if (count == 0.0) throw PreconditionViolation("no symbols for lane");
      const double template_energy = count * std::norm(tmpl(n, k));  // r^H r
      if (!(template_energy > 0.0))
        throw NumericalFailure("model template vanishes at antenna " + std::to_string(n));
      const cdouble cross = std::conj(tmpl(n, k)) * measured.sum()(n, k);  // r^H r~
      const cdouble ratio = cross / template_energy;
      tables.phi_f_hat(n, k) = wrap_phase(std::arg(ratio));
      tables.ratio_modulus(n, k) = std::abs(ratio);
      const double residual = measured.energy()(n, k) - 2.0 * std::abs(cross) + template_energy;
      tables.residual_power(n, k) = std::max(0.0, residual) / count;
    }
  }
  return tables;
}

CalibrationTables estimate_frequency_offsets(const CsiTensor& measured, const SystemConfig& config,
                                             const ArrayGeometry& geometry,
                                             const UeLocation& true_loc) {
  SymbolAccumulator acc(measured.num_antennas(), measured.num_subcarriers());
  acc.add(measured);
  return estimate_frequency_offsets(acc, config, geometry, true_loc);
}

CommonPhaseSplit split_antenna_common_phase(const Eigen::MatrixXd& phi_f) {
  CommonPhaseSplit out{Eigen::VectorXd::Zero(phi_f.rows()),
                       Eigen::MatrixXd::Zero(phi_f.rows(), phi_f.cols())};
  for (Eigen::Index n = 0; n < phi_f.rows(); ++n) {
    cdouble resultant{};
    for (Eigen::Index k = 0; k < phi_f.cols(); ++k) resultant += std::polar(1.0, phi_f(n, k));
    out.common[n] = std::abs(resultant) > 0.0 ? wrap_phase(std::arg(resultant)) : 0.0;
    for (Eigen::Index k = 0; k < phi_f.cols(); ++k)
      out.varying(n, k) = wrap_phase(phi_f(n, k) - out.common[n]);
  }
  return out;
}

CsiTensor compensate_frequency(const CsiTensor& measured, const CalibrationTables& tables) {
  if (tables.phi_f_hat.rows() != measured.num_antennas() ||
      tables.phi_f_hat.cols() != measured.num_subcarriers())
    throw ShapeMismatch("frequency table does not match the CSI tensor");
  CsiTensor out = measured;
  for (int n = 0; n < measured.num_antennas(); ++n) {
    for (int k = 0; k < measured.num_subcarriers(); ++k) {
      const cdouble rot = std::polar(1.0, -tables.phi_f_hat(n, k));
      for (auto& v : out.lane(n, k)) v *= rot;
    }
  }
  return out;
}

Snapshot compensate_frequency(const Snapshot& measured, const CalibrationTables& tables) {
  if (tables.phi_f_hat.rows() != measured.rows() || tables.phi_f_hat.cols() != measured.cols())
    throw ShapeMismatch("frequency table does not match the snapshot");
  Snapshot out = measured;
  for (Eigen::Index n = 0; n < out.rows(); ++n)
    for (Eigen::Index k = 0; k < out.cols(); ++k)
      out(n, k) *= std::polar(1.0, -tables.phi_f_hat(n, k));
  return out;
}

// ---------- range matched filter ----------

RangeProfile range_matched_filter(const Snapshot& snapshot, const SystemConfig& config,
                                  int oversampling) {
  if (oversampling < 1) throw InvalidArgument("oversampling must be >= 1");
  if (snapshot.cols() != config.num_subcarriers)
    throw ShapeMismatch("snapshot must have K columns");
  const int num_k = static_cast<int>(snapshot.cols());
  const int bins = num_k * oversampling;

  // exp(j 2 pi m / bins); subcarrier k (1-based) at bin b uses m = k b mod bins.
  std::vector<cdouble> twiddle(static_cast<std::size_t>(bins));
  for (int m = 0; m < bins; ++m) twiddle[m] = std::polar(1.0, kTwoPi * m / bins);

  RangeProfile out;
  out.bin_spacing = kSpeedOfLight / (num_k * config.subcarrier_spacing * oversampling);
  out.profile = Eigen::MatrixXcd::Zero(snapshot.rows(), bins);
  out.peak_bin.assign(static_cast<std::size_t>(snapshot.rows()), 0);
  out.los_values = Eigen::VectorXcd::Zero(snapshot.rows());

  for (Eigen::Index n = 0; n < snapshot.rows(); ++n) {
    double best = -1.0;
    for (int b = 0; b < bins; ++b) {
      cdouble acc{};
      for (int k = 0; k < num_k; ++k) {
        const auto m = static_cast<std::size_t>((static_cast<long long>(k + 1) * b) % bins);
        acc += snapshot(n, k) * twiddle[m];
      }
      out.profile(n, b) = acc;
      const double mag = std::norm(acc);
      if (mag > best) {
        best = mag;
        out.peak_bin[n] = b;
      }
    }
    out.los_values[n] = out.profile(n, out.peak_bin[n]);
  }
  return out;
}

// ---------- spatial offsets ----------

Eigen::VectorXd estimate_spatial_offsets(const Eigen::VectorXcd& los_values,
                                         const SystemConfig& config,
                                         const ArrayGeometry& geometry,
                                         const UeLocation& true_loc) {
  if (los_values.size() != static_cast<Eigen::Index>(geometry.size()))
    throw ShapeMismatch("LoS vector must have one entry per antenna");
  const Eigen::VectorXd d = distances(geometry, true_loc);
  Eigen::VectorXd phi(los_values.size());
  for (Eigen::Index n = 0; n < los_values.size(); ++n) {
    if (std::abs(los_values[n]) == 0.0)
      throw NumericalFailure("LoS value of antenna " + std::to_string(n) + " is zero");
    const cdouble ideal = std::polar(1.0, -kTwoPi * config.carrier_frequency * d[n] / kSpeedOfLight);
    phi[n] = wrap_phase(std::arg(los_values[n] * std::conj(ideal)));
  }
  return phi;
}

Eigen::VectorXcd compensate_spatial(const Eigen::VectorXcd& los_values,
                                    const Eigen::VectorXd& phi_a_hat) {
  if (los_values.size() != phi_a_hat.size())
    throw ShapeMismatch("spatial table does not match the LoS vector");
  Eigen::VectorXcd out(los_values.size());
  for (Eigen::Index n = 0; n < los_values.size(); ++n)
    out[n] = los_values[n] * std::polar(1.0, -phi_a_hat[n]);
  return out;
}

// ---------- pipeline ----------

CalibrationOutcome calibrate_pipeline(const SymbolAccumulator& measured, const SystemConfig& config,
                                      const ArrayGeometry& geometry, const UeLocation& true_loc,
                                      const PipelineOptions& options) {
  CalibrationOutcome out;
  const CalibrationTables raw = estimate_frequency_offsets(measured, config, geometry, true_loc);
  out.raw_phi_f = raw.phi_f_hat;

  out.tables = raw;
  if (options.compensate_frequency) {
    out.tables.phi_f_hat = split_antenna_common_phase(raw.phi_f_hat).varying;
  } else {
    out.tables.phi_f_hat.setZero();
  }

  out.mean_snapshot = measured.mean();
  out.frequency_snapshot = compensate_frequency(out.mean_snapshot, out.tables);

  out.uncalibrated_profile = range_matched_filter(out.mean_snapshot, config, options.oversampling);
  out.frequency_profile = range_matched_filter(out.frequency_snapshot, config, options.oversampling);
  out.los_uncalibrated = out.uncalibrated_profile.los_values;
  out.los_frequency = out.frequency_profile.los_values;

  out.tables.phi_a_hat = estimate_spatial_offsets(out.los_frequency, config, geometry, true_loc);
  out.los_calibrated = compensate_spatial(out.los_frequency, out.tables.phi_a_hat);
  return out;
}

CalibrationOutcome calibrate_pipeline(const CsiTensor& measured, const SystemConfig& config,
                                      const ArrayGeometry& geometry, const UeLocation& true_loc,
                                      const PipelineOptions& options) {
  SymbolAccumulator acc(measured.num_antennas(), measured.num_subcarriers());
  acc.add(measured);
  return calibrate_pipeline(acc, config, geometry, true_loc, options);
}

// ---------- CSV tables ----------

namespace {

std::ofstream open_for_write(const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw DataError("cannot open " + path.string() + " for writing");
  out.precision(17);
  return out;
}

void write_comment(std::ostream& out, const std::string& comment) {
  if (comment.empty()) return;
  std::stringstream ss(comment);
  for (std::string line; std::getline(ss, line);) out << "# " << line << '\n';
}

std::vector<std::vector<std::string>> read_csv_rows(const std::filesystem::path& path,
                                                    const std::string& expected_header) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open " + path.string());
  std::vector<std::vector<std::string>> rows;
  std::string line;
  bool header_seen = false;
  while (std::getline(in, line)) {
    if (line.empty() || line[0] == '#') continue;
    if (!header_seen) {
      if (line != expected_header)
        throw DataError(path.string() + ": expected header '" + expected_header + "'");
      header_seen = true;
      continue;
    }
    std::vector<std::string> fields;
    std::stringstream ss(line);
    std::string field;
    while (std::getline(ss, field, ',')) fields.push_back(field);
    rows.push_back(std::move(fields));
  }
  if (!header_seen) throw DataError(path.string() + ": missing header");
  return rows;
}

}  // namespace

void write_frequency_table(const std::filesystem::path& path, const Eigen::MatrixXd& phi_f_hat,
                           const std::string& comment) {
  std::ofstream out = open_for_write(path);
  write_comment(out, comment);
  out << "n,k,phi_f_hat\n";
  for (Eigen::Index n = 0; n < phi_f_hat.rows(); ++n)
    for (Eigen::Index k = 0; k < phi_f_hat.cols(); ++k)
      out << n << ',' << k + 1 << ',' << phi_f_hat(n, k) << '\n';
}

void write_spatial_table(const std::filesystem::path& path, const Eigen::VectorXd& phi_a_hat,
                         const std::string& comment) {
  std::ofstream out = open_for_write(path);
  write_comment(out, comment);
  out << "n,phi_a_hat\n";
  for (Eigen::Index n = 0; n < phi_a_hat.size(); ++n) out << n << ',' << phi_a_hat[n] << '\n';
}

Eigen::MatrixXd read_frequency_table(const std::filesystem::path& path) {
  const auto rows = read_csv_rows(path, "n,k,phi_f_hat");
  long max_n = -1;
  long max_k = 0;
  std::vector<std::tuple<long, long, double>> entries;
  try {
    for (const auto& r : rows) {
      if (r.size() != 3) throw DataError(path.string() + ": expected 3 columns");
      entries.emplace_back(std::stol(r[0]), std::stol(r[1]), std::stod(r[2]));
      max_n = std::max(max_n, std::get<0>(entries.back()));
      max_k = std::max(max_k, std::get<1>(entries.back()));
    }
  } catch (const std::logic_error&) {
    throw DataError(path.string() + ": malformed number");
  }
  if (entries.empty()) throw DataError(path.string() + ": no rows");
  if (static_cast<long>(entries.size()) != (max_n + 1) * max_k)
    throw DataError(path.string() + ": table is not a complete N x K grid");
  Eigen::MatrixXd table = Eigen::MatrixXd::Constant(max_n + 1, max_k, std::nan(""));
  for (const auto& [n, k, v] : entries) {
    if (n < 0 || k < 1) throw DataError(path.string() + ": index out of range");
    table(n, k - 1) = v;
  }
  if (table.hasNaN()) throw DataError(path.string() + ": missing entries");
  return table;
}

Eigen::VectorXd read_spatial_table(const std::filesystem::path& path) {
  const auto rows = read_csv_rows(path, "n,phi_a_hat");
  Eigen::VectorXd table = Eigen::VectorXd::Constant(static_cast<Eigen::Index>(rows.size()), std::nan(""));
  try {
    for (const auto& r : rows) {
      if (r.size() != 2) throw DataError(path.string() + ": expected 2 columns");
      const long n = std::stol(r[0]);
      if (n < 0 || n >= table.size()) throw DataError(path.string() + ": index out of range");
      table[n] = std::stod(r[1]);
    }
  } catch (const std::logic_error&) {
    throw DataError(path.string() + ": malformed number");
  }
  if (table.size() == 0 || table.hasNaN()) throw DataError(path.string() + ": missing entries");
  return table;
}

}  // namespace phasecal
