// SPDX-License-Identifier: Apache-2.0

#include "phasecal/runners.hpp"

#include <cmath>
#include <cstdio>
#include <fstream>
#include <limits>
#include <sstream>
#include <string>

#include <json.hpp>

#include "phasecal/calibrator.hpp"
#include "phasecal/crlb.hpp"
#include "phasecal/csib.hpp"
#include "phasecal/errors.hpp"
#include "phasecal/locator.hpp"
#include "phasecal/model.hpp"
#include "phasecal/saf.hpp"

namespace phasecal {

using nlohmann::json;
namespace fs = std::filesystem;

namespace {

std::string num(double v) {
  if (std::isnan(v)) return "nan";
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

void ensure_dir(const fs::path& dir) {
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec) throw DataError("cannot create directory " + dir.string() + ": " + ec.message());
}

class CsvFile {
 public:
  CsvFile(const fs::path& path, const std::string& schema, const ExperimentConfig& config,
          const std::string& columns)
      : out_(path, std::ios::binary | std::ios::trunc), path_(path) {
    if (!out_) throw DataError("cannot open " + path.string() + " for writing");
    out_ << "# schema: " << schema << '\n'
         << "# config: " << to_json(config) << '\n'
         << columns << '\n';
  }

  std::ostream& row() { return out_; }

  void close() {
    out_.flush();
    if (!out_) throw DataError("write failed: " + path_.string());
  }

 private:
  std::ofstream out_;
  fs::path path_;
};

void write_json(const fs::path& path, const json& j) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw DataError("cannot open " + path.string() + " for writing");
  out << j.dump(2) << '\n';
  if (!out) throw DataError("write failed: " + path.string());
}

std::string sigma_tag(double sigma) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.4f", sigma);
  std::string s = buf;
  for (char& c : s)
    if (c == '.') c = 'p';
  return s;
}

void write_map(const fs::path& path, const std::string& schema, const ExperimentConfig& config,
               const SafMap& map) {
  CsvFile csv(path, schema, config, "x,y,power_db");
  const double floor = map.peak_power * 1e-30;
  for (int ix = 0; ix < map.power.rows(); ++ix)
    for (int iy = 0; iy < map.power.cols(); ++iy)
      csv.row() << num(map.grid.x(ix)) << ',' << num(map.grid.y(iy)) << ','
                << num(10.0 * std::log10(std::max(map.power(ix, iy), floor) / map.peak_power))
                << '\n';
  csv.close();
}

void write_cut(const fs::path& path, const ExperimentConfig& config, const Cut& cut) {
  CsvFile csv(path, "phasecal-saf-cut/1", config, "coord,power_db");
  for (std::size_t i = 0; i < cut.coord.size(); ++i)
    csv.row() << num(cut.coord[i]) << ',' << num(cut.power_db[i]) << '\n';
  csv.close();
}

json matrix_to_json(const Eigen::MatrixXd& m) {
  json rows = json::array();
  for (Eigen::Index r = 0; r < m.rows(); ++r) {
    json row = json::array();
    for (Eigen::Index c = 0; c < m.cols(); ++c) row.push_back(m(r, c));
    rows.push_back(std::move(row));
  }
  return rows;
}

json vector_to_json(const Eigen::VectorXd& v) {
  json out = json::array();
  for (Eigen::Index i = 0; i < v.size(); ++i) out.push_back(v[i]);
  return out;
}

}  // namespace

OutputList run_simulate(const ExperimentConfig& config) {
  config.validate();
  const ArrayGeometry geometry = config.geometry();
  const fs::path csi_path = config.resolved_csi_path();
  const fs::path truth_path = config.resolved_truth_path();
  ensure_dir(csi_path.parent_path().empty() ? fs::path(".") : csi_path.parent_path());
  ensure_dir(truth_path.parent_path().empty() ? fs::path(".") : truth_path.parent_path());

  const OffsetSpec spec = config.offset_spec();
  const OffsetRealization offsets =
      sample_offsets(spec, config.system.num_antennas, config.system.num_subcarriers);

  CaptureSynthesizer synth(config.system, geometry, config.ue, offsets, config.seed);
  CsiWriter writer(csi_path, CsiFileHeader::describe(config.system, geometry));
  synth.for_each_lane(
      [&](int n, int k, std::span<const cdouble> lane) { writer.write_lane(n, k, lane); });
  writer.finish();

  json truth;
  truth["schema"] = "phasecal-truth/1";
  truth["ue"] = {{"x", config.ue.x}, {"y", config.ue.y}};
  truth["seed"] = config.seed;
  truth["offset_spec"] = {{"freq_mean", spec.freq_mean},
                          {"freq_std", spec.freq_std},
                          {"spatial_half_width", spec.spatial_half_width},
                          {"seed", spec.seed}};
  truth["phi_f"] = matrix_to_json(offsets.phi_f);
  truth["phi_a"] = vector_to_json(offsets.phi_a);
  truth["config"] = json::parse(to_json(config));
  write_json(truth_path, truth);
  return {csi_path, truth_path};
}

OutputList run_crlb_sweep(const ExperimentConfig& config) {
  config.validate();
  ensure_dir(config.out_dir);
  SystemConfig tmpl = config.system;
  tmpl.snr_db = config.crlb_snr_db;

  const fs::path path = fs::path(config.out_dir) / "crlb_sweep.csv";
  CsvFile csv(path, "phasecal-crlb-sweep/1", config, "kind,N,sigma,rmse_m");
  for (NuisanceKind kind : {NuisanceKind::kFrequency, NuisanceKind::kSpatial}) {
    for (const CrlbSweepRow& r :
         crlb_sweep(tmpl, config.ue, kind, config.crlb_sigmas, config.crlb_antenna_counts))
      csv.row() << to_string(r.kind) << ',' << r.num_antennas << ',' << num(r.sigma) << ','
                << num(r.rmse) << '\n';
  }
  csv.close();
  return {path};
}

OutputList run_saf(const ExperimentConfig& config) {
  config.validate();
  ensure_dir(config.out_dir);
  const ArrayGeometry geometry = config.geometry();
  const fs::path dir = config.out_dir;
  const int n = config.system.num_antennas;
  const int k = config.system.num_subcarriers;

  struct Scenario {
    std::string name;
    std::string kind;
    double sigma;
  };
  std::vector<Scenario> scenarios;
  if (config.saf_ideal) scenarios.push_back({"ideal", "ideal", 0.0});
  for (double s : config.saf_frequency_sigmas)
    scenarios.push_back({"frequency_" + sigma_tag(s), "frequency", s});
  for (double s : config.saf_spatial_sigmas)
    scenarios.push_back({"spatial_" + sigma_tag(s), "spatial", s});

  OutputList written;
  const fs::path report_path = dir / "saf_report.csv";
  CsvFile report(report_path, "phasecal-saf-report/1", config,
                 "scenario,kind,sigma,seed,pmsr_db,peak_x,peak_y");
  for (const Scenario& sc : scenarios) {
    SafMap map;
    if (sc.kind == "ideal") {
      map = saf_fast_path(config.system, geometry, config.ue, std::span<const double>{},
                          config.grid, config.mainlobe_radius);
    } else if (sc.kind == "frequency") {
      OffsetSpec spec;
      spec.freq_std = sc.sigma;
      spec.seed = config.seed;
      map = saf_model(config.system, geometry, config.ue, sample_offsets(spec, n, k), config.grid,
                      config.mainlobe_radius);
    } else {
      const OffsetSpec spec = OffsetSpec::from_spatial_std(sc.sigma, config.seed);
      spec.validate();
      map = saf_fast_path(config.system, geometry, config.ue, sample_offsets(spec, n, k),
                          config.grid, config.mainlobe_radius);
    }
    const fs::path map_path = dir / ("saf_" + sc.name + ".csv");
    write_map(map_path, "phasecal-saf-map/1", config, map);
    const SafCuts c = cuts(map);
    const fs::path xcut = dir / ("saf_" + sc.name + "_xcut.csv");
    const fs::path ycut = dir / ("saf_" + sc.name + "_ycut.csv");
    write_cut(xcut, config, c.x);
    write_cut(ycut, config, c.y);
    written.insert(written.end(), {map_path, xcut, ycut});

    report.row() << sc.name << ',' << sc.kind << ',' << num(sc.sigma) << ',' << config.seed << ','
                 << num(map.pmsr_db) << ',' << num(map.peak_location.x) << ','
                 << num(map.peak_location.y) << '\n';
  }
  report.close();
  written.push_back(report_path);
  return written;
}

OutputList run_pmsr_sweep(const ExperimentConfig& config) {
  config.validate();
  ensure_dir(config.out_dir);
  const ArrayGeometry geometry = config.geometry();
  const fs::path rows_path = fs::path(config.out_dir) / "pmsr_sweep.csv";
  const fs::path median_path = fs::path(config.out_dir) / "pmsr_median.csv";
  CsvFile rows(rows_path, "phasecal-pmsr-sweep/1", config, "kind,sigma,seed,pmsr_db");
  CsvFile medians(median_path, "phasecal-pmsr-median/1", config, "kind,sigma,median_pmsr_db");
  for (NuisanceKind kind : {NuisanceKind::kFrequency, NuisanceKind::kSpatial}) {
    const PmsrSweepResult r = pmsr_sweep(config.system, geometry, config.ue, kind,
                                         config.pmsr_sigmas, config.pmsr_seeds, config.grid,
                                         config.mainlobe_radius);
    for (const PmsrSweepRow& row : r.rows)
      rows.row() << to_string(row.kind) << ',' << num(row.sigma) << ',' << row.seed << ','
                 << num(row.pmsr_db) << '\n';
    for (const PmsrMedianRow& m : r.medians)
      medians.row() << to_string(m.kind) << ',' << num(m.sigma) << ','
                    << num(m.median_pmsr_db) << '\n';
  }
  rows.close();
  medians.close();
  return {rows_path, median_path};
}

namespace {

UeLocation read_truth_location(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw DataError("ground-truth sidecar not found: " + path.string());
  json j = json::parse(in, nullptr, false);
  if (j.is_discarded() || !j.is_object()) throw DataError("malformed sidecar " + path.string());
  const auto ue = j.find("ue");
  if (ue == j.end() || !ue->is_object() || !ue->contains("x") || !ue->contains("y") ||
      !(*ue)["x"].is_number() || !(*ue)["y"].is_number())
    throw DataError("sidecar " + path.string() + " has no UE location");
  return {(*ue)["x"].get<double>(), (*ue)["y"].get<double>()};
}

json stage_json(const std::string& name, const LocalizationResult& r) {
  auto finite_or_null = [](double v) { return std::isfinite(v) ? json(v) : json(nullptr); };
  return {{"stage", name},
          {"estimate", {{"x", r.estimate.x}, {"y", r.estimate.y}}},
          {"truth", {{"x", r.ground_truth.x}, {"y", r.ground_truth.y}}},
          {"error_m", r.error},
          {"pmsr_db", finite_or_null(r.pmsr_db)}};
}

}  // namespace

OutputList run_calibrate_localize(const ExperimentConfig& config) {
  config.validate();
  const UeLocation truth = read_truth_location(config.resolved_truth_path());
  CsiReader reader(config.resolved_csi_path());
  const CsiFileHeader& h = reader.header();

  SystemConfig system = config.system;
  system.num_antennas = static_cast<int>(h.num_antennas);
  system.num_subcarriers = static_cast<int>(h.num_subcarriers);
  system.num_symbols = static_cast<int>(h.num_symbols);
  system.carrier_frequency = h.carrier_frequency;
  system.subcarrier_spacing = h.subcarrier_spacing;
  const ArrayGeometry geometry = h.geometry();

  SymbolAccumulator acc(system.num_antennas, system.num_subcarriers);
  reader.for_each_lane([&](int n, int k, std::span<const cdouble> lane) { acc.add(n, k, lane); });

  PipelineOptions options;
  options.oversampling = config.range_oversampling;
  const CalibrationOutcome cal = calibrate_pipeline(acc, system, geometry, truth, options);

  ensure_dir(config.out_dir);
  const fs::path dir = config.out_dir;
  const std::string echo = "config: " + to_json(config);
  OutputList written;
  written.push_back(dir / "phi_f_hat.csv");
  write_frequency_table(written.back(), cal.tables.phi_f_hat,
                        "schema: phasecal-phi-f-hat/1\n" + echo);
  written.push_back(dir / "phi_a_hat.csv");
  write_spatial_table(written.back(), cal.tables.phi_a_hat,
                      "schema: phasecal-phi-a-hat/1\n" + echo);

  const std::pair<const char*, const Eigen::VectorXcd*> stages[] = {
      {"uncalibrated", &cal.los_uncalibrated},
      {"frequency", &cal.los_frequency},
      {"calibrated", &cal.los_calibrated}};
  json report;
  report["schema"] = "phasecal-localization/1";
  report["config"] = json::parse(to_json(config));
  report["stages"] = json::array();
  for (const auto& [name, los] : stages) {
    const LocalizationResult r =
        localize(*los, system, geometry, config.grid, truth, config.mainlobe_radius);
    report["stages"].push_back(stage_json(name, r));
    written.push_back(dir / (std::string("image_") + name + ".csv"));
    write_map(written.back(), "phasecal-localization-image/1", config, r.image);
  }
  written.push_back(dir / "localization.json");
  write_json(written.back(), report);
  return written;
}

void run_inspect(const ExperimentConfig& config, std::ostream& out) {
  const fs::path path = config.resolved_csi_path();
  CsiReader reader(path);
  const CsiFileHeader& h = reader.header();
  out << "file: " << path.string() << '\n'
      << "version: " << h.version << '\n'
      << "N: " << h.num_antennas << '\n'
      << "K: " << h.num_subcarriers << '\n'
      << "L: " << h.num_symbols << '\n'
      << "carrier_frequency_hz: " << num(h.carrier_frequency) << '\n'
      << "subcarrier_spacing_hz: " << num(h.subcarrier_spacing) << '\n'
      << "geometry_kind: " << (h.geometry_kind == 0 ? "ula" : "explicit") << '\n'
      << "antenna_spacing_m: " << num(h.antenna_spacing) << '\n'
      << "payload_bytes: " << h.payload_bytes() << '\n';

  double power = 0.0;
  double min_mod = std::numeric_limits<double>::infinity();
  double max_mod = 0.0;
  std::uint64_t count = 0;
  reader.for_each_lane([&](int, int, std::span<const cdouble> lane) {
    for (const cdouble& v : lane) {
      const double m = std::abs(v);
      power += m * m;
      min_mod = std::min(min_mod, m);
      max_mod = std::max(max_mod, m);
      ++count;
    }
  });
  out << "samples: " << count << '\n'
      << "mean_power: " << num(power / static_cast<double>(count)) << '\n'
      << "min_modulus: " << num(min_mod) << '\n'
      << "max_modulus: " << num(max_mod) << '\n';
}

}  // namespace phasecal
