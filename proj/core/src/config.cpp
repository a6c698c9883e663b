// SPDX-License-Identifier: Apache-2.0

#include "phasecal/config.hpp"

#include <cmath>
#include <fstream>
#include <sstream>

#include <json.hpp>

#include "phasecal/errors.hpp"

namespace phasecal {

using nlohmann::json;

namespace {

std::vector<double> default_crlb_sigmas() {
  std::vector<double> s{0.0};
  for (int i = 1; i <= 16; ++i) s.push_back(kPi * i / 16.0);
  return s;
}

std::vector<double> default_pmsr_sigmas() {
  std::vector<double> s;
  for (int i = 1; i <= 8; ++i) s.push_back(kPi * i / 16.0);
  return s;
}

std::vector<std::uint64_t> default_seeds() {
  std::vector<std::uint64_t> s;
  for (std::uint64_t i = 1; i <= 20; ++i) s.push_back(i);
  return s;
}

const char* amplitude_name(AmplitudeModel m) {
  return m == AmplitudeModel::kUnit ? "unit" : "inverse_distance";
}

json to_object(const ExperimentConfig& c) {
  json j = json::object();
  const SystemConfig& s = c.system;
  j["carrier_frequency"] = s.carrier_frequency;
  j["subcarrier_spacing"] = s.subcarrier_spacing;
  j["num_subcarriers"] = s.num_subcarriers;
  j["num_antennas"] = s.num_antennas;
  j["antenna_spacing"] = s.antenna_spacing;
  j["num_symbols"] = s.num_symbols;
  j["snr_db"] = s.snr_db ? json(*s.snr_db) : json("noiseless");
  j["amplitude_model"] = amplitude_name(s.amplitude_model);
  j["freq_offset_mean"] = c.freq_offset_mean;
  j["freq_offset_std"] = c.freq_offset_std;
  j["spatial_offset_half_width"] = c.spatial_offset_half_width;
  j["ue_x"] = c.ue.x;
  j["ue_y"] = c.ue.y;
  j["seed"] = c.seed;
  j["grid_x_min"] = c.grid.x_min;
  j["grid_x_max"] = c.grid.x_max;
  j["grid_y_min"] = c.grid.y_min;
  j["grid_y_max"] = c.grid.y_max;
  j["grid_step"] = c.grid.step;
  j["mainlobe_radius"] = c.mainlobe_radius;
  j["range_oversampling"] = c.range_oversampling;
  j["crlb_snr_db"] = c.crlb_snr_db;
  j["crlb_sigmas"] = c.crlb_sigmas;
  j["crlb_antenna_counts"] = c.crlb_antenna_counts;
  j["pmsr_sigmas"] = c.pmsr_sigmas;
  j["pmsr_seeds"] = c.pmsr_seeds;
  j["saf_ideal"] = c.saf_ideal;
  j["saf_frequency_sigmas"] = c.saf_frequency_sigmas;
  j["saf_spatial_sigmas"] = c.saf_spatial_sigmas;
  j["out_dir"] = c.out_dir;
  j["csi_path"] = c.csi_path;
  j["truth_path"] = c.truth_path;
  return j;
}

template <typename T>
T get_as(const json& v, const std::string& key) {
  try {
    return v.get<T>();
  } catch (const json::exception&) {
    throw InvalidArgument("config key '" + key + "' has the wrong type");
  }
}

double get_number(const json& v, const std::string& key) {
  if (!v.is_number()) throw InvalidArgument("config key '" + key + "' must be a number");
  return v.get<double>();
}

template <typename T>
T get_integer(const json& v, const std::string& key) {
  if (!v.is_number_integer()) throw InvalidArgument("config key '" + key + "' must be an integer");
  if constexpr (std::is_unsigned_v<T>) {
    if (v.is_number_unsigned() || v.get<long long>() >= 0) return v.get<T>();
    throw InvalidArgument("config key '" + key + "' must be non-negative");
  } else {
    return v.get<T>();
  }
}

std::vector<double> get_numbers(const json& v, const std::string& key) {
  if (!v.is_array()) throw InvalidArgument("config key '" + key + "' must be an array");
  std::vector<double> out;
  for (const auto& e : v) out.push_back(get_number(e, key));
  return out;
}

template <typename T>
std::vector<T> get_integers(const json& v, const std::string& key) {
  if (!v.is_array()) throw InvalidArgument("config key '" + key + "' must be an array");
  std::vector<T> out;
  for (const auto& e : v) out.push_back(get_integer<T>(e, key));
  return out;
}

void apply(ExperimentConfig& c, const std::string& key, const json& v) {
  SystemConfig& s = c.system;
  if (key == "carrier_frequency") s.carrier_frequency = get_number(v, key);
  else if (key == "subcarrier_spacing") s.subcarrier_spacing = get_number(v, key);
  else if (key == "num_subcarriers") s.num_subcarriers = get_integer<int>(v, key);
  else if (key == "num_antennas") s.num_antennas = get_integer<int>(v, key);
  else if (key == "antenna_spacing") s.antenna_spacing = get_number(v, key);
  else if (key == "num_symbols") s.num_symbols = get_integer<int>(v, key);
  else if (key == "snr_db") {
    if (v.is_string() && v.get<std::string>() == "noiseless") s.snr_db.reset();
    else s.snr_db = get_number(v, key);
  } else if (key == "amplitude_model") {
    const std::string m = get_as<std::string>(v, key);
    if (m == "unit") s.amplitude_model = AmplitudeModel::kUnit;
    else if (m == "inverse_distance") s.amplitude_model = AmplitudeModel::kInverseDistance;
    else throw InvalidArgument("amplitude_model must be 'unit' or 'inverse_distance'");
  }
  else if (key == "freq_offset_mean") c.freq_offset_mean = get_number(v, key);
  else if (key == "freq_offset_std") c.freq_offset_std = get_number(v, key);
  else if (key == "spatial_offset_half_width") c.spatial_offset_half_width = get_number(v, key);
  else if (key == "ue_x") c.ue.x = get_number(v, key);
  else if (key == "ue_y") c.ue.y = get_number(v, key);
  else if (key == "seed") c.seed = get_integer<std::uint64_t>(v, key);
  else if (key == "grid_x_min") c.grid.x_min = get_number(v, key);
  else if (key == "grid_x_max") c.grid.x_max = get_number(v, key);
  else if (key == "grid_y_min") c.grid.y_min = get_number(v, key);
  else if (key == "grid_y_max") c.grid.y_max = get_number(v, key);
  else if (key == "grid_step") c.grid.step = get_number(v, key);
  else if (key == "mainlobe_radius") c.mainlobe_radius = get_number(v, key);
  else if (key == "range_oversampling") c.range_oversampling = get_integer<int>(v, key);
  else if (key == "crlb_snr_db") c.crlb_snr_db = get_number(v, key);
  else if (key == "crlb_sigmas") c.crlb_sigmas = get_numbers(v, key);
  else if (key == "crlb_antenna_counts") c.crlb_antenna_counts = get_integers<int>(v, key);
  else if (key == "pmsr_sigmas") c.pmsr_sigmas = get_numbers(v, key);
  else if (key == "pmsr_seeds") c.pmsr_seeds = get_integers<std::uint64_t>(v, key);
  else if (key == "saf_ideal") c.saf_ideal = get_as<bool>(v, key);
  else if (key == "saf_frequency_sigmas") c.saf_frequency_sigmas = get_numbers(v, key);
  else if (key == "saf_spatial_sigmas") c.saf_spatial_sigmas = get_numbers(v, key);
  else if (key == "out_dir") c.out_dir = get_as<std::string>(v, key);
  else if (key == "csi_path") c.csi_path = get_as<std::string>(v, key);
  else if (key == "truth_path") c.truth_path = get_as<std::string>(v, key);
  else throw InvalidArgument("unknown config key '" + key + "'");
}

void apply_object(ExperimentConfig& c, const json& j) {
  if (!j.is_object()) throw InvalidArgument("config must be a JSON object");
  for (const auto& [key, value] : j.items()) apply(c, key, value);
}

json parse_json(const std::string& text, const std::string& origin) {
  try {
    return json::parse(text);
  } catch (const json::parse_error& e) {
    throw InvalidArgument(origin + ": " + e.what());
  }
}

}  // namespace

SystemConfig ExperimentConfig::default_system() {
  SystemConfig s;
  s.num_symbols = 10000;
  return s;
}

ExperimentConfig::ExperimentConfig()
    : crlb_sigmas(default_crlb_sigmas()),
      pmsr_sigmas(default_pmsr_sigmas()),
      pmsr_seeds(default_seeds()) {}

OffsetSpec ExperimentConfig::offset_spec() const {
  OffsetSpec spec;
  spec.freq_mean = freq_offset_mean;
  spec.freq_std = freq_offset_std;
  spec.spatial_half_width = spatial_offset_half_width;
  spec.seed = seed;
  return spec;
}

ArrayGeometry ExperimentConfig::geometry() const {
  return ArrayGeometry::ula(system.num_antennas, system.antenna_spacing);
}

std::filesystem::path ExperimentConfig::resolved_csi_path() const {
  return csi_path.empty() ? std::filesystem::path(out_dir) / "capture.csib"
                          : std::filesystem::path(csi_path);
}

std::filesystem::path ExperimentConfig::resolved_truth_path() const {
  return truth_path.empty() ? std::filesystem::path(out_dir) / "truth.json"
                            : std::filesystem::path(truth_path);
}

void ExperimentConfig::validate() const {
  system.validate();
  offset_spec().validate();
  grid.validate();
  if (!std::isfinite(ue.x) || !std::isfinite(ue.y)) throw InvalidArgument("ue must be finite");
  if (!(mainlobe_radius >= 0.0)) throw InvalidArgument("mainlobe_radius must be >= 0");
  if (range_oversampling < 1) throw InvalidArgument("range_oversampling must be >= 1");
  if (!std::isfinite(crlb_snr_db)) throw InvalidArgument("crlb_snr_db must be finite");
  for (int n : crlb_antenna_counts)
    if (n < 2) throw InvalidArgument("crlb_antenna_counts entries must be >= 2");
  auto check_sigmas = [](const std::vector<double>& v, const char* name) {
    for (double s : v)
      if (!std::isfinite(s) || s < 0.0)
        throw InvalidArgument(std::string(name) + " entries must be finite and >= 0");
  };
  check_sigmas(crlb_sigmas, "crlb_sigmas");
  check_sigmas(pmsr_sigmas, "pmsr_sigmas");
  check_sigmas(saf_frequency_sigmas, "saf_frequency_sigmas");
  check_sigmas(saf_spatial_sigmas, "saf_spatial_sigmas");
  if (out_dir.empty()) throw InvalidArgument("out_dir must not be empty");
}

ExperimentConfig parse_config(const std::string& json_text) {
  ExperimentConfig c;
  apply_object(c, parse_json(json_text, "config"));
  return c;
}

ExperimentConfig load_config(const std::optional<std::filesystem::path>& path,
                             std::span<const std::string> overrides) {
  ExperimentConfig c;
  if (path) {
    std::ifstream in(*path);
    if (!in) throw InvalidArgument("cannot open config " + path->string());
    std::stringstream ss;
    ss << in.rdbuf();
    apply_object(c, parse_json(ss.str(), path->string()));
  }
  for (const std::string& o : overrides) {
    const auto eq = o.find('=');
    if (eq == std::string::npos || eq == 0)
      throw InvalidArgument("override must look like key=value: '" + o + "'");
    const std::string key = o.substr(0, eq);
    const std::string text = o.substr(eq + 1);
    json value = json::parse(text, nullptr, false);
    if (value.is_discarded()) value = text;
    apply(c, key, value);
  }
  c.validate();
  return c;
}

std::string to_json(const ExperimentConfig& config) { return to_object(config).dump(); }

}  // namespace phasecal
