#pragma once

#include <cstdint>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <numbers>
#include <sstream>
#include <string>
#include <variant>
#include <vector>

#include <json.hpp>

#include "catspec/analysis.hpp"
#include "catspec/errors.hpp"
#include "catspec/filter.hpp"
#include "catspec/noise.hpp"
#include "catspec/reconstruction.hpp"
#include "catspec/sequence.hpp"
#include "catspec/simulator.hpp"

namespace catspec {

using json = nlohmann::json;

// every command is reproducible from this one blob plus a seed
struct CampaignConfig {
  std::vector<SequenceSpec> sequences;
  ModeConfig modes;
  NoiseModel noise = NoNoise{};
  int blocks = 0;
  int reps_per_block = 0;
  ReconstructionConfig reconstruction;
  std::uint64_t seed = 0;
  bool seed_set = false;
  std::string out_dir = ".";

  bool operator==(const CampaignConfig&) const = default;
};

namespace detail {

inline double get_number(const json& j, const std::string& key) {
  if (!j.contains(key)) throw ValidationError("config: missing key \"" + key + "\"");
  if (!j.at(key).is_number()) throw ValidationError("config: key \"" + key + "\" must be a number");
  return j.at(key).get<double>();
}

inline double get_number_or(const json& j, const std::string& key, double fallback) {
  return j.contains(key) ? get_number(j, key) : fallback;
}

// angular frequencies live in configs as rad/s; a sibling `<key>_hz` entry is
// accepted instead and converted here, never downstream
inline double get_angular(const json& j, const std::string& rad_key, const std::string& hz_key,
                          bool required = true) {
  if (j.contains(rad_key) && j.contains(hz_key))
    throw ValidationError("config: give either \"" + rad_key + "\" or \"" + hz_key + "\", not both");
  if (j.contains(rad_key)) return get_number(j, rad_key);
  if (j.contains(hz_key)) return 2 * std::numbers::pi * get_number(j, hz_key);
  if (required)
    throw ValidationError("config: missing \"" + rad_key + "\" (rad/s) or \"" + hz_key + "\" (Hz)");
  return 0;
}

}  // namespace detail

inline SequenceSpec sequence_from_json(const json& j) {
  SequenceSpec spec;
  if (!j.contains("label") || !j.at("label").is_string())
    throw ValidationError("config: sequence needs a string \"label\"");
  spec.label = j.at("label").get<std::string>();
  spec.tau_s = detail::get_number(j, "tau_s");
  spec.num_phase_shifts = static_cast<int>(detail::get_number(j, "num_phase_shifts"));
  spec.omega_max = detail::get_angular(j, "omega_max", "rabi_hz");
  spec.shape = j.contains("shape") ? shape_from_name(j.at("shape").get<std::string>()) : Shape::Square;
  spec.envelope_points = static_cast<int>(detail::get_number_or(j, "envelope_points", 0));
  spec.half_bandwidth = detail::get_number_or(j, "half_bandwidth", 0);
  validate(spec);
  return spec;
}

inline json to_json(const SequenceSpec& spec) {
  json j;
  j["label"] = spec.label;
  j["tau_s"] = spec.tau_s;
  j["num_phase_shifts"] = spec.num_phase_shifts;
  j["omega_max"] = spec.omega_max;
  j["shape"] = shape_name(spec.shape);
  if (spec.envelope_points) j["envelope_points"] = spec.envelope_points;
  if (spec.half_bandwidth) j["half_bandwidth"] = spec.half_bandwidth;
  return j;
}

inline Mode mode_from_json(const json& j) {
  Mode mode;
  mode.lamb_dicke = detail::get_number(j, "lamb_dicke");
  mode.detuning = detail::get_angular(j, "detuning", "detuning_hz", false);
  mode.mean_phonons = detail::get_number_or(j, "mean_phonons", 0);
  return mode;
}

inline json to_json(const Mode& mode) {
  return json{{"lamb_dicke", mode.lamb_dicke},
              {"detuning", mode.detuning},
              {"mean_phonons", mode.mean_phonons}};
}

inline SingleTone tone_from_json(const json& j) {
  SingleTone tone;
  tone.amplitude_hz = detail::get_number(j, "amplitude_hz");
  tone.omega = detail::get_angular(j, "omega", "frequency_hz");
  tone.phase = detail::get_number_or(j, "phase", 0);
  tone.randomized = j.value("randomized", true);
  return tone;
}

inline json to_json(const SingleTone& tone) {
  return json{{"amplitude_hz", tone.amplitude_hz},
              {"omega", tone.omega},
              {"phase", tone.phase},
              {"randomized", tone.randomized}};
}

inline NoiseModel noise_from_json(const json& j) {
  if (!j.contains("type") || !j.at("type").is_string())
    throw ValidationError("config: noise needs a string \"type\"");
  const std::string type = j.at("type").get<std::string>();
  if (type == "none") return NoNoise{};
  if (type == "single_tone") return tone_from_json(j);
  if (type == "multi_tone") {
    MultiTone multi;
    if (!j.contains("tones") || !j.at("tones").is_array())
      throw ValidationError("config: multi_tone noise needs a \"tones\" array");
    for (const auto& t : j.at("tones")) multi.tones.push_back(tone_from_json(t));
    return multi;
  }
  if (type == "sampled_psd") {
    SampledPSD psd;
    if (!j.contains("table") || !j.at("table").is_array() || j.at("table").empty())
      throw ValidationError("config: sampled_psd noise needs a nonempty \"table\" array");
    psd.omegas.resize(j.at("table").size());
    psd.values.resize(j.at("table").size());
    Eigen::Index i = 0;
    for (const auto& row : j.at("table")) {
      psd.omegas(i) = detail::get_angular(row, "omega", "frequency_hz");
      psd.values(i) = detail::get_number(row, "psd_hz2_per_hz");
      ++i;
    }
    psd.bins = static_cast<int>(detail::get_number_or(j, "bins", 256));
    return psd;
  }
  throw ValidationError("config: unknown noise type \"" + type + "\"");
}

inline json to_json(const NoiseModel& noise) {
  return std::visit(
      [](const auto& model) -> json {
        using T = std::decay_t<decltype(model)>;
        if constexpr (std::is_same_v<T, NoNoise>) {
          return json{{"type", "none"}};
        } else if constexpr (std::is_same_v<T, SingleTone>) {
          json j = to_json(model);
          j["type"] = "single_tone";
          return j;
        } else if constexpr (std::is_same_v<T, MultiTone>) {
          json tones = json::array();
          for (const auto& t : model.tones) tones.push_back(to_json(t));
          return json{{"type", "multi_tone"}, {"tones", tones}};
        } else {
          json table = json::array();
          for (Eigen::Index i = 0; i < model.omegas.size(); ++i)
            table.push_back(json{{"omega", model.omegas(i)}, {"psd_hz2_per_hz", model.values(i)}});
          return json{{"type", "sampled_psd"}, {"table", table}, {"bins", model.bins}};
        }
      },
      noise);
}

inline ReconstructionConfig reconstruction_from_json(const json& j) {
  ReconstructionConfig config;
  if (j.contains("lambda_candidates")) {
    if (!j.at("lambda_candidates").is_array())
      throw ValidationError("config: lambda_candidates must be an array");
    for (const auto& v : j.at("lambda_candidates")) config.lambda_candidates.push_back(v.get<double>());
  }
  config.resamples = static_cast<int>(detail::get_number_or(j, "resamples", 50));
  config.tolerance = detail::get_number_or(j, "tolerance", 1e-10);
  config.seed = static_cast<std::uint64_t>(detail::get_number_or(j, "seed", 0));
  return config;
}

inline json to_json(const ReconstructionConfig& config) {
  json j;
  if (!config.lambda_candidates.empty()) j["lambda_candidates"] = config.lambda_candidates;
  j["resamples"] = config.resamples;
  j["tolerance"] = config.tolerance;
  j["seed"] = config.seed;
  return j;
}

inline CampaignConfig config_from_json(const json& j) {
  CampaignConfig config;
  if (!j.contains("sequences") || !j.at("sequences").is_array() || j.at("sequences").empty())
    throw ValidationError("config: needs a nonempty \"sequences\" array");
  for (const auto& s : j.at("sequences")) config.sequences.push_back(sequence_from_json(s));
  for (std::size_t a = 0; a < config.sequences.size(); ++a)
    for (std::size_t b = a + 1; b < config.sequences.size(); ++b)
      if (config.sequences[a].label == config.sequences[b].label)
        throw ValidationError("config: duplicate sequence label \"" + config.sequences[a].label + "\"");

  if (!j.contains("modes") || !j.at("modes").is_array() || j.at("modes").empty())
    throw ValidationError("config: needs a nonempty \"modes\" array");
  for (const auto& m : j.at("modes")) config.modes.modes.push_back(mode_from_json(m));
  validate(config.modes);

  if (j.contains("noise")) config.noise = noise_from_json(j.at("noise"));
  validate(config.noise);

  config.blocks = static_cast<int>(detail::get_number_or(j, "blocks", 0));
  config.reps_per_block = static_cast<int>(detail::get_number_or(j, "reps_per_block", 0));
  if (j.contains("reconstruction"))
    config.reconstruction = reconstruction_from_json(j.at("reconstruction"));
  if (j.contains("seed")) {
    config.seed = static_cast<std::uint64_t>(detail::get_number(j, "seed"));
    config.seed_set = true;
  }
  if (j.contains("out_dir")) config.out_dir = j.at("out_dir").get<std::string>();
  return config;
}

inline json to_json(const CampaignConfig& config) {
  json sequences = json::array();
  for (const auto& s : config.sequences) sequences.push_back(to_json(s));
  json modes = json::array();
  for (const auto& m : config.modes.modes) modes.push_back(to_json(m));
  json j;
  j["sequences"] = sequences;
  j["modes"] = modes;
  j["noise"] = to_json(config.noise);
  j["blocks"] = config.blocks;
  j["reps_per_block"] = config.reps_per_block;
  j["reconstruction"] = to_json(config.reconstruction);
  if (config.seed_set) j["seed"] = config.seed;
  j["out_dir"] = config.out_dir;
  return j;
}

inline CampaignConfig load_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ValidationError("cannot open config file: " + path);
  json j;
  try {
    j = json::parse(in);
  } catch (const json::parse_error& e) {
    throw ValidationError("config parse error in " + path + ": " + e.what());
  }
  return config_from_json(j);
}

// ---- CSV ----

// shortest round-trip formatting keeps rerun outputs byte-identical
inline std::string format_number(double v) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

inline void write_text(const std::string& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw ValidationError("cannot open output file: " + path);
  out << text;
  if (!out) throw ValidationError("write failed: " + path);
}

inline std::string curve_csv(const FilterCurve& curve) {
  std::string text = "omega_rad_s,value_per_hz2\n";
  for (Eigen::Index i = 0; i < curve.omegas.size(); ++i)
    text += format_number(curve.omegas(i)) + "," + format_number(curve.values(i)) + "\n";
  return text;
}

inline std::string matrix_csv(const FilterMatrix& fm) {
  const Eigen::VectorXd grid = fm.omegas();
  std::string text = "label";
  for (Eigen::Index i = 0; i < grid.size(); ++i) text += "," + format_number(grid(i));
  text += "\n";
  for (Eigen::Index r = 0; r < fm.entries.rows(); ++r) {
    text += fm.labels[static_cast<std::size_t>(r)];
    for (Eigen::Index c = 0; c < fm.entries.cols(); ++c)
      text += "," + format_number(fm.entries(r, c));
    text += "\n";
  }
  return text;
}

inline std::string records_csv(const std::vector<MeasurementRecord>& records) {
  std::string text = "label,tau_s,S,shape,omega_max_rad_s,p1_mean,p1_std,M,r,seed\n";
  for (const auto& rec : records) {
    text += rec.label + "," + format_number(rec.tau_s) + "," + std::to_string(rec.num_phase_shifts) +
            "," + shape_name(rec.shape) + "," + format_number(rec.omega_max) + "," +
            format_number(rec.p1_mean) + "," + format_number(rec.p1_std) + "," +
            std::to_string(rec.blocks) + "," + std::to_string(rec.reps_per_block) + "," +
            std::to_string(rec.seed) + "\n";
  }
  return text;
}

inline std::string spectrum_csv(const SpectrumEstimate& est) {
  std::string text = "omega_rad_s,psd_hz2_per_hz,band_low,band_high\n";
  for (Eigen::Index i = 0; i < est.omegas.size(); ++i)
    text += format_number(est.omegas(i)) + "," + format_number(est.s(i)) + "," +
            format_number(est.band_low(i)) + "," + format_number(est.band_high(i)) + "\n";
  return text;
}

inline json diagnostics_json(const SpectrumEstimate& est) {
  json cv = json::array();
  for (const auto& entry : est.cv_table)
    cv.push_back(json{{"lambda", entry.lambda},
                      {"error_first", entry.error_first},
                      {"error_second", entry.error_second},
                      {"mean_error", entry.mean_error()}});
  return json{{"chosen_lambda", est.chosen_lambda},
              {"objective", est.objective},
              {"residual_norm", est.residual_norm},
              {"cv_table", cv}};
}

namespace detail {

inline std::vector<std::string> split_csv_line(const std::string& line) {
  std::vector<std::string> fields;
  std::string field;
  std::stringstream ss(line);
  while (std::getline(ss, field, ',')) fields.push_back(field);
  if (!line.empty() && line.back() == ',') fields.push_back("");
  return fields;
}

inline double parse_double(const std::string& text, const std::string& file, int row, int col) {
  try {
    std::size_t used = 0;
    const double v = std::stod(text, &used);
    if (used != text.size()) throw std::invalid_argument(text);
    return v;
  } catch (const std::exception&) {
    throw ValidationError(file + ": row " + std::to_string(row) + ", column " +
                          std::to_string(col + 1) + ": cannot parse \"" + text + "\" as a number");
  }
}

inline std::vector<std::vector<std::string>> read_csv(const std::string& path,
                                                      const std::string& expected_header) {
  std::ifstream in(path);
  if (!in) throw ValidationError("cannot open file: " + path);
  std::string line;
  if (!std::getline(in, line)) throw ValidationError(path + ": empty file");
  if (!line.empty() && line.back() == '\r') line.pop_back();
  if (line != expected_header)
    throw ValidationError(path + ": header mismatch, expected \"" + expected_header +
                          "\", found \"" + line + "\"");
  const std::size_t columns = split_csv_line(expected_header).size();
  std::vector<std::vector<std::string>> rows;
  int row = 1;
  while (std::getline(in, line)) {
    ++row;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    auto fields = split_csv_line(line);
    if (fields.size() != columns)
      throw ValidationError(path + ": row " + std::to_string(row) + " has " +
                            std::to_string(fields.size()) + " columns, expected " +
                            std::to_string(columns));
    rows.push_back(std::move(fields));
  }
  return rows;
}

}  // namespace detail

inline std::vector<MeasurementRecord> read_records_csv(const std::string& path) {
  const auto rows =
      detail::read_csv(path, "label,tau_s,S,shape,omega_max_rad_s,p1_mean,p1_std,M,r,seed");
  std::vector<MeasurementRecord> records;
  records.reserve(rows.size());
  int row = 1;
  for (const auto& fields : rows) {
    ++row;
    MeasurementRecord rec;
    rec.label = fields[0];
    rec.tau_s = detail::parse_double(fields[1], path, row, 1);
    rec.num_phase_shifts = static_cast<int>(detail::parse_double(fields[2], path, row, 2));
    rec.shape = shape_from_name(fields[3]);
    rec.omega_max = detail::parse_double(fields[4], path, row, 4);
    rec.p1_mean = detail::parse_double(fields[5], path, row, 5);
    rec.p1_std = detail::parse_double(fields[6], path, row, 6);
    rec.blocks = static_cast<int>(detail::parse_double(fields[7], path, row, 7));
    rec.reps_per_block = static_cast<int>(detail::parse_double(fields[8], path, row, 8));
    try {
      rec.seed = std::stoull(fields[9]);
    } catch (const std::exception&) {
      throw ValidationError(path + ": row " + std::to_string(row) + ", column 10: cannot parse \"" +
                            fields[9] + "\" as a seed");
    }
    records.push_back(std::move(rec));
  }
  return records;
}

inline std::vector<SidebandPoint> read_sideband_csv(const std::string& path) {
  const auto rows = detail::read_csv(path, "t_s,p1,sigma");
  std::vector<SidebandPoint> points;
  points.reserve(rows.size());
  int row = 1;
  for (const auto& fields : rows) {
    ++row;
    SidebandPoint point;
    point.t_s = detail::parse_double(fields[0], path, row, 0);
    point.p1 = detail::parse_double(fields[1], path, row, 1);
    point.sigma = detail::parse_double(fields[2], path, row, 2);
    points.push_back(point);
  }
  return points;
}

inline void ensure_directory(const std::string& dir) {
  std::error_code ec;
  std::filesystem::create_directories(dir, ec);
  if (ec) throw ValidationError("cannot create output directory " + dir + ": " + ec.message());
}

}  // namespace catspec
