#pragma once

#include <CLI11.hpp>
#include <cmath>
#include <cstdint>
#include <iostream>
#include <numbers>
#include <string>
#include <variant>
#include <vector>

#include "catspec/analysis.hpp"
#include "catspec/errors.hpp"
#include "catspec/filter.hpp"
#include "catspec/io.hpp"
#include "catspec/reconstruction.hpp"
#include "catspec/sequence.hpp"
#include "catspec/simulator.hpp"

namespace catspec {

namespace detail {

// sequences cover different bands, so unfixed grid edges follow the
// modulation frequencies present in the config
inline void default_grid(const std::vector<SequenceSpec>& specs, double& omega_min,
                         double& omega_max) {
  double lo = std::numeric_limits<double>::infinity(), hi = 0;
  for (const auto& spec : specs) {
    lo = std::min(lo, omega_s(spec));
    hi = std::max(hi, omega_s(spec));
  }
  if (omega_min <= 0) omega_min = 0.05 * lo;
  if (omega_max <= 0) omega_max = 5 * hi;
}

inline const Mode& primary_mode(const CampaignConfig& config) {
  return config.modes.modes.front();
}

inline std::uint64_t require_seed(const CampaignConfig& config, bool cli_seed_set,
                                  std::uint64_t cli_seed) {
  if (cli_seed_set) return cli_seed;
  if (!config.seed_set)
    throw ValidationError("a seed is required for stochastic runs: set \"seed\" in the config or pass --seed");
  return config.seed;
}

inline FilterCurve spec_curve(const SequenceSpec& spec, const ModeConfig& modes, double omega_min,
                              double omega_max, int n, Kernel kernel) {
  double lo = omega_min, hi = omega_max;
  if (lo <= 0) lo = 0.05 * omega_s(spec);
  if (hi <= 0) hi = 5 * omega_s(spec);
  const SampledWaveform waveform = sample_waveform(spec);
  return filter_curve(waveform, modes, Eigen::VectorXd::LinSpaced(n, lo, hi), kernel);
}

}  // namespace detail

struct CliOptions {
  std::string config_path;
  std::string out_dir;
  std::string data_path;
  double omega_min = 0;  // rad/s, 0 picks a default from the config
  double omega_max = 0;
  int grid_points = 0;
  std::string kernel = "first_order";
  std::uint64_t seed = 0;
  bool seed_set = false;
  int sweep_points = 21;
  int phase_samples = 64;
  bool sweep_beta = false;
  double p_min = 0.01;
  double eta = 0;
  int n_max = 100;
};

inline CampaignConfig load_cli_config(const CliOptions& opt) {
  CampaignConfig config = load_config(opt.config_path);
  if (!opt.out_dir.empty()) config.out_dir = opt.out_dir;
  ensure_directory(config.out_dir);
  return config;
}

inline int run_filters(const CliOptions& opt) {
  CampaignConfig config = load_cli_config(opt);
  const Kernel kernel = kernel_from_name(opt.kernel);
  const int n = opt.grid_points > 0 ? opt.grid_points : 801;

  for (const auto& spec : config.sequences) {
    const FilterCurve curve =
        detail::spec_curve(spec, config.modes, opt.omega_min, opt.omega_max, n, kernel);
    write_text(config.out_dir + "/filter_" + spec.label + ".csv", curve_csv(curve));
  }

  double lo = opt.omega_min, hi = opt.omega_max;
  detail::default_grid(config.sequences, lo, hi);
  const FilterMatrix fm = filter_matrix(config.sequences, config.modes, lo, hi, n, kernel);
  write_text(config.out_dir + "/filter_matrix.csv", matrix_csv(fm));
  std::cout << "wrote " << config.sequences.size() << " curve files and filter_matrix.csv to "
            << config.out_dir << "\n";
  return 0;
}

inline int run_identify(const CliOptions& opt) {
  CampaignConfig config = load_cli_config(opt);
  const std::uint64_t seed = detail::require_seed(config, opt.seed_set, opt.seed);
  const auto* tone = std::get_if<SingleTone>(&config.noise);
  if (!tone)
    throw ValidationError("identify sweeps a single tone: configure noise of type \"single_tone\"");
  const Kernel kernel = kernel_from_name(opt.kernel);
  const Mode& mode = detail::primary_mode(config);

  Rng rng(seed);
  std::string text = opt.sweep_beta ? "label,beta_hz,omega_mod_rad_s,p1_predicted,p1_simulated,p1_sem\n"
                                    : "label,omega_mod_rad_s,p1_predicted,p1_simulated,p1_sem\n";
  for (const auto& spec : config.sequences) {
    const SampledWaveform waveform = sample_waveform(spec);
    const FilterCurve wide = detail::spec_curve(spec, config.modes, 0, 0, 2001, kernel);
    const double peak = peak_frequency(wide);
    const double width = bandwidth_fwhm(wide);

    if (opt.sweep_beta) {
      // hold the tone at the peak and scale its strength through the
      // weak-signal boundary, 2^-2 .. 2^4 times the configured amplitude
      for (int i = 0; i < opt.sweep_points; ++i) {
        const double factor = std::pow(2.0, -2 + 6.0 * i / (opt.sweep_points - 1));
        SingleTone swept = *tone;
        swept.omega = peak;
        swept.amplitude_hz = tone->amplitude_hz * factor;
        const double predicted =
            swept.amplitude_hz * swept.amplitude_hz / 2 *
            filter_value(waveform, config.modes, peak, kernel);
        const auto [mean, sem] = expected_p1(spec, mode, swept, opt.phase_samples, rng);
        text += spec.label + "," + format_number(swept.amplitude_hz) + "," + format_number(peak) +
                "," + format_number(predicted) + "," + format_number(mean) + "," +
                format_number(sem) + "\n";
      }
      continue;
    }

    for (int i = 0; i < opt.sweep_points; ++i) {
      const double omega_mod =
          peak - 2 * width + 4.0 * width * i / (opt.sweep_points - 1);
      if (omega_mod <= 0) continue;
      SingleTone swept = *tone;
      swept.omega = omega_mod;
      const double predicted = swept.amplitude_hz * swept.amplitude_hz / 2 *
                               filter_value(waveform, config.modes, omega_mod, kernel);
      const auto [mean, sem] = expected_p1(spec, mode, swept, opt.phase_samples, rng);
      text += spec.label + "," + format_number(omega_mod) + "," + format_number(predicted) + "," +
              format_number(mean) + "," + format_number(sem) + "\n";
    }
  }
  const std::string name = opt.sweep_beta ? "identify_beta.csv" : "identify.csv";
  write_text(config.out_dir + "/" + name, text);
  std::cout << "wrote " << name << " to " << config.out_dir << "\n";
  return 0;
}

inline int run_simulate(const CliOptions& opt) {
  CampaignConfig config = load_cli_config(opt);
  const std::uint64_t seed = detail::require_seed(config, opt.seed_set, opt.seed);
  Rng rng(seed);
  const auto records =
      measurement_campaign(config.sequences, detail::primary_mode(config), config.noise,
                           config.blocks, config.reps_per_block, rng);
  write_text(config.out_dir + "/records.csv", records_csv(records));
  std::cout << "wrote " << records.size() << " records to " << config.out_dir << "/records.csv\n";
  return 0;
}

inline int run_reconstruct(const CliOptions& opt) {
  CampaignConfig config = load_cli_config(opt);
  const auto records = read_records_csv(opt.data_path);
  if (records.empty()) throw ValidationError(opt.data_path + ": no measurement rows");

  std::vector<SequenceSpec> specs;
  MeasurementSet meas;
  meas.p.resize(records.size());
  meas.sigma.resize(records.size());
  for (std::size_t i = 0; i < records.size(); ++i) {
    const auto it = std::find_if(config.sequences.begin(), config.sequences.end(),
                                 [&](const SequenceSpec& s) { return s.label == records[i].label; });
    if (it == config.sequences.end())
      throw ValidationError("measurement label \"" + records[i].label +
                            "\" does not resolve to a configured sequence");
    specs.push_back(*it);
    meas.p(static_cast<Eigen::Index>(i)) = records[i].p1_mean;
    meas.sigma(static_cast<Eigen::Index>(i)) =
        records[i].blocks > 1 ? records[i].p1_std / std::sqrt(records[i].blocks)
                              : records[i].p1_std;
    meas.labels.push_back(records[i].label);
  }
  meas.blocks = records.front().blocks;
  meas.reps_per_block = records.front().reps_per_block;

  // default inversion grid covers DC up to just past the highest filter peak
  double lo = opt.omega_min, hi = opt.omega_max;
  if (hi <= 0) {
    for (const auto& spec : specs) {
      const FilterCurve wide =
          detail::spec_curve(spec, config.modes, 0, 0, 2001, kernel_from_name(opt.kernel));
      hi = std::max(hi, 1.2 * peak_frequency(wide));
    }
  }
  const int n = opt.grid_points > 0 ? opt.grid_points : 200;
  const FilterMatrix fm =
      filter_matrix(specs, config.modes, lo, hi, n, kernel_from_name(opt.kernel));

  ReconstructionConfig recon = config.reconstruction;
  if (opt.seed_set) recon.seed = opt.seed;
  const SpectrumEstimate est = reconstruct(fm, meas, recon);
  write_text(config.out_dir + "/spectrum.csv", spectrum_csv(est));
  write_text(config.out_dir + "/diagnostics.json", diagnostics_json(est).dump(2) + "\n");
  std::cout << "wrote spectrum.csv and diagnostics.json to " << config.out_dir
            << " (lambda = " << format_number(est.chosen_lambda) << ")\n";
  return 0;
}

inline int run_sensitivity(const CliOptions& opt) {
  CampaignConfig config = load_cli_config(opt);
  check_p_min(opt.p_min);
  const Kernel kernel = kernel_from_name(opt.kernel);
  const int n = opt.grid_points > 0 ? opt.grid_points : 2001;

  json report;
  report["p_min"] = opt.p_min;
  report["note"] =
      "absolute sensitivities scale inversely with the configured lamb_dicke and rabi scale";
  json per_sequence = json::array();
  std::string text;
  double best_tone = std::numeric_limits<double>::infinity();
  double best_band = std::numeric_limits<double>::infinity();
  for (const auto& spec : config.sequences) {
    const FilterCurve curve =
        detail::spec_curve(spec, config.modes, opt.omega_min, opt.omega_max, n, kernel);
    const SensitivityReport r = sensitivity_report(curve, opt.p_min);
    best_tone = std::min(best_tone, r.beta_min_hz);
    best_band = std::min(best_band, r.beta_min_c_hz);
    json entry;
    entry["label"] = spec.label;
    entry["beta_min_hz"] = r.beta_min_hz;
    entry["beta_min_c_hz"] = r.beta_min_c_hz;
    entry["omega_peak_rad_s"] = r.omega_peak;
    entry["delta_omega_rad_s"] = r.delta_omega;
    if (!r.warnings.empty()) entry["warnings"] = r.warnings;
    per_sequence.push_back(entry);
    text += spec.label + ".beta_min_hz = " + format_number(r.beta_min_hz) + "\n" + spec.label +
            ".beta_min_c_hz = " + format_number(r.beta_min_c_hz) + "\n" + spec.label +
            ".omega_peak_rad_s = " + format_number(r.omega_peak) + "\n" + spec.label +
            ".delta_omega_rad_s = " + format_number(r.delta_omega) + "\n";
    for (const auto& w : r.warnings) text += spec.label + ".warning = " + w + "\n";
  }
  report["per_sequence"] = per_sequence;
  report["set_min_beta_min_hz"] = best_tone;
  report["set_min_beta_min_c_hz"] = best_band;
  text += "set_min.beta_min_hz = " + format_number(best_tone) + "\n";
  text += "set_min.beta_min_c_hz = " + format_number(best_band) + "\n";

  write_text(config.out_dir + "/sensitivity.txt", text);
  write_text(config.out_dir + "/sensitivity.json", report.dump(2) + "\n");
  std::cout << text;
  return 0;
}

inline int run_thermometry(const CliOptions& opt) {
  if (opt.eta <= 0) throw ValidationError("--eta must be > 0");
  const auto data = read_sideband_csv(opt.data_path);
  const ThermometryFit fit = thermometry_fit(data, opt.eta, opt.n_max);

  json report;
  report["nbar"] = fit.nbar;
  report["base_rabi_rad_s"] = fit.base_rabi;
  report["decay_per_s"] = fit.decay;
  report["chi2"] = fit.chi2;
  report["truncation"] = fit.truncation;
  report["nbar_sigma"] = std::sqrt(std::max(0.0, fit.covariance(0, 0)));
  std::string text = "nbar = " + format_number(fit.nbar) + "\n" +
                     "nbar_sigma = " + format_number(std::sqrt(std::max(0.0, fit.covariance(0, 0)))) +
                     "\n" + "base_rabi_rad_s = " + format_number(fit.base_rabi) + "\n" +
                     "decay_per_s = " + format_number(fit.decay) + "\n" +
                     "chi2 = " + format_number(fit.chi2) + "\n";
  if (!opt.out_dir.empty()) {
    ensure_directory(opt.out_dir);
    write_text(opt.out_dir + "/thermometry.json", report.dump(2) + "\n");
  }
  std::cout << text;
  return 0;
}

inline int cli_main(int argc, char** argv) {
  CLI::App app{"displaced-cat noise spectroscopy toolkit"};
  app.require_subcommand(1);
  CliOptions opt;

  auto add_common = [&](CLI::App* cmd, bool needs_config) {
    auto* config_opt = cmd->add_option("--config", opt.config_path, "campaign config JSON");
    if (needs_config) config_opt->required();
    cmd->add_option("--out", opt.out_dir, "output directory (default from config)");
    cmd->add_option("--seed", opt.seed, "seed override")->each([&](const std::string&) {
      opt.seed_set = true;
    });
  };
  auto add_grid = [&](CLI::App* cmd) {
    cmd->add_option("--omega-min", opt.omega_min, "grid start, rad/s (default from config)");
    cmd->add_option("--omega-max", opt.omega_max, "grid end, rad/s (default from config)");
    cmd->add_option("--n", opt.grid_points, "grid points");
    cmd->add_option("--kernel", opt.kernel, "first_order or literal_quasi_static")
        ->default_str("first_order");
  };

  auto* filters = app.add_subcommand("filters", "export filter curves and the sensing matrix");
  add_common(filters, true);
  add_grid(filters);

  auto* identify = app.add_subcommand("identify", "sweep a tone across each filter band");
  add_common(identify, true);
  identify->add_option("--points", opt.sweep_points, "sweep points per sequence")
      ->check(CLI::Range(2, 100000));
  identify->add_option("--phase-samples", opt.phase_samples, "noise-phase samples per point")
      ->check(CLI::Range(1, 100000));
  identify->add_flag("--sweep-beta", opt.sweep_beta, "sweep tone strength at the peak instead");
  identify->add_option("--kernel", opt.kernel, "prediction kernel")->default_str("first_order");

  auto* simulate = app.add_subcommand("simulate", "run a measurement campaign");
  add_common(simulate, true);

  auto* reconstruct_cmd = app.add_subcommand("reconstruct", "invert measurements to a spectrum");
  add_common(reconstruct_cmd, true);
  reconstruct_cmd->add_option("--measurements", opt.data_path, "measurement records CSV")
      ->required();
  add_grid(reconstruct_cmd);

  auto* sensitivity = app.add_subcommand("sensitivity", "report sensitivity limits per sequence");
  add_common(sensitivity, true);
  add_grid(sensitivity);
  sensitivity->add_option("--p-min", opt.p_min, "minimum discernible signal, in (0, 0.5)");

  auto* thermometry = app.add_subcommand("thermometry", "fit sideband flopping data");
  thermometry->add_option("--data", opt.data_path, "CSV with t_s,p1,sigma")->required();
  thermometry->add_option("--eta", opt.eta, "Lamb-Dicke parameter")->required();
  thermometry->add_option("--n-max", opt.n_max, "phonon truncation")->check(CLI::Range(1, 100000));
  thermometry->add_option("--out", opt.out_dir, "output directory for the JSON report");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 2;
  }

  try {
    if (filters->parsed()) return run_filters(opt);
    if (identify->parsed()) return run_identify(opt);
    if (simulate->parsed()) return run_simulate(opt);
    if (reconstruct_cmd->parsed()) return run_reconstruct(opt);
    if (sensitivity->parsed()) return run_sensitivity(opt);
    if (thermometry->parsed()) return run_thermometry(opt);
  } catch (const ValidationError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  } catch (const NumericError& e) {
    std::cerr << "numerical failure: " << e.what() << "\n";
    return 3;
  }
  return 0;
}

}  // namespace catspec
