#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <filesystem>
#include <fstream>
#include <numbers>
#include <string>
#include <vector>

#include "catspec/cli.hpp"
#include "catspec/io.hpp"

using namespace catspec;
namespace fs = std::filesystem;

namespace {

constexpr double kPi = std::numbers::pi;

int run_cli(std::vector<std::string> args) {
  args.insert(args.begin(), "catspec");
  std::vector<char*> argv;
  argv.reserve(args.size());
  for (auto& a : args) argv.push_back(a.data());
  return cli_main(static_cast<int>(argv.size()), argv.data());
}

std::string slurp(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  REQUIRE(in.good());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

int line_count(const std::string& text) {
  int n = 0;
  for (char c : text)
    if (c == '\n') ++n;
  return n;
}

CampaignConfig sample_config(const NoiseModel& noise) {
  CampaignConfig config;
  config.sequences.push_back({"a", 2e-3, 8, 2 * kPi * 3000, Shape::Square, 0, 0.0});
  config.sequences.push_back({"b", 2e-3, 12, 2 * kPi * 3000, Shape::Slepian, 64, 1.0 / 64});
  config.modes.modes.push_back({0.108, 0.0, 0.2});
  config.noise = noise;
  config.blocks = 4;
  config.reps_per_block = 50;
  config.reconstruction.lambda_candidates = {0.01, 0.1};
  config.reconstruction.resamples = 3;
  config.seed = 9;
  config.seed_set = true;
  config.out_dir = "out";
  return config;
}

}  // namespace

TEST_CASE("campaign config survives a serialization round trip") {
  SampledPSD psd;
  psd.omegas = Eigen::VectorXd::LinSpaced(3, 2 * kPi * 100, 2 * kPi * 300);
  psd.values = Eigen::VectorXd::Constant(3, 1.5);
  psd.bins = 32;
  const NoiseModel models[] = {NoNoise{}, SingleTone{30, 2 * kPi * 1500, 0.25, false},
                               MultiTone{{SingleTone{10, 500, 0, true}, SingleTone{20, 900, 1, true}}},
                               NoiseModel{psd}};
  for (const auto& noise : models) {
    const CampaignConfig config = sample_config(noise);
    const CampaignConfig back = config_from_json(to_json(config));
    CHECK(back == config);
  }
}

TEST_CASE("frequencies may be given in hertz") {
  const json j = {{"label", "x"}, {"tau_s", 2e-3}, {"num_phase_shifts", 8}, {"rabi_hz", 6000}};
  CHECK(sequence_from_json(j).omega_max == doctest::Approx(2 * kPi * 6000).epsilon(1e-14));

  json both = j;
  both["omega_max"] = 100.0;
  CHECK_THROWS_WITH_AS(sequence_from_json(both), doctest::Contains("not both"), ValidationError);

  const json tone = {{"type", "single_tone"}, {"amplitude_hz", 40}, {"frequency_hz", 1500}};
  const auto noise = noise_from_json(tone);
  CHECK(std::get<SingleTone>(noise).omega == doctest::Approx(2 * kPi * 1500).epsilon(1e-14));
}

TEST_CASE("config validation failures name the offence") {
  json base = to_json(sample_config(NoNoise{}));

  json missing_label = base;
  missing_label["sequences"][0].erase("label");
  CHECK_THROWS_WITH_AS(config_from_json(missing_label), doctest::Contains("label"), ValidationError);

  json unknown_noise = base;
  unknown_noise["noise"] = {{"type", "pink"}};
  CHECK_THROWS_WITH_AS(config_from_json(unknown_noise), doctest::Contains("pink"), ValidationError);

  json duplicate = base;
  duplicate["sequences"][1]["label"] = "a";
  CHECK_THROWS_WITH_AS(config_from_json(duplicate), doctest::Contains("duplicate"), ValidationError);

  json empty = base;
  empty["sequences"] = json::array();
  CHECK_THROWS_AS(config_from_json(empty), ValidationError);

  json no_modes = base;
  no_modes.erase("modes");
  CHECK_THROWS_AS(config_from_json(no_modes), ValidationError);
}

TEST_CASE("number formatting round-trips exactly") {
  for (double v : {1.0 / 3.0, 0.1, 1e-300, 6.02214076e23, 2 * kPi * 15000, 0.0}) {
    CHECK(std::stod(format_number(v)) == v);
  }
}

TEST_CASE("measurement records survive a file round trip") {
  const fs::path dir = fs::temp_directory_path() / "catspec_io_test";
  fs::remove_all(dir);
  fs::create_directories(dir);

  std::vector<MeasurementRecord> records(2);
  records[0] = {"a", 2e-3, 8, Shape::Square, 2 * kPi * 3000, 0.0123456789012345, 0.003, 10, 200, 42};
  records[1] = {"b", 1.5e-3, 12, Shape::Slepian, 2 * kPi * 6000, 1.0 / 3, 0.001, 10, 200,
                18446744073709551615ull};
  const fs::path path = dir / "records.csv";
  write_text(path.string(), records_csv(records));
  const auto back = read_records_csv(path.string());
  REQUIRE(back.size() == 2);
  for (int i = 0; i < 2; ++i) {
    CHECK(back[i].label == records[i].label);
    CHECK(back[i].tau_s == records[i].tau_s);
    CHECK(back[i].num_phase_shifts == records[i].num_phase_shifts);
    CHECK(back[i].shape == records[i].shape);
    CHECK(back[i].omega_max == records[i].omega_max);
    CHECK(back[i].p1_mean == records[i].p1_mean);
    CHECK(back[i].p1_std == records[i].p1_std);
    CHECK(back[i].blocks == records[i].blocks);
    CHECK(back[i].reps_per_block == records[i].reps_per_block);
    CHECK(back[i].seed == records[i].seed);
  }
}

TEST_CASE("csv failures carry the file position") {
  const fs::path dir = fs::temp_directory_path() / "catspec_io_test";
  fs::create_directories(dir);

  const fs::path bad_header = dir / "bad_header.csv";
  write_text(bad_header.string(), "label,tau\nx,1\n");
  CHECK_THROWS_WITH_AS(read_records_csv(bad_header.string()), doctest::Contains("header mismatch"),
                       ValidationError);

  const fs::path bad_value = dir / "bad_value.csv";
  write_text(bad_value.string(),
             "label,tau_s,S,shape,omega_max_rad_s,p1_mean,p1_std,M,r,seed\n"
             "a,0.002,8,square,18849.6,abc,0.003,10,200,42\n");
  try {
    read_records_csv(bad_value.string());
    FAIL("expected a parse failure");
  } catch (const ValidationError& e) {
    const std::string what = e.what();
    CHECK(what.find("row 2") != std::string::npos);
    CHECK(what.find("column 6") != std::string::npos);
    CHECK(what.find("abc") != std::string::npos);
  }

  const fs::path bad_seed = dir / "bad_seed.csv";
  write_text(bad_seed.string(),
             "label,tau_s,S,shape,omega_max_rad_s,p1_mean,p1_std,M,r,seed\n"
             "a,0.002,8,square,18849.6,0.01,0.003,10,200,seed\n");
  CHECK_THROWS_WITH_AS(read_records_csv(bad_seed.string()), doctest::Contains("as a seed"),
                       ValidationError);

  const fs::path ragged = dir / "ragged.csv";
  write_text(ragged.string(), "t_s,p1,sigma\n0.001,0.2\n");
  CHECK_THROWS_WITH_AS(read_sideband_csv(ragged.string()), doctest::Contains("row 2"),
                       ValidationError);
}

TEST_CASE("sideband data round trip") {
  const fs::path dir = fs::temp_directory_path() / "catspec_io_test";
  fs::create_directories(dir);
  const fs::path path = dir / "sideband.csv";
  std::string text = "t_s,p1,sigma\n";
  for (int i = 1; i <= 8; ++i)
    text += format_number(i * 1e-5) + "," + format_number(0.1 * i) + ",0.01\n";
  write_text(path.string(), text);
  const auto points = read_sideband_csv(path.string());
  REQUIRE(points.size() == 8);
  CHECK(points[3].t_s == 4e-5);
  CHECK(points[3].p1 == doctest::Approx(0.4).epsilon(1e-15));
  CHECK(points[3].sigma == 0.01);
}

TEST_CASE("command line end to end") {
  const fs::path dir = fs::temp_directory_path() / "catspec_cli_test";
  fs::remove_all(dir);
  fs::create_directories(dir);
  const fs::path out = dir / "out";

  json config = to_json(sample_config(SingleTone{30, 2 * kPi * 2000, 0, true}));
  for (int s : {10, 14, 16}) {
    json extra = config["sequences"][0];
    extra["label"] = "s" + std::to_string(s);
    extra["num_phase_shifts"] = s;
    config["sequences"].push_back(extra);
  }
  config["out_dir"] = out.string();
  const fs::path config_path = dir / "config.json";
  write_text(config_path.string(), config.dump(2) + "\n");

  SUBCASE("filter export") {
    CHECK(run_cli({"filters", "--config", config_path.string(), "--n", "101"}) == 0);
    CHECK(fs::exists(out / "filter_a.csv"));
    CHECK(fs::exists(out / "filter_b.csv"));
    CHECK(fs::exists(out / "filter_matrix.csv"));
    const std::string curve = slurp(out / "filter_a.csv");
    CHECK(curve.rfind("omega_rad_s,value_per_hz2\n", 0) == 0);
    CHECK(line_count(curve) == 102);

    // a separate output root leaves the default untouched
    const fs::path out2 = dir / "out2";
    CHECK(run_cli({"filters", "--config", config_path.string(), "--n", "51", "--out",
                   out2.string()}) == 0);
    CHECK(fs::exists(out2 / "filter_matrix.csv"));
  }

  SUBCASE("campaign runs are byte stable") {
    CHECK(run_cli({"simulate", "--config", config_path.string()}) == 0);
    const std::string first = slurp(out / "records.csv");
    CHECK(run_cli({"simulate", "--config", config_path.string()}) == 0);
    CHECK(slurp(out / "records.csv") == first);
    CHECK(line_count(first) == 6);

    // a different seed changes the draw
    CHECK(run_cli({"simulate", "--config", config_path.string(), "--seed", "10"}) == 0);
    CHECK(slurp(out / "records.csv") != first);
  }

  SUBCASE("stochastic commands demand a seed") {
    json unseeded = config;
    unseeded.erase("seed");
    const fs::path unseeded_path = dir / "unseeded.json";
    write_text(unseeded_path.string(), unseeded.dump(2) + "\n");
    CHECK(run_cli({"simulate", "--config", unseeded_path.string()}) == 2);
    CHECK(run_cli({"simulate", "--config", unseeded_path.string(), "--seed", "3"}) == 0);
  }

  SUBCASE("argument failures exit with the usage code") {
    CHECK(run_cli({"simulate", "--config", config_path.string(), "--bogus"}) == 2);
    CHECK(run_cli({}) == 2);
    CHECK(run_cli({"--help"}) == 0);
    CHECK(run_cli({"simulate", "--config", (dir / "missing.json").string()}) == 2);
    const fs::path broken = dir / "broken.json";
    write_text(broken.string(), "{ not json");
    CHECK(run_cli({"simulate", "--config", broken.string()}) == 2);
  }

  SUBCASE("spectrum inversion from simulated records") {
    REQUIRE(run_cli({"simulate", "--config", config_path.string()}) == 0);
    CHECK(run_cli({"reconstruct", "--config", config_path.string(), "--measurements",
                   (out / "records.csv").string(), "--n", "40"}) == 0);
    const std::string spectrum = slurp(out / "spectrum.csv");
    CHECK(spectrum.rfind("omega_rad_s,psd_hz2_per_hz,band_low,band_high\n", 0) == 0);
    CHECK(line_count(spectrum) == 41);
    const json diag = json::parse(slurp(out / "diagnostics.json"));
    CHECK(diag.contains("chosen_lambda"));
    CHECK(diag.at("cv_table").size() == 2);

    // labels in the records must resolve against the config
    std::string retagged = slurp(out / "records.csv");
    const auto pos = retagged.find("\na,");
    REQUIRE(pos != std::string::npos);
    retagged.replace(pos, 3, "\nz,");
    write_text((dir / "retagged.csv").string(), retagged);
    CHECK(run_cli({"reconstruct", "--config", config_path.string(), "--measurements",
                   (dir / "retagged.csv").string(), "--n", "40"}) == 2);
  }

  SUBCASE("sensitivity report") {
    CHECK(run_cli({"sensitivity", "--config", config_path.string(), "--n", "801"}) == 0);
    const std::string text = slurp(out / "sensitivity.txt");
    CHECK(text.find("a.beta_min_hz = ") != std::string::npos);
    CHECK(text.find("set_min.beta_min_hz = ") != std::string::npos);
    const json report = json::parse(slurp(out / "sensitivity.json"));
    CHECK(report.at("per_sequence").size() == 5);
    CHECK(run_cli({"sensitivity", "--config", config_path.string(), "--p-min", "0"}) == 2);
  }

  SUBCASE("tone sweep against the prediction") {
    CHECK(run_cli({"identify", "--config", config_path.string(), "--points", "5",
                   "--phase-samples", "4"}) == 0);
    const std::string sweep = slurp(out / "identify.csv");
    CHECK(sweep.rfind("label,omega_mod_rad_s,p1_predicted,p1_simulated,p1_sem\n", 0) == 0);
    CHECK(line_count(sweep) == 26);  // 5 points for each of the five sequences

    CHECK(run_cli({"identify", "--config", config_path.string(), "--points", "3",
                   "--phase-samples", "4", "--sweep-beta"}) == 0);
    const std::string beta = slurp(out / "identify_beta.csv");
    CHECK(beta.rfind("label,beta_hz,", 0) == 0);
    CHECK(line_count(beta) == 16);
  }

  SUBCASE("occupation fit from file") {
    std::string text = "t_s,p1,sigma\n";
    Rng rng(3);
    for (int i = 1; i <= 30; ++i) {
      const double t = 4e-4 * i / 30;
      const double p = sideband_p1_model(t, 0.2, 2 * kPi * 50e3, 80.0, 0.1, 60);
      text += format_number(t) + "," + format_number(p + 0.01 * rng.normal()) + ",0.01\n";
    }
    const fs::path data = dir / "sideband.csv";
    write_text(data.string(), text);
    CHECK(run_cli({"thermometry", "--data", data.string(), "--eta", "0.1", "--n-max", "40",
                   "--out", out.string()}) == 0);
    const json report = json::parse(slurp(out / "thermometry.json"));
    CHECK(std::abs(report.at("nbar").get<double>() - 0.2) < 0.1);
    CHECK(run_cli({"thermometry", "--data", data.string(), "--eta", "0"}) == 2);
  }
}
