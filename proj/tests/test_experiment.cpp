#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <filesystem>
#include <fstream>
#include <sstream>

#include <json.hpp>

#include "dictsel/experiment.hpp"
#include "dictsel/io.hpp"

using namespace dictsel;
namespace fs = std::filesystem;

namespace {

fs::path fresh_dir(const std::string& name) {
  const fs::path dir = fs::temp_directory_path() / "dictsel_exp_test" / name;
  fs::remove_all(dir);
  fs::create_directories(dir);
  return dir;
}

std::string slurp(const fs::path& p) {
  std::ifstream f(p);
  std::stringstream ss;
  ss << f.rdbuf();
  return ss.str();
}

std::string pitchfork_config(const std::string& extra = "") {
  return R"({
    "data": {"system": "pitchfork", "params": {"mu": 0.5}, "x0": [-1.5, 1.0],
             "t0": 0.0, "t_final": 10.0, "dt": 0.01},
    "library": {"type": "poly", "max_degree": 3},
    "weak": {"enabled": true, "K": 20, "p": 7, "q": 7, "support_len": 2.5},
    "regressor": {"name": "gbsr", "targets": "all"})" +
         extra + "\n}";
}

}  // namespace

TEST_CASE("unknown config keys are rejected at every level") {
  CHECK_THROWS_WITH_AS(parse_config(R"({"data": {"system": "pitchfork"}, "bogus": 1})"),
                       doctest::Contains("bogus"), std::invalid_argument);
  CHECK_THROWS_WITH_AS(parse_config(R"({"data": {"system": "pitchfork", "x_0": [1]}})"),
                       doctest::Contains("x_0"), std::invalid_argument);
  CHECK_THROWS_WITH_AS(
      parse_config(
          R"({"data": {"system": "pitchfork"}, "regressor": {"name": "gbsr", "lam": 0.1}})"),
      doctest::Contains("lam"), std::invalid_argument);
}

TEST_CASE("a config without data source is invalid") {
  CHECK_THROWS_AS(parse_config(R"({"data": {"t0": 0.0}})"), std::invalid_argument);
  CHECK_THROWS_AS(parse_config(R"({"library": {"type": "poly"}})"), std::invalid_argument);
}

TEST_CASE("config echo parses back to the same echo") {
  const ExperimentConfig c = parse_config(pitchfork_config());
  const std::string once = config_to_json(c);
  const std::string twice = config_to_json(parse_config(once));
  CHECK(once == twice);
}

TEST_CASE("validation failure writes nothing") {
  const fs::path dir = fresh_dir("invalid");
  CHECK_THROWS(parse_config(R"({"data": {"system": "pitchfork"}, "oops": {}})"));
  CHECK(fs::is_empty(dir));
}

TEST_CASE("identify produces a manifest whose files all exist and parse") {
  const fs::path dir = fresh_dir("identify");
  const ExperimentConfig config = parse_config(pitchfork_config());
  const RunReport report = run_identify(config, dir);

  REQUIRE(fs::exists(dir / "manifest.json"));
  const auto manifest = nlohmann::json::parse(slurp(dir / "manifest.json"));
  CHECK(manifest.at("command") == "identify");
  REQUIRE(!report.outputs.empty());
  for (const fs::path& p : report.outputs) {
    CHECK(fs::exists(p));
    if (p.extension() == ".json") {
      const auto parsed = nlohmann::json::parse(slurp(p));
      CHECK(!parsed.is_discarded());
    }
  }
  // Pitchfork with 2 coordinates: per-coordinate traces + aggregate.
  CHECK(fs::exists(dir / "trace_x.csv"));
  CHECK(fs::exists(dir / "trace_y.csv"));
  CHECK(fs::exists(dir / "trace_all.csv"));
  CHECK(fs::exists(dir / "model.json"));
  REQUIRE(report.model.has_value());
  CHECK(report.model->coordinates.size() == 2);
}

TEST_CASE("identify is reproducible byte for byte") {
  const fs::path dir1 = fresh_dir("repro1");
  const fs::path dir2 = fresh_dir("repro2");
  const ExperimentConfig config = parse_config(pitchfork_config());
  run_identify(config, dir1);
  run_identify(config, dir2);
  for (const char* name : {"trace_x.csv", "trace_y.csv", "trace_all.csv", "model.json"}) {
    CHECK(slurp(dir1 / name) == slurp(dir2 / name));
  }
}

TEST_CASE("the manifest's echoed config reproduces the run") {
  const fs::path dir1 = fresh_dir("echo1");
  const fs::path dir2 = fresh_dir("echo2");
  run_identify(parse_config(pitchfork_config()), dir1);
  const auto manifest = nlohmann::json::parse(slurp(dir1 / "manifest.json"));
  const ExperimentConfig echoed = parse_config(manifest.at("config").dump());
  run_identify(echoed, dir2);
  for (const char* name : {"trace_x.csv", "trace_y.csv", "trace_all.csv", "model.json"}) {
    CHECK(slurp(dir1 / name) == slurp(dir2 / name));
  }
}

TEST_CASE("identify with fixed_terms keeps the requested count") {
  const fs::path dir = fresh_dir("fixed");
  ExperimentConfig fixed = parse_config(pitchfork_config());
  fixed.regressor.policy = "fixed_terms";
  fixed.regressor.kept_terms = 3;
  const RunReport report = run_identify(fixed, dir);
  REQUIRE(report.model.has_value());
  for (const auto& coord : report.model->coordinates) {
    CHECK(coord.coefficients.support.size() <= 3);
  }
}

TEST_CASE("simulate writes an ingestible dataset") {
  const fs::path dir = fresh_dir("simulate");
  ExperimentConfig config = parse_config(pitchfork_config());
  config.data.eta = 0.01;
  config.data.seed = 42;
  run_simulate(config, dir);
  REQUIRE(fs::exists(dir / "dataset.csv"));
  const TrajectoryDataset data = io::read_trajectory_csv(dir / "dataset.csv");
  CHECK(data.samples() == 1001);
  CHECK(data.dim() == 2);

  // Ingest the file through identify.
  const fs::path dir2 = fresh_dir("ingest");
  ExperimentConfig ingest = parse_config(pitchfork_config());
  ingest.data.system.clear();
  ingest.data.input = (dir / "dataset.csv").string();
  const RunReport report = run_identify(ingest, dir2);
  CHECK(report.model.has_value());
}

TEST_CASE("pde identify on characteristics data recovers the flux term") {
  const fs::path dir = fresh_dir("pde");
  const std::string text = R"({
    "data": {"system": "burgers", "nx": 128, "nt": 80, "t_fraction": 0.5},
    "library": {"type": "pde_trial", "max_power": 3, "max_derivative": 2},
    "weak_pde": {"Kx": 6, "Kt": 6, "p": 4, "q": 4},
    "regressor": {"name": "gbsr", "policy": "fixed_terms", "kept_terms": 1}
  })";
  const RunReport report = run_identify(parse_config(text), dir);
  REQUIRE(report.model.has_value());
  REQUIRE(report.model->coordinates.size() == 1);
  const auto& coord = report.model->coordinates[0];
  REQUIRE(coord.coefficients.support.size() == 1);
  const int idx = coord.coefficients.support[0];
  CHECK(report.model->library_labels[idx] == "dx(u^2)");
  CHECK(coord.coefficients.values[idx] == doctest::Approx(-0.5).epsilon(0.05));
}

TEST_CASE("noise sweep counts exact support recoveries deterministically") {
  const std::string text = R"({
    "data": {"system": "pitchfork", "params": {"mu": 0.5}, "x0": [-1.5, 1.0],
             "t0": 0.0, "t_final": 10.0, "dt": 0.01},
    "library": {"type": "poly", "max_degree": 3},
    "weak": {"enabled": true, "K": 20, "p": 7, "q": 7, "support_len": 2.5},
    "sweep": {"etas": [0.0, 0.005], "replicates": 3, "base_seed": 11,
              "search": "exhaustive", "kept": 2, "targets": "coordinate",
              "coordinate": 1, "true_support": ["x", "x^3"]},
    "threads": 2
  })";
  const fs::path dir1 = fresh_dir("sweep1");
  const RunReport r1 = run_noise_sweep(parse_config(text), dir1);
  REQUIRE(r1.sweep_rows.size() == 2);
  CHECK(r1.sweep_rows[0].eta == 0.0);
  CHECK(r1.sweep_rows[0].success_rate == 1.0);  // noiseless exact recovery
  REQUIRE(fs::exists(dir1 / "sweep.csv"));

  // Same run with a different thread count: identical CSV bytes.
  const fs::path dir2 = fresh_dir("sweep2");
  ExperimentConfig serial = parse_config(text);
  serial.threads = 1;
  run_noise_sweep(serial, dir2);
  CHECK(slurp(dir1 / "sweep.csv") == slurp(dir2 / "sweep.csv"));
}

TEST_CASE("gbsr sweep search uses the nested trace level") {
  const std::string text = R"({
    "data": {"system": "pitchfork", "params": {"mu": 0.5}, "x0": [-1.5, 1.0],
             "t0": 0.0, "t_final": 10.0, "dt": 0.01},
    "library": {"type": "poly", "max_degree": 2},
    "weak": {"enabled": true, "K": 12, "p": 5, "q": 5, "support_len": 2.5},
    "sweep": {"etas": [0.0], "replicates": 2, "base_seed": 3, "search": "gbsr",
              "kept": 1, "targets": "coordinate", "coordinate": 2,
              "true_support": ["y"]}
  })";
  const fs::path dir = fresh_dir("sweep_gbsr");
  const RunReport report = run_noise_sweep(parse_config(text), dir);
  REQUIRE(report.sweep_rows.size() == 1);
  CHECK(report.sweep_rows[0].success_rate == 1.0);
}

TEST_CASE("screening study emits one row per keep fraction") {
  const std::string text = R"({
    "data": {"system": "lorenz", "params": {"sigma": 10.0, "rho": 26.0, "beta": 2.6666666666666665},
             "x0": [-8.0, 8.0, 27.0], "t0": 0.0, "t_final": 5.0, "dt": 0.01},
    "library": {"type": "poly", "max_degree": 2},
    "normalize": false,
    "weak": {"enabled": true, "K": 24, "p": 7, "q": 7, "support_len": 1.25},
    "screen": {"keep_fractions": [1.0, 0.5], "lambda": 0.2, "eta": 0.01,
               "replicates": 3, "base_seed": 5,
               "true_model": {"x": {"x": -10.0, "y": 10.0},
                              "y": {"x": 26.0, "y": -1.0, "xz": -1.0},
                              "z": {"xy": 1.0, "z": -2.6666666666666665}}}
  })";
  const fs::path dir = fresh_dir("screen");
  const RunReport report = run_screening_study(parse_config(text), dir);
  REQUIRE(report.screen_rows.size() == 2);
  for (const ScreenRow& row : report.screen_rows) {
    CHECK(row.replicates == 3);
    CHECK(std::isfinite(row.mean_error));
    CHECK(row.std_error >= 0.0);
    // Sanity: far better than the zero model, whose error is ||c_true|| ~ 30.
    CHECK(row.mean_error < 15.0);
  }
  REQUIRE(fs::exists(dir / "screen.csv"));
  std::ifstream f(dir / "screen.csv");
  std::string header;
  std::getline(f, header);
  CHECK(header == "keep_fraction,eta,replicates,mean_error,std_error");
}

TEST_CASE("stls regressor writes iteration traces") {
  const fs::path dir = fresh_dir("stls");
  ExperimentConfig config = parse_config(pitchfork_config());
  config.regressor.name = "stls";
  config.regressor.lambda = 0.1;
  config.normalize = false;
  const RunReport report = run_identify(config, dir);
  REQUIRE(report.model.has_value());
  CHECK(fs::exists(dir / "trace_x.csv"));
  std::ifstream f(dir / "trace_x.csv");
  std::string header;
  std::getline(f, header);
  CHECK(header == "iteration,support_labels,nnz,objective");
}

TEST_CASE("ssr_cv regressor writes a cross-validation trace per coordinate") {
  const fs::path dir = fresh_dir("ssrcv");
  ExperimentConfig config = parse_config(pitchfork_config());
  config.library.max_degree = 2;
  config.regressor.name = "ssr_cv";
  config.regressor.targets = "coordinate";
  config.regressor.coordinate = 2;
  config.regressor.cv_folds = 4;
  const RunReport report = run_identify(config, dir);
  REQUIRE(report.traces.size() == 1);
  CHECK(report.traces[0].kind == ScoreKind::cross_validation);
  CHECK(fs::exists(dir / "trace_y.csv"));
}

TEST_CASE("a regress-stage failure names the stage and leaves no outputs") {
  const fs::path dir = fresh_dir("stagefail");
  ExperimentConfig config = parse_config(pitchfork_config());
  config.normalize = false;     // omp requires unit columns
  config.regressor.name = "omp";
  CHECK_THROWS_WITH_AS(run_identify(config, dir), doctest::Contains("stage 'regress'"),
                       std::runtime_error);
  CHECK(!fs::exists(dir / "model.json"));
  CHECK(!fs::exists(dir / "manifest.json"));
}

TEST_CASE("the report survives an output directory that already exists") {
  const fs::path dir = fresh_dir("twice");
  const ExperimentConfig config = parse_config(pitchfork_config());
  run_identify(config, dir);
  CHECK_NOTHROW(run_identify(config, dir));
}
