#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "dictsel/datagen.hpp"
#include "dictsel/library.hpp"
#include "dictsel/regressors.hpp"
#include "dictsel/weakform.hpp"

namespace dictsel {

/// DICTSEL_LOG: 0/off (default), 1/info, 2/debug.
int log_level();
void log_info(const std::string& message);
void log_debug(const std::string& message);

struct DataConfig {
  std::string system;                    // lorenz | hopf | pitchfork | burgers | "" (file input)
  std::string input;                     // trajectory CSV or grid CSV
  std::string input_meta;                // grid sidecar JSON
  std::map<std::string, double> params;  // system parameters by name
  std::vector<double> x0;
  double t0 = 0.0;
  double t_final = 0.0;
  double dt = 0.0;
  double eta = 0.0;  // noise level applied to the record before fitting
  std::uint64_t seed = 0;
  // burgers grid
  int nx = 256;
  int nt = 200;
  double x_end = 2.0 * M_PI;
  double t_fraction = 0.8;  // final time as a fraction of the shock time
};

struct LibraryConfig {
  std::string type = "poly";  // poly | lorenz_paper | pde_trial
  int max_degree = 3;
  int max_power = 3;       // pde_trial
  int max_derivative = 2;  // pde_trial
};

struct WeakConfig {
  bool enabled = true;
  int K = 0;                 // 0 -> 2n
  int p = 7;
  int q = 7;
  double support_len = 0.0;  // 0 -> quarter of the record
};

struct WeakPdeConfig {
  int Kx = 0;  // 0 -> chosen so Kx*Kt ~= 2n with Kx = Kt
  int Kt = 0;
  int p = 4;
  int q = 4;
  double support_len_x = 0.0;  // 0 -> quarter of the domain
  double support_len_t = 0.0;
};

struct RegressorConfig {
  std::string name = "gbsr";     // gbsr | esr | gfsr | stls | ssr_cv | omp
  std::string targets = "all";   // all | coordinate
  int coordinate = 1;            // 1-based, when targets == "coordinate"
  std::string aggregate = "sum"; // sum | sum_of_squares
  double lambda = 0.0;           // stls
  int max_iter = kDefaultStlsMaxIter;
  int max_remove = 0;            // esr, 0 -> n
  double omp_delta = 1e-8;
  int omp_max_terms = 0;  // 0 -> n
  int cv_folds = 5;
  std::string policy = "none";  // none | max_ratio | threshold | fixed_terms
  double epsilon = 0.0;
  int kept_terms = 0;  // fixed_terms policy
};

struct SweepConfig {
  std::vector<double> etas;
  int replicates = 1;
  std::uint64_t base_seed = 0;
  std::string search = "exhaustive";  // exhaustive | gbsr
  int kept = 0;                       // target support size
  std::string targets = "all";        // all | coordinate
  int coordinate = 1;
  std::vector<std::string> true_support;
};

struct ScreenConfig {
  std::vector<double> keep_fractions;
  double lambda = 0.1;
  double eta = 0.0;
  int replicates = 1;
  std::uint64_t base_seed = 0;
  // coordinate name -> (term label -> coefficient)
  std::map<std::string, std::map<std::string, double>> true_model;
};

struct ExperimentConfig {
  DataConfig data;
  LibraryConfig library;
  bool normalize = true;
  double rank_tol = kDefaultRankTol;  // drop tolerance for dependent columns
  WeakConfig weak;
  WeakPdeConfig weak_pde;
  RegressorConfig regressor;
  std::optional<SweepConfig> sweep;
  std::optional<ScreenConfig> screen;
  int threads = 0;  // 0 -> hardware concurrency
  bool write_weak_system = false;
  bool write_dataset = false;
};

/// Parse and validate a config JSON file. Unknown keys are rejected;
/// defaults are resolved so the echoed config is complete.
ExperimentConfig load_config(const std::filesystem::path& path);
ExperimentConfig parse_config(const std::string& json_text);
std::string config_to_json(const ExperimentConfig& config);

struct SweepRow {
  double eta = 0.0;
  std::string method;
  int replicates = 0;
  int successes = 0;
  double success_rate = 0.0;
};

struct ScreenRow {
  double keep_fraction = 0.0;
  double eta = 0.0;
  int replicates = 0;
  double mean_error = 0.0;
  double std_error = 0.0;
};

struct RunReport {
  std::filesystem::path out_dir;
  std::vector<std::filesystem::path> outputs;  // files referenced by the manifest
  std::string manifest_json;
  // In-memory results for tests and callers.
  std::vector<ScoreTrace> traces;          // identify
  std::optional<SparseModel> model;        // identify
  std::vector<std::string> coordinate_names;
  std::vector<SweepRow> sweep_rows;        // noise sweep
  std::vector<ScreenRow> screen_rows;      // screening study
};

/// Simulate (or ingest), transform, run the configured regressor, optionally
/// select a sparsity level, refit, and write manifest + traces + model.
RunReport run_identify(const ExperimentConfig& config, const std::filesystem::path& out_dir);

/// Generate or ingest the configured dataset and write it out.
RunReport run_simulate(const ExperimentConfig& config, const std::filesystem::path& out_dir);

/// Noise sweep: per (eta, replicate) re-noise with seed base_seed + replicate,
/// run the configured support search, count exact support recoveries.
RunReport run_noise_sweep(const ExperimentConfig& config, const std::filesystem::path& out_dir);

/// Screening study: keep_fraction x replicate grid of screen_then_stls runs,
/// coefficient errors against the configured true model.
RunReport run_screening_study(const ExperimentConfig& config, const std::filesystem::path& out_dir);

}  // namespace dictsel
