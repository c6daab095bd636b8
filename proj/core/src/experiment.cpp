#include "dictsel/experiment.hpp"

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cmath>
#include <cstdlib>
#include <fstream>
#include <iostream>
#include <limits>
#include <numeric>
#include <set>
#include <sstream>
#include <thread>

#include <json.hpp>

#include "dictsel/io.hpp"
#include "dictsel/version.hpp"

namespace dictsel {

using nlohmann::json;

// ---------------------------------------------------------------------------
// Logging
// ---------------------------------------------------------------------------

int log_level() {
  static const int level = [] {
    const char* env = std::getenv("DICTSEL_LOG");
    if (env == nullptr) return 0;
    const std::string v(env);
    if (v == "debug" || v == "2") return 2;
    if (v == "info" || v == "1") return 1;
    return 0;
  }();
  return level;
}

void log_info(const std::string& message) {
  if (log_level() >= 1) std::cerr << "[dictsel] " << message << "\n";
}

void log_debug(const std::string& message) {
  if (log_level() >= 2) std::cerr << "[dictsel:debug] " << message << "\n";
}

// ---------------------------------------------------------------------------
// Config parsing
// ---------------------------------------------------------------------------

namespace {

void check_keys(const json& obj, const std::set<std::string>& allowed, const std::string& where) {
  if (!obj.is_object()) throw std::invalid_argument("config: '" + where + "' must be an object");
  for (const auto& [key, value] : obj.items()) {
    if (!allowed.count(key)) {
      throw std::invalid_argument("config: unknown key '" + key + "' in " + where);
    }
  }
}

template <typename T>
T get_or(const json& obj, const char* key, T fallback) {
  if (!obj.contains(key)) return fallback;
  return obj.at(key).get<T>();
}

DataConfig parse_data(const json& j) {
  check_keys(j, {"system", "input", "input_meta", "params", "x0", "t0", "t_final", "dt", "eta",
                 "seed", "nx", "nt", "x_end", "t_fraction"},
             "data");
  DataConfig d;
  d.system = get_or<std::string>(j, "system", "");
  d.input = get_or<std::string>(j, "input", "");
  d.input_meta = get_or<std::string>(j, "input_meta", "");
  if (j.contains("params")) {
    for (const auto& [key, value] : j.at("params").items()) d.params[key] = value.get<double>();
  }
  d.x0 = get_or<std::vector<double>>(j, "x0", {});
  d.t0 = get_or<double>(j, "t0", 0.0);
  d.t_final = get_or<double>(j, "t_final", 0.0);
  d.dt = get_or<double>(j, "dt", 0.0);
  d.eta = get_or<double>(j, "eta", 0.0);
  d.seed = get_or<std::uint64_t>(j, "seed", 0);
  d.nx = get_or<int>(j, "nx", 256);
  d.nt = get_or<int>(j, "nt", 200);
  d.x_end = get_or<double>(j, "x_end", 2.0 * M_PI);
  d.t_fraction = get_or<double>(j, "t_fraction", 0.8);
  if (d.system.empty() && d.input.empty()) {
    throw std::invalid_argument("config: data needs either 'system' or 'input'");
  }
  return d;
}

LibraryConfig parse_library(const json& j) {
  check_keys(j, {"type", "max_degree", "max_power", "max_derivative"}, "library");
  LibraryConfig l;
  l.type = get_or<std::string>(j, "type", "poly");
  l.max_degree = get_or<int>(j, "max_degree", 3);
  l.max_power = get_or<int>(j, "max_power", 3);
  l.max_derivative = get_or<int>(j, "max_derivative", 2);
  if (l.type != "poly" && l.type != "lorenz_paper" && l.type != "pde_trial") {
    throw std::invalid_argument("config: unknown library type '" + l.type + "'");
  }
  return l;
}

WeakConfig parse_weak(const json& j) {
  check_keys(j, {"enabled", "K", "p", "q", "support_len"}, "weak");
  WeakConfig w;
  w.enabled = get_or<bool>(j, "enabled", true);
  w.K = get_or<int>(j, "K", 0);
  w.p = get_or<int>(j, "p", 7);
  w.q = get_or<int>(j, "q", 7);
  w.support_len = get_or<double>(j, "support_len", 0.0);
  return w;
}

WeakPdeConfig parse_weak_pde(const json& j) {
  check_keys(j, {"Kx", "Kt", "p", "q", "support_len_x", "support_len_t"}, "weak_pde");
  WeakPdeConfig w;
  w.Kx = get_or<int>(j, "Kx", 0);
  w.Kt = get_or<int>(j, "Kt", 0);
  w.p = get_or<int>(j, "p", 4);
  w.q = get_or<int>(j, "q", 4);
  w.support_len_x = get_or<double>(j, "support_len_x", 0.0);
  w.support_len_t = get_or<double>(j, "support_len_t", 0.0);
  return w;
}

RegressorConfig parse_regressor(const json& j) {
  check_keys(j, {"name", "targets", "coordinate", "aggregate", "lambda", "max_iter", "max_remove",
                 "omp_delta", "omp_max_terms", "cv_folds", "policy", "epsilon", "kept_terms"},
             "regressor");
  RegressorConfig r;
  r.name = get_or<std::string>(j, "name", "gbsr");
  r.targets = get_or<std::string>(j, "targets", "all");
  r.coordinate = get_or<int>(j, "coordinate", 1);
  r.aggregate = get_or<std::string>(j, "aggregate", "sum");
  r.lambda = get_or<double>(j, "lambda", 0.0);
  r.max_iter = get_or<int>(j, "max_iter", kDefaultStlsMaxIter);
  r.max_remove = get_or<int>(j, "max_remove", 0);
  r.omp_delta = get_or<double>(j, "omp_delta", 1e-8);
  r.omp_max_terms = get_or<int>(j, "omp_max_terms", 0);
  r.cv_folds = get_or<int>(j, "cv_folds", 5);
  r.policy = get_or<std::string>(j, "policy", "none");
  r.epsilon = get_or<double>(j, "epsilon", 0.0);
  r.kept_terms = get_or<int>(j, "kept_terms", 0);
  const std::set<std::string> names{"gbsr", "esr", "gfsr", "stls", "ssr_cv", "omp"};
  if (!names.count(r.name)) throw std::invalid_argument("config: unknown regressor '" + r.name + "'");
  if (r.targets != "all" && r.targets != "coordinate") {
    throw std::invalid_argument("config: regressor targets must be 'all' or 'coordinate'");
  }
  if (r.aggregate != "sum" && r.aggregate != "sum_of_squares") {
    throw std::invalid_argument("config: aggregate must be 'sum' or 'sum_of_squares'");
  }
  const std::set<std::string> policies{"none", "max_ratio", "threshold", "fixed_terms"};
  if (!policies.count(r.policy)) throw std::invalid_argument("config: unknown policy '" + r.policy + "'");
  return r;
}

SweepConfig parse_sweep(const json& j) {
  check_keys(j, {"etas", "replicates", "base_seed", "search", "kept", "targets", "coordinate",
                 "true_support"},
             "sweep");
  SweepConfig s;
  s.etas = get_or<std::vector<double>>(j, "etas", {});
  s.replicates = get_or<int>(j, "replicates", 1);
  s.base_seed = get_or<std::uint64_t>(j, "base_seed", 0);
  s.search = get_or<std::string>(j, "search", "exhaustive");
  s.kept = get_or<int>(j, "kept", 0);
  s.targets = get_or<std::string>(j, "targets", "all");
  s.coordinate = get_or<int>(j, "coordinate", 1);
  s.true_support = get_or<std::vector<std::string>>(j, "true_support", {});
  if (s.etas.empty()) throw std::invalid_argument("config: sweep.etas must be nonempty");
  if (s.replicates < 1) throw std::invalid_argument("config: sweep.replicates must be >= 1");
  if (s.search != "exhaustive" && s.search != "gbsr") {
    throw std::invalid_argument("config: sweep.search must be 'exhaustive' or 'gbsr'");
  }
  if (s.kept < 1) throw std::invalid_argument("config: sweep.kept must be >= 1");
  if (s.true_support.empty()) throw std::invalid_argument("config: sweep.true_support must be set");
  return s;
}

ScreenConfig parse_screen(const json& j) {
  check_keys(j, {"keep_fractions", "lambda", "eta", "replicates", "base_seed", "true_model"},
             "screen");
  ScreenConfig s;
  s.keep_fractions = get_or<std::vector<double>>(j, "keep_fractions", {});
  s.lambda = get_or<double>(j, "lambda", 0.1);
  s.eta = get_or<double>(j, "eta", 0.0);
  s.replicates = get_or<int>(j, "replicates", 1);
  s.base_seed = get_or<std::uint64_t>(j, "base_seed", 0);
  if (j.contains("true_model")) {
    for (const auto& [coord, terms] : j.at("true_model").items()) {
      for (const auto& [label, value] : terms.items()) {
        s.true_model[coord][label] = value.get<double>();
      }
    }
  }
  if (s.keep_fractions.empty()) {
    throw std::invalid_argument("config: screen.keep_fractions must be nonempty");
  }
  if (s.true_model.empty()) throw std::invalid_argument("config: screen.true_model must be set");
  return s;
}

}  // namespace

ExperimentConfig parse_config(const std::string& json_text) {
  json root = json::parse(json_text);
  check_keys(root, {"data", "library", "normalize", "rank_tol", "weak", "weak_pde", "regressor",
                    "sweep", "screen", "threads", "write_weak_system", "write_dataset"},
             "top level");
  ExperimentConfig c;
  if (!root.contains("data")) throw std::invalid_argument("config: missing 'data' section");
  c.data = parse_data(root.at("data"));
  c.library = parse_library(root.contains("library") ? root.at("library") : json::object());
  c.normalize = get_or<bool>(root, "normalize", true);
  c.rank_tol = get_or<double>(root, "rank_tol", kDefaultRankTol);
  if (c.rank_tol <= 0.0) throw std::invalid_argument("config: rank_tol must be positive");
  c.weak = parse_weak(root.contains("weak") ? root.at("weak") : json::object());
  c.weak_pde = parse_weak_pde(root.contains("weak_pde") ? root.at("weak_pde") : json::object());
  c.regressor = parse_regressor(root.contains("regressor") ? root.at("regressor") : json::object());
  if (root.contains("sweep")) c.sweep = parse_sweep(root.at("sweep"));
  if (root.contains("screen")) c.screen = parse_screen(root.at("screen"));
  c.threads = get_or<int>(root, "threads", 0);
  c.write_weak_system = get_or<bool>(root, "write_weak_system", false);
  c.write_dataset = get_or<bool>(root, "write_dataset", false);
  return c;
}

ExperimentConfig load_config(const std::filesystem::path& path) {
  std::ifstream f(path);
  if (!f) throw std::runtime_error("cannot open config file: " + path.string());
  std::stringstream ss;
  ss << f.rdbuf();
  return parse_config(ss.str());
}

std::string config_to_json(const ExperimentConfig& c) {
  json data{{"system", c.data.system}, {"input", c.data.input}, {"input_meta", c.data.input_meta},
            {"x0", c.data.x0},         {"t0", c.data.t0},       {"t_final", c.data.t_final},
            {"dt", c.data.dt},         {"eta", c.data.eta},     {"seed", c.data.seed},
            {"nx", c.data.nx},         {"nt", c.data.nt},       {"x_end", c.data.x_end},
            {"t_fraction", c.data.t_fraction}};
  json params = json::object();
  for (const auto& [k, v] : c.data.params) params[k] = v;
  data["params"] = std::move(params);

  json root;
  root["data"] = std::move(data);
  root["library"] = json{{"type", c.library.type},
                         {"max_degree", c.library.max_degree},
                         {"max_power", c.library.max_power},
                         {"max_derivative", c.library.max_derivative}};
  root["normalize"] = c.normalize;
  root["rank_tol"] = c.rank_tol;
  root["weak"] = json{{"enabled", c.weak.enabled}, {"K", c.weak.K}, {"p", c.weak.p},
                      {"q", c.weak.q},             {"support_len", c.weak.support_len}};
  root["weak_pde"] = json{{"Kx", c.weak_pde.Kx},
                          {"Kt", c.weak_pde.Kt},
                          {"p", c.weak_pde.p},
                          {"q", c.weak_pde.q},
                          {"support_len_x", c.weak_pde.support_len_x},
                          {"support_len_t", c.weak_pde.support_len_t}};
  root["regressor"] = json{{"name", c.regressor.name},
                           {"targets", c.regressor.targets},
                           {"coordinate", c.regressor.coordinate},
                           {"aggregate", c.regressor.aggregate},
                           {"lambda", c.regressor.lambda},
                           {"max_iter", c.regressor.max_iter},
                           {"max_remove", c.regressor.max_remove},
                           {"omp_delta", c.regressor.omp_delta},
                           {"omp_max_terms", c.regressor.omp_max_terms},
                           {"cv_folds", c.regressor.cv_folds},
                           {"policy", c.regressor.policy},
                           {"epsilon", c.regressor.epsilon},
                           {"kept_terms", c.regressor.kept_terms}};
  if (c.sweep) {
    root["sweep"] = json{{"etas", c.sweep->etas},
                         {"replicates", c.sweep->replicates},
                         {"base_seed", c.sweep->base_seed},
                         {"search", c.sweep->search},
                         {"kept", c.sweep->kept},
                         {"targets", c.sweep->targets},
                         {"coordinate", c.sweep->coordinate},
                         {"true_support", c.sweep->true_support}};
  }
  if (c.screen) {
    json tm = json::object();
    for (const auto& [coord, terms] : c.screen->true_model) {
      json t = json::object();
      for (const auto& [label, v] : terms) t[label] = v;
      tm[coord] = std::move(t);
    }
    root["screen"] = json{{"keep_fractions", c.screen->keep_fractions},
                          {"lambda", c.screen->lambda},
                          {"eta", c.screen->eta},
                          {"replicates", c.screen->replicates},
                          {"base_seed", c.screen->base_seed},
                          {"true_model", std::move(tm)}};
  }
  root["threads"] = c.threads;
  root["write_weak_system"] = c.write_weak_system;
  root["write_dataset"] = c.write_dataset;
  return root.dump(2);
}

// ---------------------------------------------------------------------------
// Dataset assembly
// ---------------------------------------------------------------------------

namespace {

struct CleanData {
  bool is_pde = false;
  TrajectoryDataset trajectory;
  GridDataset grid;
};

OdeSystem make_system(const DataConfig& d) {
  auto param = [&](const char* name, double fallback) {
    auto it = d.params.find(name);
    return it == d.params.end() ? fallback : it->second;
  };
  if (d.system == "lorenz") {
    return LorenzSystem{param("sigma", 10.0), param("rho", 26.0), param("beta", 8.0 / 3.0)};
  }
  if (d.system == "hopf") return HopfSystem{param("mu", -1e-5), param("omega", 1.0)};
  if (d.system == "pitchfork") return PitchforkSystem{param("mu", 0.5)};
  throw std::invalid_argument("config: unknown system '" + d.system + "'");
}

CleanData load_clean(const ExperimentConfig& config) {
  const DataConfig& d = config.data;
  CleanData out;
  if (d.system == "burgers") {
    out.is_pde = true;
    const auto u0 = [](double x) { return std::sin(x); };
    const double t_shock = burgers_shock_time(u0, 0.0, d.x_end);
    const double t_final = d.t_fraction * t_shock;
    const TimeGrid xg{0.0, d.x_end / (d.nx - 1), d.nx};
    const TimeGrid tg{0.0, t_final / (d.nt - 1), d.nt};
    out.grid = burgers_1d(xg, tg, u0);
    return out;
  }
  if (!d.input.empty()) {
    if (!d.input_meta.empty()) {
      out.is_pde = true;
      out.grid = io::read_grid_csv(d.input, d.input_meta);
    } else {
      out.trajectory = io::read_trajectory_csv(d.input);
    }
    return out;
  }
  const OdeSystem system = make_system(d);
  Vector x0(static_cast<Eigen::Index>(d.x0.size()));
  for (std::size_t i = 0; i < d.x0.size(); ++i) x0[static_cast<Eigen::Index>(i)] = d.x0[i];
  if (x0.size() != system_dim(system)) {
    throw std::invalid_argument("config: x0 dimension does not match system '" + d.system + "'");
  }
  if (d.dt <= 0.0 || d.t_final <= d.t0) {
    throw std::invalid_argument("config: simulation needs dt > 0 and t_final > t0");
  }
  out.trajectory = integrate_rk4(system, x0, d.t0, d.t_final, d.dt);
  return out;
}

struct AssembledProblem {
  bool is_pde = false;
  Dictionary dict;
  EvaluatedLibrary system_lib;  // weak G or strong design matrix, maybe normalized
  std::vector<Vector> targets;
  std::vector<std::string> coordinate_names;
  std::optional<WeakSystem> weak_sys;
  json resolved;  // resolved weak-form parameters etc.
};

Dictionary build_dictionary(const ExperimentConfig& config, int state_dim) {
  if (config.library.type == "poly") {
    return build_polynomial_library(state_dim, config.library.max_degree);
  }
  if (config.library.type == "lorenz_paper") {
    if (state_dim != 3) {
      throw std::invalid_argument("config: lorenz_paper library needs 3 state coordinates");
    }
    return build_lorenz_paper_library();
  }
  return build_pde_trial_library(config.library.max_power, config.library.max_derivative);
}

AssembledProblem assemble(const ExperimentConfig& config, const CleanData& clean, double eta,
                          std::uint64_t seed) {
  AssembledProblem out;
  out.is_pde = clean.is_pde;
  if (clean.is_pde) {
    if (config.library.type != "pde_trial") {
      throw std::invalid_argument("config: grid data requires library.type = pde_trial");
    }
    if (!config.weak.enabled) {
      throw std::invalid_argument("config: the PDE pipeline is weak-form only");
    }
    GridDataset grid = add_noise(clean.grid, eta, seed);
    out.dict = build_dictionary(config, 1);
    const int n = out.dict.size();
    const WeakPdeConfig& w = config.weak_pde;
    int kx = w.Kx, kt = w.Kt;
    if (kx <= 0 || kt <= 0) {
      const int k = std::max(2, static_cast<int>(std::ceil(std::sqrt(2.0 * n))));
      if (kx <= 0) kx = k;
      if (kt <= 0) kt = k;
    }
    const double span_x = grid.x_grid.dt * (grid.x_grid.samples - 1);
    const double span_t = grid.t_grid.dt * (grid.t_grid.samples - 1);
    const double slx = w.support_len_x > 0.0 ? w.support_len_x : span_x / 4.0;
    const double slt = w.support_len_t > 0.0 ? w.support_len_t : span_t / 4.0;
    const TestFunctionBank space_bank = build_test_bank(grid.x_grid, kx, w.p, w.q, slx);
    const TestFunctionBank time_bank = build_test_bank(grid.t_grid, kt, w.p, w.q, slt);
    out.weak_sys = weak_transform_pde_1d(grid, out.dict, space_bank, time_bank);
    out.system_lib = weak_library(*out.weak_sys);
    out.targets = out.weak_sys->targets;
    out.coordinate_names = {"u"};
    out.resolved = json{{"Kx", kx}, {"Kt", kt}, {"p", w.p}, {"q", w.q},
                        {"support_len_x", slx}, {"support_len_t", slt}};
  } else {
    TrajectoryDataset data = add_noise(clean.trajectory, eta, seed);
    const int dim = data.dim();
    out.dict = build_dictionary(config, dim);
    const EvaluatedLibrary evaluated = evaluate(out.dict, data);
    for (int c = 0; c < dim; ++c) out.coordinate_names.push_back(variable_name(c, dim));
    if (config.weak.enabled) {
      const int n = out.dict.size();
      const int K = config.weak.K > 0 ? config.weak.K : 2 * n;
      const double span = data.times.dt * (data.samples() - 1);
      const double sl = config.weak.support_len > 0.0 ? config.weak.support_len : span / 4.0;
      const TestFunctionBank bank = build_test_bank(data.times, K, config.weak.p, config.weak.q, sl);
      out.weak_sys = weak_transform_ode(evaluated, data, bank);
      out.system_lib = weak_library(*out.weak_sys);
      out.targets = out.weak_sys->targets;
      out.resolved = json{{"K", K}, {"p", config.weak.p}, {"q", config.weak.q}, {"support_len", sl}};
    } else {
      if (!data.derivatives) data = finite_difference_derivative(data);
      out.system_lib = evaluated;
      for (int c = 0; c < dim; ++c) out.targets.push_back(data.derivatives->col(c));
      out.resolved = json{{"derivative", "central_difference_order2"}};
    }
  }
  if (config.normalize) out.system_lib = normalize_columns(out.system_lib);
  PrunedLibrary pruned = drop_dependent_columns(out.system_lib, config.rank_tol);
  if (!pruned.dropped_labels.empty()) {
    std::string joined;
    for (const std::string& l : pruned.dropped_labels) joined += (joined.empty() ? "" : ";") + l;
    log_info("dropped numerically dependent columns: " + joined);
    out.system_lib = std::move(pruned.lib);
  }
  out.resolved["dropped_columns"] = pruned.dropped_labels;
  out.resolved["rank_tol"] = config.rank_tol;
  out.resolved["normalize"] = config.normalize;
  out.resolved["eta"] = eta;
  out.resolved["seed"] = seed;
  return out;
}

// ---------------------------------------------------------------------------
// Output helpers
// ---------------------------------------------------------------------------

class OutputTracker {
 public:
  explicit OutputTracker(std::filesystem::path dir) : dir_(std::move(dir)) {
    std::filesystem::create_directories(dir_);
  }

  std::filesystem::path path(const std::string& name) { return dir_ / name; }

  void record(const std::string& name) { written_.push_back(name); }

  const std::vector<std::string>& written() const { return written_; }

  void remove_all() {
    for (const std::string& name : written_) {
      std::error_code ec;
      std::filesystem::remove(dir_ / name, ec);
    }
    written_.clear();
  }

 private:
  std::filesystem::path dir_;
  std::vector<std::string> written_;
};

std::string stage_error(const std::string& stage, const std::exception& e) {
  return "stage '" + stage + "' failed: " + e.what();
}

void write_manifest(OutputTracker& tracker, RunReport& report, const ExperimentConfig& config,
                    const std::string& command, const json& resolved, double wall_seconds) {
  json manifest;
  manifest["command"] = command;
  manifest["version"] = kVersion;
  manifest["config"] = json::parse(config_to_json(config));
  manifest["resolved"] = resolved;
  manifest["wall_time_seconds"] = wall_seconds;
  manifest["outputs"] = tracker.written();
  report.manifest_json = manifest.dump(2);
  std::ofstream f(tracker.path("manifest.json"));
  f << report.manifest_json << "\n";
  for (const std::string& name : tracker.written()) report.outputs.push_back(tracker.path(name));
}

void parallel_for(int count, int threads, const std::function<void(int)>& fn) {
  if (threads <= 0) threads = static_cast<int>(std::thread::hardware_concurrency());
  threads = std::max(1, std::min(threads, count));
  if (threads == 1) {
    for (int i = 0; i < count; ++i) fn(i);
    return;
  }
  std::atomic<int> next{0};
  std::vector<std::thread> pool;
  pool.reserve(threads);
  for (int t = 0; t < threads; ++t) {
    pool.emplace_back([&] {
      while (true) {
        const int i = next.fetch_add(1);
        if (i >= count) break;
        fn(i);
      }
    });
  }
  for (std::thread& th : pool) th.join();
}

std::vector<int> labels_to_indices(const std::vector<std::string>& labels,
                                   const EvaluatedLibrary& lib) {
  std::vector<int> idx;
  for (const std::string& label : labels) {
    const int i = lib.index_of(label);
    if (i < 0) throw std::invalid_argument("label '" + label + "' is not in the library");
    idx.push_back(i);
  }
  std::sort(idx.begin(), idx.end());
  return idx;
}

ScoreAggregate parse_aggregate(const std::string& name) {
  return name == "sum" ? ScoreAggregate::sum : ScoreAggregate::sum_of_squares;
}

}  // namespace

// ---------------------------------------------------------------------------
// run_identify
// ---------------------------------------------------------------------------

RunReport run_identify(const ExperimentConfig& config, const std::filesystem::path& out_dir) {
  const auto start = std::chrono::steady_clock::now();
  RunReport report;
  report.out_dir = out_dir;
  OutputTracker tracker(out_dir);

  CleanData clean;
  try {
    clean = load_clean(config);
  } catch (const std::exception& e) {
    throw std::runtime_error(stage_error("load_data", e));
  }

  AssembledProblem problem;
  try {
    problem = assemble(config, clean, config.data.eta, config.data.seed);
  } catch (const std::exception& e) {
    throw std::runtime_error(stage_error("assemble", e));
  }
  report.coordinate_names = problem.coordinate_names;

  const RegressorConfig& reg = config.regressor;
  std::vector<int> target_idx;
  if (reg.targets == "coordinate") {
    if (reg.coordinate < 1 || reg.coordinate > static_cast<int>(problem.targets.size())) {
      throw std::runtime_error(stage_error("regress",
          std::invalid_argument("regressor.coordinate out of range")));
    }
    target_idx = {reg.coordinate - 1};
  } else {
    target_idx.resize(problem.targets.size());
    std::iota(target_idx.begin(), target_idx.end(), 0);
  }
  std::vector<Vector> targets;
  std::vector<std::string> target_names;
  for (int c : target_idx) {
    targets.push_back(problem.targets[c]);
    target_names.push_back(problem.coordinate_names[c]);
  }
  const ScoreAggregate agg = parse_aggregate(reg.aggregate);
  const int n = problem.system_lib.cols();

  SparseModel model;
  model.library_labels = problem.system_lib.labels;
  std::vector<StlsTrace> stls_traces;
  try {
    if (reg.name == "gbsr" || reg.name == "esr" || reg.name == "gfsr") {
      ScoreTrace trace;
      if (reg.name == "gbsr") {
        trace = gbsr(problem.system_lib, targets, agg);
      } else if (reg.name == "esr") {
        const int max_remove = reg.max_remove > 0 ? reg.max_remove : n;
        trace = esr(problem.system_lib, targets, max_remove, agg);
      } else {
        trace = gfsr(problem.system_lib, targets, agg);
      }
      trace.coordinate_names = target_names;
      report.traces.push_back(trace);

      std::vector<int> keep(n);
      std::iota(keep.begin(), keep.end(), 0);
      std::string selection = "all_terms";
      if (reg.policy == "max_ratio" || reg.policy == "threshold") {
        const SparsityPolicy policy = reg.policy == "max_ratio"
                                          ? SparsityPolicy::max_ratio()
                                          : SparsityPolicy::threshold(reg.epsilon);
        const int level = select_sparsity(trace, policy);
        if (level > 0) {
          const TraceLevel& tl = trace.levels[static_cast<std::size_t>(level) - 1];
          std::vector<char> removed(n, 0);
          for (int i : tl.removed) removed[i] = 1;
          keep.clear();
          for (int i = 0; i < n; ++i) {
            if (!removed[i]) keep.push_back(i);
          }
        }
        selection = reg.policy + " -> level " + std::to_string(level);
      } else if (reg.policy == "fixed_terms") {
        if (reg.kept_terms < 0 || reg.kept_terms > n) {
          throw std::invalid_argument("regressor.kept_terms out of range");
        }
        const int level = n - reg.kept_terms;
        keep.clear();
        if (level > 0) {
          const TraceLevel& tl = trace.levels[static_cast<std::size_t>(level) - 1];
          std::vector<char> removed(n, 0);
          for (int i : tl.removed) removed[i] = 1;
          for (int i = 0; i < n; ++i) {
            if (!removed[i]) keep.push_back(i);
          }
        } else {
          keep.resize(n);
          std::iota(keep.begin(), keep.end(), 0);
        }
        selection = "fixed_terms -> kept " + std::to_string(reg.kept_terms);
      }
      for (std::size_t t = 0; t < targets.size(); ++t) {
        SparseModel refitted = refit(problem.system_lib, keep, targets[t]);
        refitted.coordinates[0].name = target_names[t];
        model.coordinates.push_back(refitted.coordinates[0]);
      }
      model.provenance.regressor = reg.name;
      model.provenance.set("policy", reg.policy);
      model.provenance.set("selection", selection);
      model.provenance.set("aggregate", reg.aggregate);
    } else if (reg.name == "stls") {
      for (std::size_t t = 0; t < targets.size(); ++t) {
        StlsResult r = stls(problem.system_lib, targets[t], reg.lambda, reg.max_iter);
        r.model.coordinates[0].name = target_names[t];
        model.coordinates.push_back(r.model.coordinates[0]);
        stls_traces.push_back(std::move(r.trace));
      }
      model.provenance.regressor = "stls";
      model.provenance.set("lambda", reg.lambda);
      model.provenance.set("max_iter", static_cast<double>(reg.max_iter));
    } else if (reg.name == "ssr_cv") {
      for (std::size_t t = 0; t < targets.size(); ++t) {
        const SsrPath path = ssr_path(problem.system_lib, targets[t]);
        const std::vector<ScoreValue> deltas =
            cross_validation_scores(problem.system_lib, targets[t], reg.cv_folds);
        ScoreTrace trace;
        trace.regressor = "ssr_cv";
        trace.kind = ScoreKind::cross_validation;
        trace.aggregate = agg;
        trace.coordinate_names = {target_names[t]};
        std::vector<int> removed;
        for (std::size_t i = 0; i < deltas.size(); ++i) {
          TraceLevel tl;
          tl.level = static_cast<int>(i);
          if (i > 0) {
            removed.push_back(path.removal_order[i - 1]);
            std::sort(removed.begin(), removed.end());
          }
          tl.removed = removed;
          tl.score = deltas[i].value;
          tl.per_coordinate = {deltas[i].value};
          trace.levels.push_back(std::move(tl));
        }
        for (std::size_t j = 1; j < trace.levels.size(); ++j) {
          const double prev = trace.levels[j - 1].score;
          if (prev > 0.0) trace.levels[j].ratio = trace.levels[j].score / prev;
        }
        report.traces.push_back(std::move(trace));

        // Model from the last SSR iterate (1 surviving term) is rarely what a
        // user wants; report the plain full refit alongside the CV trace.
        std::vector<int> all_cols(n);
        std::iota(all_cols.begin(), all_cols.end(), 0);
        SparseModel refitted = refit(problem.system_lib, all_cols, targets[t]);
        refitted.coordinates[0].name = target_names[t];
        model.coordinates.push_back(refitted.coordinates[0]);
      }
      model.provenance.regressor = "ssr_cv";
      model.provenance.set("cv_folds", static_cast<double>(reg.cv_folds));
    } else {  // omp
      for (std::size_t t = 0; t < targets.size(); ++t) {
        const int max_terms = reg.omp_max_terms > 0 ? reg.omp_max_terms : n;
        SparseModel m = omp(problem.system_lib, targets[t], reg.omp_delta, max_terms);
        m.coordinates[0].name = target_names[t];
        model.coordinates.push_back(m.coordinates[0]);
      }
      model.provenance.regressor = "omp";
      model.provenance.set("delta", reg.omp_delta);
    }
  } catch (const std::exception& e) {
    throw std::runtime_error(stage_error("regress", e));
  }
  if (problem.resolved.contains("dropped_columns") &&
      !problem.resolved["dropped_columns"].empty()) {
    std::string joined;
    for (const auto& l : problem.resolved["dropped_columns"]) {
      joined += (joined.empty() ? "" : ";") + l.get<std::string>();
    }
    model.provenance.set("dropped_columns", joined);
  }
  report.model = model;

  try {
    // Score traces: one CSV per coordinate plus the aggregate for
    // all-coordinate searches.
    for (const ScoreTrace& trace : report.traces) {
      for (std::size_t t = 0; t < trace.coordinate_names.size(); ++t) {
        const std::string name = "trace_" + trace.coordinate_names[t] + ".csv";
        io::write_score_trace_csv(tracker.path(name), trace, problem.system_lib.labels,
                                  static_cast<int>(t), trace.coordinate_names[t]);
        tracker.record(name);
      }
      if (trace.coordinate_names.size() > 1) {
        io::write_score_trace_csv(tracker.path("trace_all.csv"), trace, problem.system_lib.labels, -1,
                                  "all");
        tracker.record("trace_all.csv");
      }
    }
    for (std::size_t t = 0; t < stls_traces.size(); ++t) {
      const std::string name = "trace_" + target_names[t] + ".csv";
      io::write_stls_trace_csv(tracker.path(name), stls_traces[t], problem.system_lib.labels);
      tracker.record(name);
    }

    std::ofstream mf(tracker.path("model.json"));
    mf << io::sparse_model_to_json(model) << "\n";
    tracker.record("model.json");

    std::ofstream df(tracker.path("dictionary.json"));
    df << io::dictionary_to_json(problem.dict) << "\n";
    tracker.record("dictionary.json");

    if (config.write_weak_system && problem.weak_sys) {
      io::write_weak_system_csv(tracker.path("weak_system.csv"), *problem.weak_sys);
      tracker.record("weak_system.csv");
      std::ofstream bf(tracker.path("test_bank.json"));
      bf << io::bank_summary_to_json(problem.weak_sys->time_bank) << "\n";
      tracker.record("test_bank.json");
    }
    if (config.write_dataset && !problem.is_pde) {
      io::write_trajectory_csv(tracker.path("dataset.csv"), add_noise(clean.trajectory, config.data.eta, config.data.seed));
      tracker.record("dataset.csv");
    }
  } catch (const std::exception& e) {
    tracker.remove_all();
    throw std::runtime_error(stage_error("write", e));
  }

  const double wall = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  write_manifest(tracker, report, config, "identify", problem.resolved, wall);
  return report;
}

// ---------------------------------------------------------------------------
// run_simulate
// ---------------------------------------------------------------------------

RunReport run_simulate(const ExperimentConfig& config, const std::filesystem::path& out_dir) {
  const auto start = std::chrono::steady_clock::now();
  RunReport report;
  report.out_dir = out_dir;
  OutputTracker tracker(out_dir);

  CleanData clean;
  try {
    clean = load_clean(config);
  } catch (const std::exception& e) {
    throw std::runtime_error(stage_error("load_data", e));
  }

  json resolved;
  try {
    if (clean.is_pde) {
      GridDataset noisy = add_noise(clean.grid, config.data.eta, config.data.seed);
      io::write_grid_csv(tracker.path("dataset.csv"), tracker.path("dataset_meta.json"), noisy);
      tracker.record("dataset.csv");
      tracker.record("dataset_meta.json");
      resolved["nx"] = noisy.nx();
      resolved["nt"] = noisy.nt();
    } else {
      TrajectoryDataset noisy = add_noise(clean.trajectory, config.data.eta, config.data.seed);
      io::write_trajectory_csv(tracker.path("dataset.csv"), noisy);
      tracker.record("dataset.csv");
      resolved["samples"] = noisy.samples();
    }
    resolved["eta"] = config.data.eta;
    resolved["seed"] = config.data.seed;
  } catch (const std::exception& e) {
    tracker.remove_all();
    throw std::runtime_error(stage_error("write", e));
  }

  const double wall = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  write_manifest(tracker, report, config, "simulate", resolved, wall);
  return report;
}

// ---------------------------------------------------------------------------
// run_noise_sweep
// ---------------------------------------------------------------------------

RunReport run_noise_sweep(const ExperimentConfig& config, const std::filesystem::path& out_dir) {
  const auto start = std::chrono::steady_clock::now();
  if (!config.sweep) throw std::runtime_error("stage 'config' failed: sweep section missing");
  const SweepConfig& sw = *config.sweep;

  RunReport report;
  report.out_dir = out_dir;
  OutputTracker tracker(out_dir);

  CleanData clean;
  try {
    clean = load_clean(config);
  } catch (const std::exception& e) {
    throw std::runtime_error(stage_error("load_data", e));
  }

  const std::string method = sw.search + "_k" + std::to_string(sw.kept);
  json resolved;
  try {
    for (double eta : sw.etas) {
      std::vector<int> success(sw.replicates, 0);
      std::vector<std::string> failures(sw.replicates);
      parallel_for(sw.replicates, config.threads, [&](int r) {
        try {
          const AssembledProblem problem =
              assemble(config, clean, eta, sw.base_seed + static_cast<std::uint64_t>(r));
          std::vector<Vector> targets;
          if (sw.targets == "coordinate") {
            targets = {problem.targets.at(static_cast<std::size_t>(sw.coordinate - 1))};
          } else {
            targets = problem.targets;
          }
          const int n = problem.system_lib.cols();
          const std::vector<int> truth = labels_to_indices(sw.true_support, problem.system_lib);
          std::vector<int> kept;
          if (sw.search == "exhaustive") {
            const SubsetScore best = best_removed_of_size(problem.system_lib, targets, n - sw.kept);
            std::vector<char> removed(n, 0);
            for (int i : best.removed) removed[i] = 1;
            for (int i = 0; i < n; ++i) {
              if (!removed[i]) kept.push_back(i);
            }
          } else {
            const ScoreTrace trace = gbsr(problem.system_lib, targets);
            const TraceLevel& tl = trace.levels.at(static_cast<std::size_t>(n - sw.kept) - 1);
            std::vector<char> removed(n, 0);
            for (int i : tl.removed) removed[i] = 1;
            for (int i = 0; i < n; ++i) {
              if (!removed[i]) kept.push_back(i);
            }
          }
          success[r] = kept == truth ? 1 : 0;
        } catch (const std::exception& e) {
          failures[r] = e.what();
          success[r] = 0;
        }
      });
      SweepRow row;
      row.eta = eta;
      row.method = method;
      row.replicates = sw.replicates;
      row.successes = std::accumulate(success.begin(), success.end(), 0);
      row.success_rate = static_cast<double>(row.successes) / sw.replicates;
      report.sweep_rows.push_back(row);
      int failed = 0;
      for (const std::string& f : failures) {
        if (!f.empty()) ++failed;
      }
      if (failed > 0) {
        log_info("sweep eta=" + std::to_string(eta) + ": " + std::to_string(failed) +
                 " replicate(s) errored and count as non-success");
      }
      log_info("sweep eta=" + std::to_string(eta) + " success rate " +
               std::to_string(row.success_rate));
    }

    std::ofstream f(tracker.path("sweep.csv"));
    f << "eta,method,replicates,successes,success_rate\n";
    for (const SweepRow& row : report.sweep_rows) {
      f << io::format_double(row.eta) << "," << row.method << "," << row.replicates << ","
        << row.successes << "," << io::format_double(row.success_rate) << "\n";
    }
    tracker.record("sweep.csv");
    resolved["method"] = method;
  } catch (const std::exception& e) {
    tracker.remove_all();
    throw std::runtime_error(stage_error("sweep", e));
  }

  const double wall = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  write_manifest(tracker, report, config, "sweep", resolved, wall);
  return report;
}

// ---------------------------------------------------------------------------
// run_screening_study
// ---------------------------------------------------------------------------

RunReport run_screening_study(const ExperimentConfig& config, const std::filesystem::path& out_dir) {
  const auto start = std::chrono::steady_clock::now();
  if (!config.screen) throw std::runtime_error("stage 'config' failed: screen section missing");
  const ScreenConfig& sc = *config.screen;

  RunReport report;
  report.out_dir = out_dir;
  OutputTracker tracker(out_dir);

  CleanData clean;
  try {
    clean = load_clean(config);
  } catch (const std::exception& e) {
    throw std::runtime_error(stage_error("load_data", e));
  }

  json resolved;
  try {
    for (double fraction : sc.keep_fractions) {
      std::vector<double> errors(sc.replicates, std::numeric_limits<double>::quiet_NaN());
      parallel_for(sc.replicates, config.threads, [&](int r) {
        try {
          const AssembledProblem problem =
              assemble(config, clean, sc.eta, sc.base_seed + static_cast<std::uint64_t>(r));
          const SparseModel model =
              screen_then_stls(problem.system_lib, problem.targets, fraction, sc.lambda);
          double sq = 0.0;
          for (std::size_t c = 0; c < problem.targets.size(); ++c) {
            const std::string& coord = problem.coordinate_names[c];
            Vector truth = Vector::Zero(problem.system_lib.cols());
            const auto it = sc.true_model.find(coord);
            if (it != sc.true_model.end()) {
              for (const auto& [label, value] : it->second) {
                const int i = problem.system_lib.index_of(label);
                if (i < 0) throw std::invalid_argument("true_model label '" + label + "' not in library");
                truth[i] = value;
              }
            }
            sq += (model.coordinates[c].coefficients.values - truth).squaredNorm();
          }
          errors[r] = std::sqrt(sq);
        } catch (const std::exception& e) {
          log_info("screening replicate " + std::to_string(r) + " failed: " + e.what());
        }
      });
      double mean = 0.0;
      int ok = 0;
      for (double e : errors) {
        if (std::isfinite(e)) {
          mean += e;
          ++ok;
        }
      }
      if (ok == 0) throw std::runtime_error("screening: every replicate failed");
      mean /= ok;
      double var = 0.0;
      for (double e : errors) {
        if (std::isfinite(e)) var += (e - mean) * (e - mean);
      }
      const double stddev = ok > 1 ? std::sqrt(var / (ok - 1)) : 0.0;
      ScreenRow row;
      row.keep_fraction = fraction;
      row.eta = sc.eta;
      row.replicates = ok;
      row.mean_error = mean;
      row.std_error = stddev;
      report.screen_rows.push_back(row);
      log_info("screening keep_fraction=" + std::to_string(fraction) + " mean error " +
               std::to_string(mean));
    }

    std::ofstream f(tracker.path("screen.csv"));
    f << "keep_fraction,eta,replicates,mean_error,std_error\n";
    for (const ScreenRow& row : report.screen_rows) {
      f << io::format_double(row.keep_fraction) << "," << io::format_double(row.eta) << ","
        << row.replicates << "," << io::format_double(row.mean_error) << ","
        << io::format_double(row.std_error) << "\n";
    }
    tracker.record("screen.csv");
    resolved["lambda"] = sc.lambda;
  } catch (const std::exception& e) {
    tracker.remove_all();
    throw std::runtime_error(stage_error("screen", e));
  }

  const double wall = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  write_manifest(tracker, report, config, "screen", resolved, wall);
  return report;
}

}  // namespace dictsel
