#include "dictsel/io.hpp"

#include <charconv>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <limits>
#include <sstream>
#include <stdexcept>

#include <json.hpp>

namespace dictsel::io {

using nlohmann::json;

namespace {

std::vector<std::string> split(const std::string& line, char sep) {
  std::vector<std::string> out;
  std::string cur;
  for (char ch : line) {
    if (ch == sep) {
      out.push_back(cur);
      cur.clear();
    } else {
      cur += ch;
    }
  }
  out.push_back(cur);
  return out;
}

std::ofstream open_out(const std::filesystem::path& path) {
  std::ofstream f(path);
  if (!f) throw std::runtime_error("cannot open for writing: " + path.string());
  return f;
}

std::ifstream open_in(const std::filesystem::path& path) {
  std::ifstream f(path);
  if (!f) throw std::runtime_error("cannot open for reading: " + path.string());
  return f;
}

std::string joined_labels(const std::vector<int>& idx, const std::vector<std::string>& labels) {
  std::string s;
  for (int i : idx) {
    if (!s.empty()) s += ';';
    s += labels[i];
  }
  return s;
}

}  // namespace

std::string format_double(double v) {
  // Shortest representation that round-trips exactly.
  char buf[40];
  const auto res = std::to_chars(buf, buf + sizeof(buf), v);
  return std::string(buf, res.ptr);
}

void write_trajectory_csv(const std::filesystem::path& path, const TrajectoryDataset& data) {
  std::ofstream f = open_out(path);
  f << "t";
  for (int c = 0; c < data.dim(); ++c) f << ",x" << c + 1;
  if (data.derivatives) {
    for (int c = 0; c < data.dim(); ++c) f << ",dx" << c + 1;
  }
  f << "\n";
  for (int j = 0; j < data.samples(); ++j) {
    f << format_double(data.times.time_at(j));
    for (int c = 0; c < data.dim(); ++c) f << "," << format_double(data.states(j, c));
    if (data.derivatives) {
      for (int c = 0; c < data.dim(); ++c) f << "," << format_double((*data.derivatives)(j, c));
    }
    f << "\n";
  }
}

TrajectoryDataset read_trajectory_csv(const std::filesystem::path& path) {
  std::ifstream f = open_in(path);
  std::string line;
  if (!std::getline(f, line)) throw std::runtime_error("empty trajectory CSV: " + path.string());
  const std::vector<std::string> header = split(line, ',');
  if (header.empty() || header[0] != "t") {
    throw std::runtime_error("trajectory CSV must start with a 't' column: " + path.string());
  }
  int dim = 0;
  bool has_deriv = false;
  for (std::size_t i = 1; i < header.size(); ++i) {
    if (header[i].rfind("dx", 0) == 0) {
      has_deriv = true;
    } else if (header[i].rfind('x', 0) == 0) {
      ++dim;
    } else {
      throw std::runtime_error("unexpected trajectory CSV column: " + header[i]);
    }
  }
  if (dim == 0) throw std::runtime_error("trajectory CSV has no state columns");

  std::vector<double> times;
  std::vector<double> flat_states, flat_derivs;
  while (std::getline(f, line)) {
    if (line.empty()) continue;
    const std::vector<std::string> cells = split(line, ',');
    const std::size_t expected = 1 + dim + (has_deriv ? dim : 0);
    if (cells.size() != expected) throw std::runtime_error("ragged trajectory CSV row");
    times.push_back(std::stod(cells[0]));
    for (int c = 0; c < dim; ++c) flat_states.push_back(std::stod(cells[1 + c]));
    if (has_deriv) {
      for (int c = 0; c < dim; ++c) flat_derivs.push_back(std::stod(cells[1 + dim + c]));
    }
  }
  const int m = static_cast<int>(times.size());
  if (m < 2) throw std::runtime_error("trajectory CSV needs at least two samples");
  const double dt = times[1] - times[0];
  for (int j = 1; j < m; ++j) {
    if (std::abs(times[j] - times[0] - j * dt) > 1e-9 * std::max(1.0, std::abs(times[j]))) {
      throw std::runtime_error("trajectory CSV time grid is not uniform");
    }
  }
  TrajectoryDataset data;
  data.times = TimeGrid{times[0], dt, m};
  data.states.resize(m, dim);
  for (int j = 0; j < m; ++j) {
    for (int c = 0; c < dim; ++c) data.states(j, c) = flat_states[static_cast<std::size_t>(j) * dim + c];
  }
  if (!data.states.allFinite()) throw std::runtime_error("trajectory CSV contains non-finite states");
  if (has_deriv) {
    Matrix d(m, dim);
    for (int j = 0; j < m; ++j) {
      for (int c = 0; c < dim; ++c) d(j, c) = flat_derivs[static_cast<std::size_t>(j) * dim + c];
    }
    data.derivatives = std::move(d);
  }
  return data;
}

void write_grid_csv(const std::filesystem::path& csv_path, const std::filesystem::path& meta_path,
                    const GridDataset& data) {
  std::ofstream f = open_out(csv_path);
  f << "x,t,u\n";
  for (int i = 0; i < data.nx(); ++i) {
    for (int s = 0; s < data.nt(); ++s) {
      f << format_double(data.x_grid.time_at(i)) << "," << format_double(data.t_grid.time_at(s)) << ","
        << format_double(data.values(i, s)) << "\n";
    }
  }
  json meta{{"x0", data.x_grid.t0}, {"dx", data.x_grid.dt}, {"nx", data.x_grid.samples},
            {"t0", data.t_grid.t0}, {"dt", data.t_grid.dt}, {"nt", data.t_grid.samples}};
  open_out(meta_path) << meta.dump(2) << "\n";
}

GridDataset read_grid_csv(const std::filesystem::path& csv_path,
                          const std::filesystem::path& meta_path) {
  json meta = json::parse(open_in(meta_path));
  GridDataset data;
  data.x_grid = TimeGrid{meta.at("x0").get<double>(), meta.at("dx").get<double>(), meta.at("nx").get<int>()};
  data.t_grid = TimeGrid{meta.at("t0").get<double>(), meta.at("dt").get<double>(), meta.at("nt").get<int>()};
  data.values.resize(data.x_grid.samples, data.t_grid.samples);

  std::ifstream f = open_in(csv_path);
  std::string line;
  std::getline(f, line);
  if (line != "x,t,u") throw std::runtime_error("grid CSV must have header x,t,u");
  for (int i = 0; i < data.nx(); ++i) {
    for (int s = 0; s < data.nt(); ++s) {
      if (!std::getline(f, line)) throw std::runtime_error("grid CSV truncated");
      const std::vector<std::string> cells = split(line, ',');
      if (cells.size() != 3) throw std::runtime_error("ragged grid CSV row");
      data.values(i, s) = std::stod(cells[2]);
    }
  }
  if (!data.values.allFinite()) throw std::runtime_error("grid CSV contains non-finite values");
  return data;
}

std::string dictionary_to_json(const Dictionary& dict) {
  json arr = json::array();
  for (const Term& t : dict.terms) {
    json e;
    switch (t.kind) {
      case Term::Kind::monomial: e["kind"] = "monomial"; break;
      case Term::Kind::sine: e["kind"] = "sine"; break;
      case Term::Kind::cosine: e["kind"] = "cosine"; break;
      case Term::Kind::pde_trial: e["kind"] = "pde_trial"; break;
    }
    if (t.kind == Term::Kind::monomial || t.kind == Term::Kind::pde_trial) e["exponents"] = t.exponents;
    if (t.kind == Term::Kind::sine || t.kind == Term::Kind::cosine) {
      e["frequency"] = t.frequency;
      e["variable"] = t.variable;
    }
    if (t.kind == Term::Kind::pde_trial) e["derivative_order"] = t.derivative_order;
    e["label"] = t.label;
    arr.push_back(std::move(e));
  }
  json root{{"state_dim", dict.state_dim}, {"terms", std::move(arr)}};
  return root.dump(2);
}

Dictionary dictionary_from_json(const std::string& text) {
  const json root = json::parse(text);
  Dictionary dict;
  dict.state_dim = root.at("state_dim").get<int>();
  for (const json& e : root.at("terms")) {
    Term t;
    const std::string kind = e.at("kind").get<std::string>();
    if (kind == "monomial") {
      t.kind = Term::Kind::monomial;
    } else if (kind == "sine") {
      t.kind = Term::Kind::sine;
    } else if (kind == "cosine") {
      t.kind = Term::Kind::cosine;
    } else if (kind == "pde_trial") {
      t.kind = Term::Kind::pde_trial;
    } else {
      throw std::runtime_error("dictionary JSON: unknown term kind '" + kind + "'");
    }
    if (e.contains("exponents")) t.exponents = e.at("exponents").get<std::vector<int>>();
    if (t.kind == Term::Kind::sine || t.kind == Term::Kind::cosine) {
      t.frequency = e.at("frequency").get<int>();
      t.variable = e.at("variable").get<int>();
      t.exponents.assign(dict.state_dim, 0);
    }
    if (e.contains("derivative_order")) t.derivative_order = e.at("derivative_order").get<int>();
    t.label = term_label(t, dict.state_dim);
    const std::string given = e.value("label", t.label);
    if (given != t.label) {
      throw std::runtime_error("dictionary JSON: label '" + given + "' does not match canonical '" +
                               t.label + "'");
    }
    dict.terms.push_back(std::move(t));
  }
  return dict;
}

void write_score_trace_csv(const std::filesystem::path& path, const ScoreTrace& trace,
                           const std::vector<std::string>& labels, int coordinate_index,
                           const std::string& coordinate_name) {
  std::ofstream f = open_out(path);
  f << "level,removed_labels,score,relative_ratio,kind,coordinate\n";
  double prev = std::numeric_limits<double>::quiet_NaN();
  for (const TraceLevel& tl : trace.levels) {
    const double score =
        coordinate_index < 0 ? tl.score : tl.per_coordinate.at(static_cast<std::size_t>(coordinate_index));
    f << tl.level << "," << joined_labels(tl.removed, labels) << "," << format_double(score) << ",";
    if (std::isfinite(prev) && prev > 0.0) f << format_double(score / prev);
    f << "," << to_string(trace.kind) << "," << coordinate_name << "\n";
    prev = score;
  }
}

void write_stls_trace_csv(const std::filesystem::path& path, const StlsTrace& trace,
                          const std::vector<std::string>& labels) {
  std::ofstream f = open_out(path);
  f << "iteration,support_labels,nnz,objective\n";
  for (std::size_t i = 0; i < trace.iterations.size(); ++i) {
    const StlsIteration& it = trace.iterations[i];
    f << i << "," << joined_labels(it.support, labels) << "," << it.support.size() << ","
      << format_double(it.objective) << "\n";
  }
}

std::string sparse_model_to_json(const SparseModel& model) {
  json coords = json::array();
  for (const SparseModel::Coordinate& c : model.coordinates) {
    json terms = json::array();
    for (int i : c.coefficients.support) {
      terms.push_back(json{{"label", model.library_labels[i]}, {"coefficient", c.coefficients.values[i]}});
    }
    coords.push_back(json{{"coordinate", c.name},
                          {"terms", std::move(terms)},
                          {"residual", c.residual_norm}});
  }
  json hp = json::object();
  for (const auto& [k, v] : model.provenance.hyperparameters) hp[k] = v;
  json root{{"coordinates", std::move(coords)},
            {"regressor", model.provenance.regressor},
            {"hyperparameters", std::move(hp)}};
  return root.dump(2);
}

std::string bank_summary_to_json(const BankSummary& bank) {
  json centers = json::array();
  for (const auto& [a, b] : bank.supports) centers.push_back(json{{"a", a}, {"b", b}});
  json root{{"K", bank.K}, {"p", bank.p}, {"q", bank.q},
            {"support_len", bank.support_len}, {"supports", std::move(centers)}};
  return root.dump(2);
}

std::string noise_meta_to_json(const NoiseMeta& meta) {
  json root{{"eta", meta.eta}, {"seed", meta.seed}, {"base_rms", meta.base_rms}};
  return root.dump(2);
}

NoiseMeta noise_meta_from_json(const std::string& text) {
  const json root = json::parse(text);
  NoiseMeta meta;
  meta.eta = root.at("eta").get<double>();
  meta.seed = root.at("seed").get<std::uint64_t>();
  meta.base_rms = root.at("base_rms").get<std::vector<double>>();
  return meta;
}

void write_weak_system_csv(const std::filesystem::path& path, const WeakSystem& system) {
  std::ofstream f = open_out(path);
  f << "row";
  for (const std::string& label : system.labels) f << "," << label;
  for (std::size_t c = 0; c < system.targets.size(); ++c) f << ",b_" << c + 1;
  f << "\n";
  for (int r = 0; r < system.rows(); ++r) {
    f << r;
    for (int j = 0; j < system.cols(); ++j) f << "," << format_double(system.G(r, j));
    for (const Vector& b : system.targets) f << "," << format_double(b[r]);
    f << "\n";
  }
}

}  // namespace dictsel::io
