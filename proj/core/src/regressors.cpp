#include "dictsel/regressors.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <set>
#include <sstream>
#include <stdexcept>

namespace dictsel {

namespace {

std::vector<int> sorted_complement(const std::vector<int>& subset, int n) {
  std::vector<char> in(n, 0);
  for (int i : subset) in[i] = 1;
  std::vector<int> out;
  out.reserve(n - static_cast<int>(subset.size()));
  for (int i = 0; i < n; ++i) {
    if (!in[i]) out.push_back(i);
  }
  return out;
}

double residual_norm_for(const EvaluatedLibrary& lib, const Vector& coeff_system_scale,
                         const Vector& y) {
  return (lib.matrix * coeff_system_scale - y).norm();
}

SparseModel single_coordinate_model(const EvaluatedLibrary& lib, const Vector& coeff_system_scale,
                                    const Vector& y, std::string regressor) {
  SparseModel model;
  model.library_labels = lib.labels;
  model.provenance.regressor = std::move(regressor);
  SparseModel::Coordinate c;
  c.name = "y";
  c.coefficients = CoefficientVector::from_values(coefficients_to_raw_scale(lib, coeff_system_scale));
  c.residual_norm = residual_norm_for(lib, coeff_system_scale, y);
  model.coordinates.push_back(std::move(c));
  return model;
}

double stls_objective(const EvaluatedLibrary& lib, const Vector& xi, const Vector& y, double lambda) {
  const double nnz = static_cast<double>(CoefficientVector::from_values(xi).support.size());
  return (lib.matrix * xi - y).squaredNorm() + lambda * lambda * nnz;
}

void append_ratio(ScoreTrace& trace) {
  for (std::size_t j = 1; j < trace.levels.size(); ++j) {
    const double prev = trace.levels[j - 1].score;
    if (prev > 0.0) trace.levels[j].ratio = trace.levels[j].score / prev;
  }
}

}  // namespace

void Provenance::set(const std::string& key, const std::string& value) {
  hyperparameters.emplace_back(key, value);
}

void Provenance::set(const std::string& key, double value) {
  std::ostringstream os;
  os.precision(17);
  os << value;
  hyperparameters.emplace_back(key, os.str());
}

double binomial(int n, int k) {
  if (k < 0 || k > n) return 0.0;
  k = std::min(k, n - k);
  double b = 1.0;
  for (int i = 0; i < k; ++i) b *= static_cast<double>(n - i) / static_cast<double>(i + 1);
  return b;
}

StlsResult stls(const EvaluatedLibrary& lib, const Vector& y, double lambda, int max_iter) {
  if (lambda < 0.0) throw std::invalid_argument("stls: lambda must be >= 0");
  const int n = lib.cols();
  StlsResult out;
  out.trace.iterations.reserve(4);

  Vector xi = least_squares(lib.matrix, y).values;
  out.trace.iterations.push_back(
      {CoefficientVector::from_values(xi).support, xi, stls_objective(lib, xi, y, lambda)});

  std::vector<int> prev_support;
  bool have_prev = false;
  for (int it = 0; it < max_iter; ++it) {
    std::vector<int> s;
    for (int j = 0; j < n; ++j) {
      if (std::abs(xi[j]) >= lambda) s.push_back(j);
    }
    if (s.empty()) {
      xi = Vector::Zero(n);
      out.trace.iterations.push_back({{}, xi, stls_objective(lib, xi, y, lambda)});
      break;
    }
    if (have_prev && s == prev_support) break;
    xi = restricted_least_squares(lib.matrix, s, y).values;
    out.trace.iterations.push_back(
        {CoefficientVector::from_values(xi).support, xi, stls_objective(lib, xi, y, lambda)});
    prev_support = std::move(s);
    have_prev = true;
  }

  out.model = single_coordinate_model(lib, xi, y, "stls");
  out.model.provenance.set("lambda", lambda);
  out.model.provenance.set("max_iter", static_cast<double>(max_iter));
  return out;
}

SsrPath ssr_path(const EvaluatedLibrary& lib, const Vector& y) {
  const int n = lib.cols();
  SsrPath out;
  out.path.reserve(n);
  std::vector<int> kept(n);
  std::iota(kept.begin(), kept.end(), 0);

  Vector xi = least_squares(lib.matrix, y).values;
  out.path.push_back(CoefficientVector::from_values(xi));
  for (int i = 1; i < n; ++i) {
    int drop = -1;
    double best = std::numeric_limits<double>::infinity();
    for (int j : kept) {
      const double a = std::abs(xi[j]);
      if (a < best) {
        best = a;
        drop = j;
      }
    }
    out.removal_order.push_back(drop);
    kept.erase(std::find(kept.begin(), kept.end(), drop));
    xi = restricted_least_squares(lib.matrix, kept, y).values;
    out.path.push_back(CoefficientVector::from_values(xi));
  }
  return out;
}

std::vector<CoefficientVector> ssr(const EvaluatedLibrary& lib, const Vector& y) {
  return ssr_path(lib, y).path;
}

namespace {

/// Depth-first enumeration of kept subsets with an incrementally grown
/// orthonormal basis. Tracks e_t = ||P_D y_t - P_kept y_t||^2 per target via
/// the update e -= s(2*s_hat - s) with s = <q, y_t>, s_hat = <q, P_D y_t>.
class KeptSubsetSearch {
 public:
  KeptSubsetSearch(const ScoreEngine& engine, int kept_size)
      : engine_(engine),
        n_(engine.cols()),
        kept_size_(kept_size),
        basis_(engine.lib().matrix.rows(), std::max(kept_size, 1)) {
    // e at the empty kept set is ||P_D y||^2 exactly.
    std::vector<double> e;
    for (int t = 0; t < engine_.n_targets(); ++t) {
      e.push_back(engine_.projected_target(t).squaredNorm());
    }
    stack_e_.push_back(std::move(e));
  }

  void run() {
    if (kept_size_ == 0) {
      consider_leaf();
      return;
    }
    descend(0);
  }

  const std::vector<int>& best_kept() const { return best_kept_; }
  bool found() const { return found_; }

 private:
  void consider_leaf() {
    std::vector<double> per(engine_.n_targets());
    for (int t = 0; t < engine_.n_targets(); ++t) {
      per[t] = std::sqrt(std::max(0.0, stack_e_.back()[t])) / engine_.target_norm(t);
    }
    const double agg = engine_.aggregate(per);
    bool better = false;
    if (!found_ || agg < best_score_) {
      better = true;
    } else if (agg == best_score_) {
      // Tie: lexicographically smallest removed set wins.
      const std::vector<int> removed = sorted_complement(chosen_, n_);
      better = removed < best_removed_;
    }
    if (better) {
      found_ = true;
      best_score_ = agg;
      best_kept_ = chosen_;
      best_removed_ = sorted_complement(chosen_, n_);
    }
  }

  void descend(int start) {
    const int depth = static_cast<int>(chosen_.size());
    const int needed = kept_size_ - depth;
    for (int j = start; j <= n_ - needed; ++j) {
      push_column(j);
      if (depth + 1 == kept_size_) {
        consider_leaf();
      } else {
        descend(j + 1);
      }
      pop_column();
    }
  }

  void push_column(int j) {
    Vector v = engine_.lib().matrix.col(j);
    const double col_norm = v.norm();
    const int rank = rank_;
    for (int pass = 0; pass < 2; ++pass) {
      for (int i = 0; i < rank; ++i) v -= basis_.col(i).dot(v) * basis_.col(i);
    }
    const double rnorm = v.norm();
    std::vector<double> e = stack_e_.back();
    if (rnorm > kDefaultRankTol * col_norm) {
      basis_.col(rank_) = v / rnorm;
      for (int t = 0; t < engine_.n_targets(); ++t) {
        const double s = basis_.col(rank_).dot(engine_.target(t));
        const double s_hat = basis_.col(rank_).dot(engine_.projected_target(t));
        e[t] -= s * (2.0 * s_hat - s);
      }
      ++rank_;
      pushed_.push_back(true);
    } else {
      pushed_.push_back(false);  // dependent column: span unchanged
    }
    chosen_.push_back(j);
    stack_e_.push_back(std::move(e));
  }

  void pop_column() {
    if (pushed_.back()) --rank_;
    pushed_.pop_back();
    chosen_.pop_back();
    stack_e_.pop_back();
  }

  const ScoreEngine& engine_;
  int n_;
  int kept_size_;
  Matrix basis_;
  int rank_ = 0;
  std::vector<int> chosen_;
  std::vector<bool> pushed_;
  std::vector<std::vector<double>> stack_e_;

  bool found_ = false;
  double best_score_ = 0.0;
  std::vector<int> best_kept_;
  std::vector<int> best_removed_;
};

SubsetScore best_removed_with_engine(const ScoreEngine& engine, int removed_size,
                                     std::uint64_t budget_cap) {
  const int n = engine.cols();
  if (removed_size < 0 || removed_size > n) {
    throw std::invalid_argument("best_removed_of_size: removed_size outside [0, n]");
  }
  const double count = binomial(n, removed_size);
  if (count > static_cast<double>(budget_cap)) {
    throw std::runtime_error("best_removed_of_size: level " + std::to_string(removed_size) +
                             " enumerates " + std::to_string(static_cast<long long>(count)) +
                             " subsets, over the budget cap of " + std::to_string(budget_cap));
  }
  KeptSubsetSearch search(engine, n - removed_size);
  search.run();
  // Rescore the winner through the plain projection formula so reported
  // values match score_subset to full precision.
  return engine.score(sorted_complement(search.best_kept(), n));
}

}  // namespace

SubsetScore best_removed_of_size(const EvaluatedLibrary& lib, const std::vector<Vector>& targets,
                                 int removed_size, ScoreAggregate agg, std::uint64_t budget_cap) {
  ScoreEngine engine(lib, targets, agg);
  return best_removed_with_engine(engine, removed_size, budget_cap);
}

ScoreTrace esr(const EvaluatedLibrary& lib, const std::vector<Vector>& targets, int max_remove,
               ScoreAggregate agg, std::uint64_t budget_cap) {
  const int n = lib.cols();
  if (max_remove < 0 || max_remove > n) {
    throw std::invalid_argument("esr: max_remove outside [0, n]");
  }
  double total = 0.0;
  for (int i = 1; i <= max_remove; ++i) {
    total += binomial(n, i);
    if (total > static_cast<double>(budget_cap)) {
      throw std::runtime_error("esr: level " + std::to_string(i) + " pushes the enumeration to " +
                               std::to_string(static_cast<long long>(total)) +
                               " subsets, over the budget cap of " + std::to_string(budget_cap));
    }
  }

  ScoreEngine engine(lib, targets, agg);
  ScoreTrace trace;
  trace.regressor = "esr";
  trace.kind = ScoreKind::projected;
  trace.aggregate = agg;
  for (int i = 1; i <= max_remove; ++i) {
    SubsetScore best = best_removed_with_engine(engine, i, budget_cap);
    TraceLevel level;
    level.level = i;
    level.removed = best.removed;
    level.score = best.score.value;
    for (const ScoreValue& v : best.per_coordinate) level.per_coordinate.push_back(v.value);
    trace.levels.push_back(std::move(level));
  }
  append_ratio(trace);
  return trace;
}

ScoreTrace gbsr(const EvaluatedLibrary& lib, const std::vector<Vector>& targets, ScoreAggregate agg) {
  const int n = lib.cols();
  ScoreEngine engine(lib, targets, agg);
  ScoreTrace trace;
  trace.regressor = "gbsr";
  trace.kind = ScoreKind::projected;
  trace.aggregate = agg;

  std::vector<int> removed;
  std::vector<int> remaining(n);
  std::iota(remaining.begin(), remaining.end(), 0);
  std::vector<int> candidate;
  for (int level = 1; level <= n; ++level) {
    int best_idx = -1;
    SubsetScore best;
    for (int j : remaining) {
      candidate = removed;
      candidate.push_back(j);
      SubsetScore s = engine.score(candidate);
      if (best_idx < 0 || s.score.value < best.score.value) {
        best = std::move(s);
        best_idx = j;
      }
    }
    removed.push_back(best_idx);
    std::sort(removed.begin(), removed.end());
    remaining.erase(std::find(remaining.begin(), remaining.end(), best_idx));

    TraceLevel tl;
    tl.level = level;
    tl.removed = removed;
    tl.score = best.score.value;
    for (const ScoreValue& v : best.per_coordinate) tl.per_coordinate.push_back(v.value);
    trace.levels.push_back(std::move(tl));
  }
  append_ratio(trace);
  return trace;
}

ScoreTrace gfsr(const EvaluatedLibrary& lib, const std::vector<Vector>& targets, ScoreAggregate agg) {
  const int n = lib.cols();
  ScoreEngine engine(lib, targets, agg);
  ScoreTrace trace;
  trace.regressor = "gfsr";
  trace.kind = ScoreKind::projected;
  trace.aggregate = agg;

  std::vector<int> kept;
  std::vector<int> remaining(n);
  std::iota(remaining.begin(), remaining.end(), 0);
  for (int level = 1; level <= n; ++level) {
    int best_idx = -1;
    SubsetScore best;
    for (int j : remaining) {
      std::vector<int> candidate_kept = kept;
      candidate_kept.push_back(j);
      SubsetScore s = engine.score(sorted_complement(candidate_kept, n));
      if (best_idx < 0 || s.score.value < best.score.value) {
        best = std::move(s);
        best_idx = j;
      }
    }
    kept.push_back(best_idx);
    std::sort(kept.begin(), kept.end());
    remaining.erase(std::find(remaining.begin(), remaining.end(), best_idx));

    TraceLevel tl;
    tl.level = level;
    tl.removed = best.removed;  // complement of the kept set
    tl.score = best.score.value;
    for (const ScoreValue& v : best.per_coordinate) tl.per_coordinate.push_back(v.value);
    trace.levels.push_back(std::move(tl));
  }
  append_ratio(trace);
  return trace;
}

SparseModel omp(const EvaluatedLibrary& lib, const Vector& y, double delta, int max_terms,
                bool verify_score_identity) {
  if (delta <= 0.0) throw std::invalid_argument("omp: delta must be positive");
  const int n = lib.cols();
  for (int i = 0; i < n; ++i) {
    if (std::abs(lib.matrix.col(i).norm() - 1.0) > 1e-8) {
      throw std::invalid_argument("omp: column '" + lib.labels[i] +
                                  "' is not unit-normalized; run normalize_columns first");
    }
  }

  std::vector<int> support;
  Vector residual = y;
  Vector xi = Vector::Zero(n);
  while (static_cast<int>(support.size()) < std::min(max_terms, n)) {
    if (residual.norm() <= delta) break;
    int pick = -1;
    double best = -1.0;
    for (int i = 0; i < n; ++i) {
      if (std::find(support.begin(), support.end(), i) != support.end()) continue;
      const double corr = std::abs(lib.matrix.col(i).dot(residual));
      if (corr > best) {
        best = corr;
        pick = i;
      }
    }
    if (pick < 0) break;

    if (verify_score_identity) {
      // |<d_i, R>| must equal Score(d_i; D_{S+i}, y) * ||y|| * ||(I-P_S) d_i||.
      std::vector<int> grown = support;
      grown.push_back(pick);
      Matrix sub(lib.matrix.rows(), static_cast<Eigen::Index>(grown.size()));
      for (std::size_t k = 0; k < grown.size(); ++k) sub.col(static_cast<Eigen::Index>(k)) = lib.matrix.col(grown[k]);
      EvaluatedLibrary sub_lib;
      sub_lib.matrix = sub;
      sub_lib.labels.assign(grown.size(), "");
      const double score = score_single(static_cast<int>(grown.size()) - 1, sub_lib, y).value;
      Vector di = lib.matrix.col(pick);
      if (!support.empty()) {
        Matrix prior(lib.matrix.rows(), static_cast<Eigen::Index>(support.size()));
        for (std::size_t k = 0; k < support.size(); ++k) prior.col(static_cast<Eigen::Index>(k)) = lib.matrix.col(support[k]);
        di -= project(orthonormal_basis(prior), di);
      }
      const double lhs = score * y.norm() * di.norm();
      if (std::abs(lhs - best) > 1e-8 * std::max(1.0, best)) {
        throw std::runtime_error("omp: projected-score identity violated at iteration " +
                                 std::to_string(support.size()));
      }
    }

    support.push_back(pick);
    xi = restricted_least_squares(lib.matrix, support, y).values;
    residual = y - lib.matrix * xi;
  }

  SparseModel model = single_coordinate_model(lib, xi, y, "omp");
  model.provenance.set("delta", delta);
  model.provenance.set("max_terms", static_cast<double>(max_terms));
  return model;
}

int select_sparsity(const ScoreTrace& trace, const SparsityPolicy& policy) {
  if (policy.kind == SparsityPolicy::Kind::threshold) {
    int level = 0;
    for (const TraceLevel& tl : trace.levels) {
      if (tl.score < policy.epsilon) level = tl.level;
    }
    return level;
  }

  if (trace.levels.size() < 2) {
    throw std::invalid_argument("select_sparsity: max_ratio needs at least two trace levels");
  }
  int jump = -1;
  double best = -1.0;
  for (std::size_t j = 1; j < trace.levels.size(); ++j) {
    const double prev = trace.levels[j - 1].score;
    if (prev <= 0.0) continue;
    const double r = trace.levels[j].score / prev;
    if (r > best) {
      best = r;
      jump = static_cast<int>(j);
    }
  }
  if (jump < 0 || best <= 1.0) {
    throw std::runtime_error(
        "select_sparsity: no score jump found (flat or all-zero trace); use the threshold policy");
  }
  return trace.levels[jump - 1].level;
}

SparseModel refit(const EvaluatedLibrary& lib, const std::vector<int>& keep, const Vector& y) {
  Vector coeff;
  if (keep.empty()) {
    coeff = Vector::Zero(lib.cols());
  } else {
    coeff = restricted_least_squares(lib.matrix, keep, y).values;
  }
  SparseModel model = single_coordinate_model(lib, coeff, y, "refit");
  model.provenance.set("kept_terms", static_cast<double>(keep.size()));
  return model;
}

SparseModel screen_then_stls(const EvaluatedLibrary& lib, const std::vector<Vector>& targets,
                             double keep_fraction, double lambda, int max_iter) {
  const int n = lib.cols();
  if (!(keep_fraction > 0.0 && keep_fraction <= 1.0)) {
    throw std::invalid_argument("screen_then_stls: keep_fraction must lie in (0, 1]");
  }
  if (keep_fraction * n < 1.0) {
    throw std::invalid_argument("screen_then_stls: keep_fraction leaves no columns");
  }
  const int n_drop = static_cast<int>(std::floor((1.0 - keep_fraction) * n + 1e-12));

  std::vector<int> retained(n);
  std::iota(retained.begin(), retained.end(), 0);
  std::vector<std::string> dropped_labels;
  if (n_drop > 0) {
    const ScoreTrace order = gbsr(lib, targets);
    const std::vector<int>& dropped = order.levels[n_drop - 1].removed;
    retained = sorted_complement(dropped, n);
    for (int i : dropped) dropped_labels.push_back(lib.labels[i]);
  }

  EvaluatedLibrary sub;
  sub.matrix.resize(lib.matrix.rows(), static_cast<Eigen::Index>(retained.size()));
  for (std::size_t k = 0; k < retained.size(); ++k) {
    sub.matrix.col(static_cast<Eigen::Index>(k)) = lib.matrix.col(retained[k]);
    sub.labels.push_back(lib.labels[retained[k]]);
    if (lib.is_normalized()) sub.scales.push_back(lib.scales[retained[k]]);
  }

  SparseModel model;
  model.library_labels = lib.labels;
  model.provenance.regressor = "screen_then_stls";
  model.provenance.set("keep_fraction", keep_fraction);
  model.provenance.set("lambda", lambda);
  std::string joined;
  for (const std::string& s : dropped_labels) joined += (joined.empty() ? "" : ";") + s;
  model.provenance.set("screened_out", joined);

  for (std::size_t t = 0; t < targets.size(); ++t) {
    const StlsResult sub_fit = stls(sub, targets[t], lambda, max_iter);
    Vector full = Vector::Zero(n);
    const Vector& raw = sub_fit.model.coordinates[0].coefficients.values;
    for (std::size_t k = 0; k < retained.size(); ++k) full[retained[k]] = raw[static_cast<Eigen::Index>(k)];
    SparseModel::Coordinate c;
    c.name = "y" + std::to_string(t + 1);
    c.coefficients = CoefficientVector::from_values(std::move(full));
    c.residual_norm = sub_fit.model.coordinates[0].residual_norm;
    model.coordinates.push_back(std::move(c));
  }
  return model;
}

}  // namespace dictsel
