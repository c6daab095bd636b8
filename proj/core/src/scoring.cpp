#include "dictsel/scoring.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>

#include "dictsel/regressors.hpp"
#include "dictsel/rng.hpp"

namespace dictsel {

namespace {

void check_target(const Vector& y) {
  if (y.norm() <= 0.0) throw std::invalid_argument("score: zero target vector");
}

void check_removed(const std::vector<int>& removed, int n) {
  for (int i : removed) {
    if (i < 0 || i >= n) throw std::invalid_argument("score: removed index outside column range");
  }
}

std::vector<int> complement(const std::vector<int>& removed, int n) {
  std::vector<char> is_removed(n, 0);
  for (int i : removed) is_removed[i] = 1;
  std::vector<int> kept;
  kept.reserve(n);
  for (int i = 0; i < n; ++i) {
    if (!is_removed[i]) kept.push_back(i);
  }
  return kept;
}

/// Basis of a column subset; zero/dependent columns are dropped silently so
/// that the projection onto the span is always defined.
OrthonormalBasis span_basis(const Matrix& m, const std::vector<int>& cols) {
  if (cols.empty()) return OrthonormalBasis::empty(static_cast<int>(m.rows()));
  Matrix sub(m.rows(), static_cast<Eigen::Index>(cols.size()));
  for (std::size_t k = 0; k < cols.size(); ++k) sub.col(static_cast<Eigen::Index>(k)) = m.col(cols[k]);
  detail::MgsQr qr = detail::mgs_qr(sub, kDefaultRankTol);
  OrthonormalBasis b;
  b.vectors = std::move(qr.q);
  b.source_cols = std::move(qr.kept);
  b.dropped_cols = std::move(qr.dropped);
  return b;
}

}  // namespace

const char* to_string(ScoreKind kind) {
  switch (kind) {
    case ScoreKind::projected: return "projected";
    case ScoreKind::pareto: return "pareto";
    case ScoreKind::cross_validation: return "cross_validation";
  }
  return "?";
}

const char* to_string(ScoreAggregate agg) {
  return agg == ScoreAggregate::sum ? "sum" : "sum_of_squares";
}

ScoreEngine::ScoreEngine(const EvaluatedLibrary& lib, std::vector<Vector> targets, ScoreAggregate agg)
    : lib_(&lib), targets_(std::move(targets)), agg_(agg) {
  if (targets_.empty()) throw std::invalid_argument("ScoreEngine: need at least one target");
  const OrthonormalBasis full = span_basis(lib.matrix, complement({}, lib.cols()));
  for (const Vector& y : targets_) {
    check_target(y);
    if (y.size() != lib.matrix.rows()) {
      throw std::invalid_argument("ScoreEngine: target length does not match library rows");
    }
    projected_.push_back(project(full, y));
    norms_.push_back(y.norm());
  }
}

Vector ScoreEngine::projection_onto_kept(const std::vector<int>& removed, const Vector& y) const {
  const std::vector<int> kept = complement(removed, cols());
  const OrthonormalBasis basis = span_basis(lib_->matrix, kept);
  return project(basis, y);
}

double ScoreEngine::projected_score(const std::vector<int>& removed, int t) const {
  check_removed(removed, cols());
  if (removed.empty()) return 0.0;
  const Vector pk = projection_onto_kept(removed, targets_[t]);
  return (projected_[t] - pk).norm() / norms_[t];
}

double ScoreEngine::pareto(const std::vector<int>& removed, int t) const {
  check_removed(removed, cols());
  const Vector pk = projection_onto_kept(removed, targets_[t]);
  return (targets_[t] - pk).norm() / norms_[t];
}

SubsetScore ScoreEngine::score(const std::vector<int>& removed) const {
  check_removed(removed, cols());
  SubsetScore out;
  out.removed = removed;
  std::sort(out.removed.begin(), out.removed.end());
  std::vector<double> per(n_targets(), 0.0);
  if (!removed.empty()) {
    for (int t = 0; t < n_targets(); ++t) {
      const Vector pk = projection_onto_kept(out.removed, targets_[t]);
      per[t] = (projected_[t] - pk).norm() / norms_[t];
    }
  }
  for (double v : per) out.per_coordinate.push_back(ScoreValue{v, ScoreKind::projected});
  out.score = ScoreValue{aggregate(per), ScoreKind::projected};
  return out;
}

double ScoreEngine::aggregate(const std::vector<double>& per_coordinate) const {
  double acc = 0.0;
  for (double v : per_coordinate) acc += agg_ == ScoreAggregate::sum ? v : v * v;
  return acc;
}

ScoreValue score_single(int i, const EvaluatedLibrary& lib, const Vector& y) {
  check_target(y);
  ScoreEngine engine(lib, {y});
  return ScoreValue{engine.projected_score({i}, 0), ScoreKind::projected};
}

ScoreValue score_subset(const std::vector<int>& removed, const EvaluatedLibrary& lib, const Vector& y) {
  check_target(y);
  ScoreEngine engine(lib, {y});
  return ScoreValue{engine.projected_score(removed, 0), ScoreKind::projected};
}

ScoreValue pareto_score(const std::vector<int>& removed, const EvaluatedLibrary& lib, const Vector& y) {
  check_target(y);
  ScoreEngine engine(lib, {y});
  return ScoreValue{engine.pareto(removed, 0), ScoreKind::pareto};
}

SubsetScore multi_target_score(const std::vector<int>& removed, const EvaluatedLibrary& lib,
                               const std::vector<Vector>& targets, ScoreAggregate agg) {
  ScoreEngine engine(lib, targets, agg);
  return engine.score(removed);
}

std::vector<ScoreValue> cross_validation_scores(const EvaluatedLibrary& lib, const Vector& y, int k,
                                                std::uint64_t seed, bool shuffle) {
  const int m = lib.rows();
  const int n = lib.cols();
  check_target(y);
  if (k < 2) throw std::invalid_argument("cross_validation_scores: k must be >= 2");
  if (k > m) throw std::invalid_argument("cross_validation_scores: k exceeds the sample count");

  std::vector<int> order(m);
  std::iota(order.begin(), order.end(), 0);
  if (shuffle) {
    GaussianRng rng(seed);
    for (int i = m - 1; i > 0; --i) {
      const int j = static_cast<int>(rng.raw() % static_cast<std::uint64_t>(i + 1));
      std::swap(order[i], order[j]);
    }
  }

  std::vector<double> sq(n, 0.0);
  for (int fold = 0; fold < k; ++fold) {
    const int begin = static_cast<int>(static_cast<long long>(fold) * m / k);
    const int end = static_cast<int>(static_cast<long long>(fold + 1) * m / k);
    const int test_size = end - begin;
    const int train_size = m - test_size;
    if (train_size < n) {
      throw std::invalid_argument("cross_validation_scores: training block has fewer rows than columns");
    }
    Matrix d_train(train_size, n), d_test(test_size, n);
    Vector y_train(train_size), y_test(test_size);
    int it = 0, is = 0;
    for (int j = 0; j < m; ++j) {
      const int row = order[j];
      if (j >= begin && j < end) {
        d_test.row(is) = lib.matrix.row(row);
        y_test[is++] = y[row];
      } else {
        d_train.row(it) = lib.matrix.row(row);
        y_train[it++] = y[row];
      }
    }
    EvaluatedLibrary train_lib;
    train_lib.matrix = std::move(d_train);
    train_lib.labels = lib.labels;
    const std::vector<CoefficientVector> path = ssr(train_lib, y_train);
    for (int i = 0; i < n; ++i) {
      sq[i] += (y_test - d_test * path[i].values).squaredNorm();
    }
  }

  std::vector<ScoreValue> out;
  out.reserve(n);
  for (int i = 0; i < n; ++i) {
    out.push_back(ScoreValue{std::sqrt(sq[i] / k), ScoreKind::cross_validation});
  }
  return out;
}

}  // namespace dictsel
