#pragma once

#include <cstdint>
#include <limits>
#include <string>
#include <utility>
#include <vector>

#include "dictsel/library.hpp"
#include "dictsel/linops.hpp"
#include "dictsel/scoring.hpp"

namespace dictsel {

struct Provenance {
  std::string regressor;
  std::vector<std::pair<std::string, std::string>> hyperparameters;

  void set(const std::string& key, const std::string& value);
  void set(const std::string& key, double value);
};

/// Sparse model per target coordinate. Coefficients are reported in the raw
/// (unnormalized) column scale; residual_norm is ||D xi - y|| against the raw
/// columns and the regression target.
struct SparseModel {
  struct Coordinate {
    std::string name;
    CoefficientVector coefficients;  // full library length
    double residual_norm = 0.0;
  };
  std::vector<Coordinate> coordinates;
  std::vector<std::string> library_labels;
  Provenance provenance;
};

struct StlsIteration {
  std::vector<int> support;  // support of the recorded iterate
  Vector coefficients;
  double objective = 0.0;  // ||D xi - y||^2 + lambda^2 ||xi||_0
};

struct StlsTrace {
  std::vector<StlsIteration> iterations;
};

struct StlsResult {
  SparseModel model;
  StlsTrace trace;
};

/// One level of a stepwise score trace. `removed` is the candidate removed
/// set at this level; `ratio` is score_i / score_{i-1} (NaN when the
/// predecessor is missing or nonpositive).
struct TraceLevel {
  int level = 0;
  std::vector<int> removed;
  double score = 0.0;
  double ratio = std::numeric_limits<double>::quiet_NaN();
  std::vector<double> per_coordinate;
};

struct ScoreTrace {
  std::vector<TraceLevel> levels;
  std::string regressor;  // esr | gbsr | gfsr | ssr_cv
  ScoreKind kind = ScoreKind::projected;
  ScoreAggregate aggregate = ScoreAggregate::sum;
  std::vector<std::string> coordinate_names;
};

inline constexpr std::uint64_t kDefaultSubsetBudget = 2'000'000;
inline constexpr int kDefaultStlsMaxIter = 20;

/// Sequentially thresholded least squares. Iterates xi^0 = D^+ y,
/// S^i = {j : |xi^i_j| >= lambda}, xi^{i+1} = restricted LS on S^i until the
/// support stabilizes. An empty support terminates with the zero model.
StlsResult stls(const EvaluatedLibrary& lib, const Vector& y, double lambda,
                int max_iter = kDefaultStlsMaxIter);

/// Stepwise sparse regressor: repeatedly drop the surviving index with the
/// smallest |coefficient| and refit. Returns xi^0 .. xi^{n-1}.
std::vector<CoefficientVector> ssr(const EvaluatedLibrary& lib, const Vector& y);

struct SsrPath {
  std::vector<CoefficientVector> path;  // xi^0 .. xi^{n-1}
  std::vector<int> removal_order;       // index dropped at each step, length n-1
};

SsrPath ssr_path(const EvaluatedLibrary& lib, const Vector& y);

/// Exhaustive minimum projected score over all removed sets of a fixed size.
/// Ties pick the lexicographically smallest removed index set.
SubsetScore best_removed_of_size(const EvaluatedLibrary& lib, const std::vector<Vector>& targets,
                                 int removed_size, ScoreAggregate agg = ScoreAggregate::sum,
                                 std::uint64_t budget_cap = kDefaultSubsetBudget);

/// Exhaustive stepwise regressor: level i records the minimum-score removed
/// set of size i, for i = 1..max_remove. Levels are not nested.
ScoreTrace esr(const EvaluatedLibrary& lib, const std::vector<Vector>& targets, int max_remove,
               ScoreAggregate agg = ScoreAggregate::sum,
               std::uint64_t budget_cap = kDefaultSubsetBudget);

/// Greedy backward stepwise regressor: grow the removed set one index at a
/// time, minimizing the projected score of the grown set.
ScoreTrace gbsr(const EvaluatedLibrary& lib, const std::vector<Vector>& targets,
                ScoreAggregate agg = ScoreAggregate::sum);

/// Greedy forward counterpart: grow a kept set minimizing the score of its
/// complement. Level i keeps i terms; `removed` holds the complement.
ScoreTrace gfsr(const EvaluatedLibrary& lib, const std::vector<Vector>& targets,
                ScoreAggregate agg = ScoreAggregate::sum);

/// Orthogonal matching pursuit with a residual-threshold stop. Columns must
/// be unit-normalized. When verify_score_identity is set (always on in debug
/// builds) each chosen index is checked against the projected-score identity
/// linking |<d_i, R>| to the score of d_i in the grown sub-dictionary.
SparseModel omp(const EvaluatedLibrary& lib, const Vector& y, double delta, int max_terms,
                bool verify_score_identity =
#ifdef NDEBUG
                    false
#else
                    true
#endif
);

struct SparsityPolicy {
  enum class Kind { max_ratio, threshold };
  Kind kind = Kind::max_ratio;
  double epsilon = 0.0;

  static SparsityPolicy max_ratio() { return SparsityPolicy{Kind::max_ratio, 0.0}; }
  static SparsityPolicy threshold(double eps) { return SparsityPolicy{Kind::threshold, eps}; }
};

/// Picks a removal level from a score trace. max_ratio locates the sharpest
/// relative jump and returns the level just before it (the last safe removal
/// count); it throws when no ratio exceeds 1, advising the threshold policy.
/// threshold returns the largest level with score < epsilon (0 if none).
int select_sparsity(const ScoreTrace& trace, const SparsityPolicy& policy);

/// Restricted least squares on the kept columns; coefficients reported in
/// raw column scale. Empty keep yields the zero model with residual ||y||.
SparseModel refit(const EvaluatedLibrary& lib, const std::vector<int>& keep, const Vector& y);

/// GBSR screening followed by STLS on the surviving sub-library: the
/// earliest-removed (1 - keep_fraction) * n terms are dropped, then STLS runs
/// per target on the rest. Coefficients are scattered back to full length.
SparseModel screen_then_stls(const EvaluatedLibrary& lib, const std::vector<Vector>& targets,
                             double keep_fraction, double lambda,
                             int max_iter = kDefaultStlsMaxIter);

/// Number of k-subsets of n as a double (monotone overflow-safe).
double binomial(int n, int k);

}  // namespace dictsel
