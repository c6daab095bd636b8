#pragma once

#include <cstdint>
#include <vector>

#include "dictsel/library.hpp"
#include "dictsel/linops.hpp"

namespace dictsel {

enum class ScoreKind { projected, pareto, cross_validation };

/// Projected and Pareto scores live in [0, 1] (up to roundoff);
/// cross-validation deltas are any nonnegative real.
struct ScoreValue {
  double value = 0.0;
  ScoreKind kind = ScoreKind::projected;
};

/// How per-coordinate scores combine into one number for all-coordinate
/// searches: plain sum (default) or sum of squared scores.
enum class ScoreAggregate { sum, sum_of_squares };

const char* to_string(ScoreKind kind);
const char* to_string(ScoreAggregate agg);

struct SubsetScore {
  std::vector<int> removed;
  ScoreValue score;
  std::vector<ScoreValue> per_coordinate;
};

/// ||(P_D - P_{D \ {i}}) y|| / ||y||.
ScoreValue score_single(int i, const EvaluatedLibrary& lib, const Vector& y);

/// ||(P_D - P_{D \ removed}) y|| / ||y||; empty removed set scores exactly 0,
/// the full set scores ||P_D y|| / ||y||.
ScoreValue score_subset(const std::vector<int>& removed, const EvaluatedLibrary& lib, const Vector& y);

/// ||y - P_{D \ removed} y|| / ||y|| (reconstruction error form).
ScoreValue pareto_score(const std::vector<int>& removed, const EvaluatedLibrary& lib, const Vector& y);

/// k-fold cross-validation deltas along the SSR path, one per SSR iteration.
/// Folds are contiguous index blocks unless shuffle is set (then the seed
/// drives the permutation).
std::vector<ScoreValue> cross_validation_scores(const EvaluatedLibrary& lib, const Vector& y, int k,
                                                std::uint64_t seed = 0, bool shuffle = false);

/// Aggregate of score_subset over several targets; per-coordinate values are
/// retained in the result.
SubsetScore multi_target_score(const std::vector<int>& removed, const EvaluatedLibrary& lib,
                               const std::vector<Vector>& targets,
                               ScoreAggregate agg = ScoreAggregate::sum);

/// Shared state for repeated subset scoring against fixed targets: the full
/// dictionary basis and the projected targets are computed once.
class ScoreEngine {
 public:
  ScoreEngine(const EvaluatedLibrary& lib, std::vector<Vector> targets,
              ScoreAggregate agg = ScoreAggregate::sum);

  int cols() const { return static_cast<int>(lib_->cols()); }
  int n_targets() const { return static_cast<int>(targets_.size()); }
  const EvaluatedLibrary& lib() const { return *lib_; }
  ScoreAggregate aggregate_mode() const { return agg_; }
  const Vector& target(int t) const { return targets_[t]; }
  const Vector& projected_target(int t) const { return projected_[t]; }
  double target_norm(int t) const { return norms_[t]; }

  /// Projected score of the removed set against target t.
  double projected_score(const std::vector<int>& removed, int t) const;
  /// Pareto score of the removed set against target t.
  double pareto(const std::vector<int>& removed, int t) const;
  /// Aggregate + per-coordinate projected scores.
  SubsetScore score(const std::vector<int>& removed) const;
  double aggregate(const std::vector<double>& per_coordinate) const;

 private:
  Vector projection_onto_kept(const std::vector<int>& removed, const Vector& y) const;

  const EvaluatedLibrary* lib_;
  std::vector<Vector> targets_;
  std::vector<Vector> projected_;
  std::vector<double> norms_;
  ScoreAggregate agg_;
};

}  // namespace dictsel
