#pragma once

#include <string>
#include <vector>

#include "dictsel/linops.hpp"

namespace dictsel {

/// One symbolic library term. Monomials carry per-variable exponents, trig
/// terms an integer frequency and a variable index, PDE trial terms a
/// monomial in the field plus a spatial derivative order applied to it.
struct Term {
  enum class Kind { monomial, sine, cosine, pde_trial };

  Kind kind = Kind::monomial;
  std::vector<int> exponents;  // monomial / pde_trial monomial part
  int frequency = 0;           // trig only, >= 1
  int variable = -1;           // trig only
  int derivative_order = 0;    // pde_trial only, >= 0
  std::string label;

  int total_degree() const;
  bool operator==(const Term& other) const;
};

/// Canonical variable name for state coordinate v: x,y,z for dim <= 3,
/// otherwise x1..xd.
std::string variable_name(int v, int state_dim);

/// Regenerates the canonical label from the term fields.
std::string term_label(const Term& term, int state_dim);

/// Ordered term list; order fixes the column order of evaluated matrices.
struct Dictionary {
  std::vector<Term> terms;
  int state_dim = 0;

  int size() const { return static_cast<int>(terms.size()); }
  std::vector<std::string> labels() const;
  /// Index of the term with this label, or -1.
  int index_of(const std::string& label) const;
};

/// Column-labeled design matrix. When `scales` is non-empty the matrix holds
/// rescaled columns and original_column(i) = matrix.col(i) * scales[i].
struct EvaluatedLibrary {
  Matrix matrix;
  std::vector<std::string> labels;
  std::vector<double> scales;

  int rows() const { return static_cast<int>(matrix.rows()); }
  int cols() const { return static_cast<int>(matrix.cols()); }
  bool is_normalized() const { return !scales.empty(); }
  int index_of(const std::string& label) const;
};

struct TrajectoryDataset;  // datagen.hpp

/// All monomials x^alpha with |alpha| <= max_degree in graded-lex order,
/// constant first; within a degree the first variable's exponent decreases
/// first.
Dictionary build_polynomial_library(int state_dim, int max_degree);

/// The 32-term benchmark library: 20 monomials of degree <= 3 in (x,y,z)
/// followed by sin/cos of each variable at frequencies 1 and 2, grouped by
/// variable then frequency, sine before cosine.
Dictionary build_lorenz_paper_library();

/// PDE trial dictionary: every monomial u^e, 1 <= e <= max_power, under each
/// spatial derivative order 0..max_derivative, ordered derivative-major.
Dictionary build_pde_trial_library(int max_power, int max_derivative);

/// Evaluate each term on every sample row of the state matrix (m x d).
EvaluatedLibrary evaluate(const Dictionary& dict, const Matrix& states);
EvaluatedLibrary evaluate(const Dictionary& dict, const TrajectoryDataset& data);

/// Rescale every column to unit Euclidean norm, recording the scales.
/// Throws on zero columns, naming the term label.
EvaluatedLibrary normalize_columns(const EvaluatedLibrary& lib);

/// Undo normalize_columns.
EvaluatedLibrary unnormalize_columns(const EvaluatedLibrary& lib);

/// Map coefficients fit against the (possibly scaled) columns back to the
/// raw-column basis: c_raw = c / scale.
Vector coefficients_to_raw_scale(const EvaluatedLibrary& lib, const Vector& coefficients);

struct PrunedLibrary {
  EvaluatedLibrary lib;
  std::vector<std::string> dropped_labels;
};

/// Remove columns that are numerically dependent on their predecessors at
/// the given tolerance, recording their labels. Evaluated benchmark
/// dictionaries can be coherent to machine precision on decaying
/// trajectories; regressions run on the pruned library.
PrunedLibrary drop_dependent_columns(const EvaluatedLibrary& lib,
                                     double rank_tol = kDefaultRankTol);

}  // namespace dictsel
