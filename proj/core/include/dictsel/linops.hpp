#pragma once

#include <Eigen/Dense>
#include <stdexcept>
#include <string>
#include <vector>

namespace dictsel {

using Matrix = Eigen::MatrixXd;  // column-major (Eigen default)
using Vector = Eigen::VectorXd;

/// Thrown when a solve requires full column rank and the matrix does not
/// have it at the requested tolerance. No silent minimum-norm fallback.
class RankDeficiencyError : public std::runtime_error {
 public:
  explicit RankDeficiencyError(const std::string& what) : std::runtime_error(what) {}
};

/// Relative tolerance below which a column's residual (after projection onto
/// the previously accepted basis vectors) is treated as zero.
inline constexpr double kDefaultRankTol = 1e-10;

/// Orthonormal basis of the numerically independent columns of a matrix.
/// `vectors` has one unit column per retained source column; columns whose
/// residual fell below the rank tolerance are listed in `dropped_cols`.
struct OrthonormalBasis {
  Matrix vectors;                 // ambient_dim x rank, orthonormal columns
  std::vector<int> source_cols;   // original column index of each basis vector
  std::vector<int> dropped_cols;  // columns found numerically dependent

  int rank() const { return static_cast<int>(vectors.cols()); }
  int ambient_dim() const { return static_cast<int>(vectors.rows()); }

  static OrthonormalBasis empty(int ambient_dim) {
    OrthonormalBasis b;
    b.vectors = Matrix::Zero(ambient_dim, 0);
    return b;
  }
};

/// Coefficient vector with its support (exactly the nonzero entries).
struct CoefficientVector {
  Vector values;
  std::vector<int> support;

  static CoefficientVector from_values(Vector v);
};

/// Modified Gram-Schmidt with one reorthogonalization pass. Columns whose
/// residual norm after projection onto the prior basis is <= rank_tol times
/// the column norm are dropped and recorded. Throws std::invalid_argument if
/// the input has no columns or only zero columns (empty basis).
OrthonormalBasis orthonormal_basis(const Matrix& columns, double rank_tol = kDefaultRankTol);

/// P_S y via the basis: sum_k <u_k,y> u_k. An empty basis maps to zero.
Vector project(const OrthonormalBasis& basis, const Vector& y);

/// argmin ||D xi - y||_2 for full-column-rank D; throws RankDeficiencyError
/// otherwise. Solved through the MGS factorization, never normal equations.
CoefficientVector least_squares(const Matrix& D, const Vector& y,
                                double rank_tol = kDefaultRankTol);

/// Least squares restricted to the columns in S, scattered back to full
/// length. Empty S returns the zero coefficient vector.
CoefficientVector restricted_least_squares(const Matrix& D, const std::vector<int>& S,
                                           const Vector& y,
                                           double rank_tol = kDefaultRankTol);

namespace detail {

/// MGS QR with column dropping. R is rank x n with R(i,j) = <q_i, d_j>;
/// for retained column j, R(pos(j), j) is the residual norm.
struct MgsQr {
  Matrix q;                      // m x rank
  Matrix r;                      // rank x n
  std::vector<int> kept;         // source columns, ascending
  std::vector<int> dropped;
};

MgsQr mgs_qr(const Matrix& columns, double rank_tol);

}  // namespace detail

}  // namespace dictsel
