#include "dictsel/linops.hpp"

#include <algorithm>
#include <cmath>

namespace dictsel {

namespace detail {

MgsQr mgs_qr(const Matrix& columns, double rank_tol) {
  const Eigen::Index m = columns.rows();
  const Eigen::Index n = columns.cols();
  MgsQr out;
  out.q = Matrix::Zero(m, n);
  out.r = Matrix::Zero(n, n);

  Eigen::Index rank = 0;
  for (Eigen::Index j = 0; j < n; ++j) {
    Vector v = columns.col(j);
    const double col_norm = v.norm();
    // Two projection passes keep the basis orthogonal to ~1e-15 even for
    // highly coherent dictionaries.
    for (int pass = 0; pass < 2; ++pass) {
      for (Eigen::Index i = 0; i < rank; ++i) {
        const double c = out.q.col(i).dot(v);
        v -= c * out.q.col(i);
        out.r(i, j) += c;
      }
    }
    const double rnorm = v.norm();
    if (rnorm <= rank_tol * col_norm) {
      out.dropped.push_back(static_cast<int>(j));
      continue;
    }
    out.q.col(rank) = v / rnorm;
    out.r(rank, j) = rnorm;
    out.kept.push_back(static_cast<int>(j));
    ++rank;
  }
  out.q.conservativeResize(m, rank);
  out.r.conservativeResize(rank, n);
  return out;
}

}  // namespace detail

CoefficientVector CoefficientVector::from_values(Vector v) {
  CoefficientVector c;
  c.values = std::move(v);
  for (Eigen::Index i = 0; i < c.values.size(); ++i) {
    if (c.values[i] != 0.0) c.support.push_back(static_cast<int>(i));
  }
  return c;
}

OrthonormalBasis orthonormal_basis(const Matrix& columns, double rank_tol) {
  if (columns.cols() == 0 || columns.rows() == 0) {
    throw std::invalid_argument("orthonormal_basis: input matrix has no entries");
  }
  if (rank_tol <= 0.0) {
    throw std::invalid_argument("orthonormal_basis: rank_tol must be positive");
  }
  detail::MgsQr qr = detail::mgs_qr(columns, rank_tol);
  if (qr.kept.empty()) {
    throw std::invalid_argument("orthonormal_basis: all columns are zero, basis is empty");
  }
  OrthonormalBasis b;
  b.vectors = std::move(qr.q);
  b.source_cols = std::move(qr.kept);
  b.dropped_cols = std::move(qr.dropped);
  return b;
}

Vector project(const OrthonormalBasis& basis, const Vector& y) {
  if (y.size() != basis.ambient_dim()) {
    throw std::invalid_argument("project: vector dimension does not match basis ambient dimension");
  }
  if (basis.rank() == 0) return Vector::Zero(y.size());
  return basis.vectors * (basis.vectors.transpose() * y);
}

CoefficientVector least_squares(const Matrix& D, const Vector& y, double rank_tol) {
  if (D.rows() != y.size()) {
    throw std::invalid_argument("least_squares: row count of D does not match length of y");
  }
  detail::MgsQr qr = detail::mgs_qr(D, rank_tol);
  if (!qr.dropped.empty() || qr.kept.empty()) {
    std::string cols;
    for (int c : qr.dropped) cols += " " + std::to_string(c);
    throw RankDeficiencyError("least_squares: matrix is rank deficient at tolerance " +
                              std::to_string(rank_tol) + "; dependent columns:" + cols);
  }
  // D = Q R with R square upper triangular; xi = R^{-1} Q^T y.
  const Vector qty = qr.q.transpose() * y;
  const Vector xi = qr.r.triangularView<Eigen::Upper>().solve(qty);
  return CoefficientVector::from_values(xi);
}

CoefficientVector restricted_least_squares(const Matrix& D, const std::vector<int>& S,
                                           const Vector& y, double rank_tol) {
  CoefficientVector out;
  out.values = Vector::Zero(D.cols());
  if (S.empty()) return out;

  std::vector<int> idx = S;
  std::sort(idx.begin(), idx.end());
  idx.erase(std::unique(idx.begin(), idx.end()), idx.end());
  if (idx.front() < 0 || idx.back() >= D.cols()) {
    throw std::invalid_argument("restricted_least_squares: index outside column range");
  }

  Matrix sub(D.rows(), static_cast<Eigen::Index>(idx.size()));
  for (std::size_t k = 0; k < idx.size(); ++k) sub.col(static_cast<Eigen::Index>(k)) = D.col(idx[k]);

  const CoefficientVector partial = least_squares(sub, y, rank_tol);
  for (std::size_t k = 0; k < idx.size(); ++k) out.values[idx[k]] = partial.values[static_cast<Eigen::Index>(k)];
  out = CoefficientVector::from_values(std::move(out.values));
  return out;
}

}  // namespace dictsel
