#pragma once

#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "dictsel/datagen.hpp"
#include "dictsel/library.hpp"
#include "dictsel/linops.hpp"

namespace dictsel {

/// Compactly supported polynomial test functions C (t-a)^p (b-t)^q sampled
/// on a uniform grid, normalized to unit peak over the grid. Entries outside
/// each support are exactly zero.
struct TestFunctionBank {
  TimeGrid grid;
  std::vector<std::pair<double, double>> supports;  // (a_k, b_k)
  int p = 0;
  int q = 0;
  double support_len = 0.0;
  Matrix values;                      // K x m
  Matrix derivatives;                 // K x m, analytic phi'
  std::vector<double> normalization;  // C_k

  int size() const { return static_cast<int>(supports.size()); }

  /// Analytic order-th derivative of every test function on the grid
  /// (order 0 returns `values`). Throws if order > min(p, q).
  Matrix derivative_matrix(int order) const;
};

/// Summary kept with weak systems and serialized to JSON.
struct BankSummary {
  std::vector<std::pair<double, double>> supports;
  int p = 0;
  int q = 0;
  int K = 0;
  double support_len = 0.0;
};

BankSummary summarize(const TestFunctionBank& bank);

/// K supports of the given length, uniformly placed inside the grid span.
/// Requires p, q >= 1 (the functions must vanish at both support ends) and a
/// support covering at least p+q+2 grid points.
TestFunctionBank build_test_bank(const TimeGrid& grid, int K, int p, int q, double support_len);

/// Weak-form regression system: G holds one row per test function (per test
/// function pair for PDEs), `targets` one right-hand side per coordinate.
struct WeakSystem {
  Matrix G;
  std::vector<std::string> labels;
  std::vector<Vector> targets;
  std::string quadrature = "trapezoid";
  BankSummary time_bank;
  std::optional<BankSummary> space_bank;  // PDE only

  int rows() const { return static_cast<int>(G.rows()); }
  int cols() const { return static_cast<int>(G.cols()); }
};

/// ODE weak transform: G_{k,j} = quad(phi_k d_j), b_{k,c} = -quad(phi'_k x_c)
/// with composite-trapezoid quadrature on the shared uniform grid.
WeakSystem weak_transform_ode(const EvaluatedLibrary& lib, const TrajectoryDataset& data,
                              const TestFunctionBank& bank);

/// 1-D PDE weak transform with separable test functions
/// psi(x,t) = phi_x(x) phi_t(t): b = -<d_t psi, u>, G column j =
/// <(-1)^a d_x^a psi, f_j(u)> with the trial derivative moved onto psi
/// analytically; tensor-product trapezoid quadrature.
WeakSystem weak_transform_pde_1d(const GridDataset& u, const Dictionary& dict,
                                 const TestFunctionBank& space_bank,
                                 const TestFunctionBank& time_bank);

/// View of the weak system as an evaluated library (for regressors/scoring).
EvaluatedLibrary weak_library(const WeakSystem& system);

}  // namespace dictsel
