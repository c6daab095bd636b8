#include "dictsel/weakform.hpp"

#include <cmath>
#include <stdexcept>

namespace dictsel {

namespace {

/// d^k/dt^k of (t-a)^p evaluated with falling-factorial prefactor.
double power_derivative(double base, int p, int k) {
  if (k > p) return 0.0;
  double coeff = 1.0;
  for (int i = 0; i < k; ++i) coeff *= p - i;
  return coeff * std::pow(base, p - k);
}

double binom_int(int n, int k) {
  double b = 1.0;
  for (int i = 0; i < k; ++i) b *= static_cast<double>(n - i) / static_cast<double>(i + 1);
  return b;
}

/// order-th derivative of (t-a)^p (b-t)^q by the Leibniz rule.
double bump_derivative(double t, double a, double b, int p, int q, int order) {
  if (t < a || t > b) return 0.0;
  double acc = 0.0;
  for (int j = 0; j <= order; ++j) {
    const double left = power_derivative(t - a, p, j);
    // d^i/dt^i (b-t)^q = (-1)^i q!/(q-i)! (b-t)^(q-i)
    const int i = order - j;
    double right = power_derivative(b - t, q, i);
    if (i % 2 == 1) right = -right;
    acc += binom_int(order, j) * left * right;
  }
  return acc;
}

Vector trapezoid_weights(const TimeGrid& grid) {
  Vector w = Vector::Constant(grid.samples, grid.dt);
  w[0] *= 0.5;
  w[grid.samples - 1] *= 0.5;
  return w;
}

void check_same_grid(const TimeGrid& a, const TimeGrid& b, const char* what) {
  if (a.samples != b.samples || std::abs(a.t0 - b.t0) > 1e-12 || std::abs(a.dt - b.dt) > 1e-12) {
    throw std::invalid_argument(std::string("weak transform: ") + what + " grid mismatch");
  }
}

}  // namespace

BankSummary summarize(const TestFunctionBank& bank) {
  return BankSummary{bank.supports, bank.p, bank.q, bank.size(), bank.support_len};
}

TestFunctionBank build_test_bank(const TimeGrid& grid, int K, int p, int q, double support_len) {
  if (K < 1) throw std::invalid_argument("build_test_bank: K must be >= 1");
  if (p < 1 || q < 1) {
    throw std::invalid_argument("build_test_bank: p and q must be >= 1 so the functions vanish at both support ends");
  }
  if (grid.samples < 2 || grid.dt <= 0.0) throw std::invalid_argument("build_test_bank: invalid grid");
  const int points_in_support = static_cast<int>(std::floor(support_len / grid.dt + 1e-12)) + 1;
  if (points_in_support < p + q + 2) {
    throw std::invalid_argument("build_test_bank: support of " + std::to_string(points_in_support) +
                                " grid points is too short for degrees p+q (need >= " +
                                std::to_string(p + q + 2) + ")");
  }
  const double span = grid.dt * (grid.samples - 1);
  if (support_len > span + 1e-12) {
    throw std::invalid_argument("build_test_bank: support length exceeds the grid span");
  }

  TestFunctionBank bank;
  bank.grid = grid;
  bank.p = p;
  bank.q = q;
  bank.support_len = support_len;
  bank.values = Matrix::Zero(K, grid.samples);
  bank.derivatives = Matrix::Zero(K, grid.samples);

  const double stride = K > 1 ? (span - support_len) / (K - 1) : 0.0;
  const double first = K > 1 ? grid.t0 : grid.t0 + 0.5 * (span - support_len);
  for (int k = 0; k < K; ++k) {
    const double a = first + k * stride;
    const double b = a + support_len;
    if (a < grid.t0 - 1e-12 || b > grid.t0 + span + 1e-12) {
      throw std::invalid_argument("build_test_bank: support " + std::to_string(k) + " falls outside the grid");
    }
    bank.supports.emplace_back(a, b);

    double peak = 0.0;
    for (int j = 0; j < grid.samples; ++j) {
      const double t = grid.time_at(j);
      if (t <= a || t >= b) continue;
      peak = std::max(peak, std::abs(std::pow(t - a, p) * std::pow(b - t, q)));
    }
    if (peak <= 0.0) {
      throw std::invalid_argument("build_test_bank: support " + std::to_string(k) +
                                  " contains no interior grid point");
    }
    const double c = 1.0 / peak;
    bank.normalization.push_back(c);
    for (int j = 0; j < grid.samples; ++j) {
      const double t = grid.time_at(j);
      if (t <= a || t >= b) continue;  // entries outside the support stay exactly 0
      bank.values(k, j) = c * std::pow(t - a, p) * std::pow(b - t, q);
      bank.derivatives(k, j) = c * bump_derivative(t, a, b, p, q, 1);
    }
  }
  return bank;
}

Matrix TestFunctionBank::derivative_matrix(int order) const {
  if (order == 0) return values;
  if (order == 1) return derivatives;
  if (order > std::min(p, q)) {
    throw std::invalid_argument("derivative_matrix: order " + std::to_string(order) +
                                " exceeds the test-function smoothness (min(p,q) = " +
                                std::to_string(std::min(p, q)) + ")");
  }
  Matrix out = Matrix::Zero(size(), grid.samples);
  for (int k = 0; k < size(); ++k) {
    const auto [a, b] = supports[k];
    for (int j = 0; j < grid.samples; ++j) {
      const double t = grid.time_at(j);
      if (t <= a || t >= b) continue;
      out(k, j) = normalization[k] * bump_derivative(t, a, b, p, q, order);
    }
  }
  return out;
}

WeakSystem weak_transform_ode(const EvaluatedLibrary& lib, const TrajectoryDataset& data,
                              const TestFunctionBank& bank) {
  if (lib.rows() != data.samples()) {
    throw std::invalid_argument("weak_transform_ode: library rows do not match the dataset");
  }
  check_same_grid(bank.grid, data.times, "time");

  const Vector w = trapezoid_weights(bank.grid);
  WeakSystem sys;
  sys.labels = lib.labels;
  sys.time_bank = summarize(bank);
  sys.G = bank.values * w.asDiagonal() * lib.matrix;
  for (int c = 0; c < data.dim(); ++c) {
    sys.targets.push_back(-(bank.derivatives * w.asDiagonal() * data.states.col(c)));
  }
  return sys;
}

WeakSystem weak_transform_pde_1d(const GridDataset& u, const Dictionary& dict,
                                 const TestFunctionBank& space_bank,
                                 const TestFunctionBank& time_bank) {
  check_same_grid(space_bank.grid, u.x_grid, "space");
  check_same_grid(time_bank.grid, u.t_grid, "time");
  for (const Term& t : dict.terms) {
    if (t.kind != Term::Kind::pde_trial) {
      throw std::invalid_argument("weak_transform_pde_1d: dictionary must contain pde_trial terms only");
    }
    if (t.derivative_order > std::min(space_bank.p, space_bank.q)) {
      throw std::invalid_argument("weak_transform_pde_1d: trial derivative order of term '" + t.label +
                                  "' exceeds the space test-function smoothness");
    }
  }

  const int kx = space_bank.size();
  const int kt = time_bank.size();
  const int n = dict.size();
  const Vector wx = trapezoid_weights(space_bank.grid);
  const Vector wt = trapezoid_weights(time_bank.grid);

  const Matrix phix_w = space_bank.values * wx.asDiagonal();        // Kx x nx
  const Matrix phit_w = time_bank.values * wt.asDiagonal();         // Kt x nt
  const Matrix dphit_w = time_bank.derivatives * wt.asDiagonal();   // Kt x nt

  WeakSystem sys;
  sys.labels = dict.labels();
  sys.time_bank = summarize(time_bank);
  sys.space_bank = summarize(space_bank);
  sys.G.resize(kx * kt, n);

  // b(l) = -<d_t psi, u> with rows ordered space-major: l = ix*Kt + it.
  const Matrix bmat = phix_w * u.values * dphit_w.transpose();  // Kx x Kt
  Vector b(kx * kt);
  for (int ix = 0; ix < kx; ++ix) {
    for (int it = 0; it < kt; ++it) b[ix * kt + it] = -bmat(ix, it);
  }
  sys.targets.push_back(std::move(b));

  for (int j = 0; j < n; ++j) {
    const Term& term = dict.terms[j];
    const int e = term.exponents[0];
    const Matrix f = u.values.array().pow(e).matrix();
    const Matrix dphix_w = space_bank.derivative_matrix(term.derivative_order) * wx.asDiagonal();
    Matrix g = dphix_w * f * phit_w.transpose();  // Kx x Kt
    if (term.derivative_order % 2 == 1) g = -g;
    for (int ix = 0; ix < kx; ++ix) {
      for (int it = 0; it < kt; ++it) sys.G(ix * kt + it, j) = g(ix, it);
    }
  }
  return sys;
}

EvaluatedLibrary weak_library(const WeakSystem& system) {
  EvaluatedLibrary lib;
  lib.matrix = system.G;
  lib.labels = system.labels;
  return lib;
}

}  // namespace dictsel
