#include "dictsel/datagen.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>

#include "dictsel/rng.hpp"

namespace dictsel {

Vector TimeGrid::to_vector() const {
  Vector t(samples);
  for (int j = 0; j < samples; ++j) t[j] = time_at(j);
  return t;
}

int system_dim(const OdeSystem& system) {
  return std::visit(
      [](const auto& s) -> int {
        using T = std::decay_t<decltype(s)>;
        if constexpr (std::is_same_v<T, LorenzSystem>) return 3;
        return 2;
      },
      system);
}

std::string system_name(const OdeSystem& system) {
  return std::visit(
      [](const auto& s) -> std::string {
        using T = std::decay_t<decltype(s)>;
        if constexpr (std::is_same_v<T, LorenzSystem>) return "lorenz";
        if constexpr (std::is_same_v<T, HopfSystem>) return "hopf";
        return "pitchfork";
      },
      system);
}

Vector system_rhs(const OdeSystem& system, const Vector& state) {
  return std::visit(
      [&](const auto& s) -> Vector {
        using T = std::decay_t<decltype(s)>;
        if constexpr (std::is_same_v<T, LorenzSystem>) {
          Vector f(3);
          f[0] = s.sigma * (state[1] - state[0]);
          f[1] = state[0] * (s.rho - state[2]) - state[1];
          f[2] = state[0] * state[1] - s.beta * state[2];
          return f;
        } else if constexpr (std::is_same_v<T, HopfSystem>) {
          const double r2 = state[0] * state[0] + state[1] * state[1];
          Vector f(2);
          f[0] = s.mu * state[0] - s.omega * state[1] - state[0] * r2;
          f[1] = s.omega * state[0] + s.mu * state[1] - state[1] * r2;
          return f;
        } else {
          Vector f(2);
          f[0] = s.mu * state[0] - state[0] * state[0] * state[0];
          f[1] = -state[1];
          return f;
        }
      },
      system);
}

TrajectoryDataset integrate_rk4(const OdeSystem& system, const Vector& x0, double t0, double t_final,
                                double dt) {
  if (dt <= 0.0) throw std::invalid_argument("integrate_rk4: dt must be positive");
  if (t_final <= t0) throw std::invalid_argument("integrate_rk4: t_final must exceed t0");
  if (x0.size() != system_dim(system)) {
    throw std::invalid_argument("integrate_rk4: initial state dimension mismatch");
  }
  const int steps = static_cast<int>(std::llround((t_final - t0) / dt));
  TrajectoryDataset out;
  out.times = TimeGrid{t0, dt, steps + 1};
  out.states.resize(steps + 1, x0.size());
  Vector x = x0;
  out.states.row(0) = x.transpose();
  for (int i = 0; i < steps; ++i) {
    const Vector k1 = system_rhs(system, x);
    const Vector k2 = system_rhs(system, x + 0.5 * dt * k1);
    const Vector k3 = system_rhs(system, x + 0.5 * dt * k2);
    const Vector k4 = system_rhs(system, x + dt * k3);
    x += dt / 6.0 * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
    if (!x.allFinite()) {
      throw std::runtime_error("integrate_rk4: state blew up at t = " +
                               std::to_string(t0 + dt * (i + 1)));
    }
    out.states.row(i + 1) = x.transpose();
  }
  return out;
}

TrajectoryDataset finite_difference_derivative(const TrajectoryDataset& data) {
  const int m = data.samples();
  if (m < 3) throw std::invalid_argument("finite_difference_derivative: need at least 3 samples");
  const double h = data.times.dt;
  TrajectoryDataset out = data;
  Matrix d(m, data.dim());
  for (int c = 0; c < data.dim(); ++c) {
    d(0, c) = (-3.0 * data.states(0, c) + 4.0 * data.states(1, c) - data.states(2, c)) / (2.0 * h);
    for (int j = 1; j < m - 1; ++j) {
      d(j, c) = (data.states(j + 1, c) - data.states(j - 1, c)) / (2.0 * h);
    }
    d(m - 1, c) = (3.0 * data.states(m - 1, c) - 4.0 * data.states(m - 2, c) + data.states(m - 3, c)) /
                  (2.0 * h);
  }
  out.derivatives = std::move(d);
  return out;
}

TrajectoryDataset add_noise(const TrajectoryDataset& data, double eta, std::uint64_t seed) {
  if (eta < 0.0) throw std::invalid_argument("add_noise: eta must be >= 0");
  if (eta == 0.0) return data;
  TrajectoryDataset out = data;
  GaussianRng rng(seed);
  NoiseMeta meta;
  meta.eta = eta;
  meta.seed = seed;
  const int m = data.samples();
  for (int c = 0; c < data.dim(); ++c) {
    const double rms = std::sqrt(data.states.col(c).squaredNorm() / m);
    meta.base_rms.push_back(rms);
    for (int j = 0; j < m; ++j) out.states(j, c) += eta * rms * rng.gaussian();
  }
  out.noise_meta = meta;
  return out;
}

GridDataset add_noise(const GridDataset& data, double eta, std::uint64_t seed) {
  if (eta < 0.0) throw std::invalid_argument("add_noise: eta must be >= 0");
  if (eta == 0.0) return data;
  GridDataset out = data;
  GaussianRng rng(seed);
  const double rms = std::sqrt(data.values.squaredNorm() / (data.nx() * data.nt()));
  for (int i = 0; i < data.nx(); ++i) {
    for (int s = 0; s < data.nt(); ++s) out.values(i, s) += eta * rms * rng.gaussian();
  }
  return out;
}

double burgers_shock_time(const std::function<double(double)>& u0, double x0, double x_end) {
  const int fine = 4096;
  const double h = (x_end - x0) / fine;
  double min_slope = std::numeric_limits<double>::infinity();
  for (int i = 0; i <= fine; ++i) {
    const double x = x0 + i * h;
    const double slope = (u0(x + h) - u0(x - h)) / (2.0 * h);
    min_slope = std::min(min_slope, slope);
  }
  if (min_slope >= 0.0) return std::numeric_limits<double>::infinity();
  return -1.0 / min_slope;
}

GridDataset burgers_1d(const TimeGrid& x_grid, const TimeGrid& t_grid,
                       const std::function<double(double)>& u0) {
  const double x_end = x_grid.time_at(x_grid.samples - 1);
  const double t_shock = burgers_shock_time(u0, x_grid.t0, x_end);
  const double t_final = t_grid.time_at(t_grid.samples - 1);
  if (t_final >= t_shock) {
    throw std::invalid_argument("burgers_1d: requested final time " + std::to_string(t_final) +
                                " is at or beyond the first shock time " + std::to_string(t_shock));
  }

  // Range of u0 brackets the solution of w = u0(x - w t).
  double lo = std::numeric_limits<double>::infinity();
  double hi = -lo;
  const int fine = 4096;
  for (int i = 0; i <= fine; ++i) {
    const double v = u0(x_grid.t0 + (x_end - x_grid.t0) * i / fine);
    lo = std::min(lo, v);
    hi = std::max(hi, v);
  }
  lo -= 1e-9;
  hi += 1e-9;

  GridDataset out;
  out.x_grid = x_grid;
  out.t_grid = t_grid;
  out.values.resize(x_grid.samples, t_grid.samples);
  for (int s = 0; s < t_grid.samples; ++s) {
    const double t = t_grid.time_at(s);
    for (int i = 0; i < x_grid.samples; ++i) {
      const double x = x_grid.time_at(i);
      double a = lo, b = hi;
      auto g = [&](double w) { return w - u0(x - w * t); };
      double ga = g(a);
      for (int it = 0; it < 200 && b - a > 1e-12; ++it) {
        const double mid = 0.5 * (a + b);
        const double gm = g(mid);
        if ((ga <= 0.0) == (gm <= 0.0)) {
          a = mid;
          ga = gm;
        } else {
          b = mid;
        }
      }
      out.values(i, s) = 0.5 * (a + b);
    }
  }
  return out;
}

}  // namespace dictsel
