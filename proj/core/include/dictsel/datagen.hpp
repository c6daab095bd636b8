#pragma once

#include <cstdint>
#include <functional>
#include <optional>
#include <string>
#include <variant>
#include <vector>

#include "dictsel/linops.hpp"

namespace dictsel {

/// Uniform time grid described by origin, spacing and sample count.
struct TimeGrid {
  double t0 = 0.0;
  double dt = 0.0;
  int samples = 0;

  double time_at(int j) const { return t0 + dt * j; }
  Vector to_vector() const;
};

struct NoiseMeta {
  double eta = 0.0;
  std::uint64_t seed = 0;
  std::vector<double> base_rms;  // per coordinate
};

/// Sampled trajectory: states are samples x dim, derivatives (when present)
/// have the same shape.
struct TrajectoryDataset {
  TimeGrid times;
  Matrix states;
  std::optional<Matrix> derivatives;
  std::optional<NoiseMeta> noise_meta;

  int samples() const { return static_cast<int>(states.rows()); }
  int dim() const { return static_cast<int>(states.cols()); }
};

/// Spatiotemporal field on a uniform (space x time) grid.
struct GridDataset {
  TimeGrid x_grid;  // reuse: t0 -> x0, dt -> dx
  TimeGrid t_grid;
  Matrix values;  // space x time

  int nx() const { return static_cast<int>(values.rows()); }
  int nt() const { return static_cast<int>(values.cols()); }
};

struct LorenzSystem {
  double sigma = 10.0;
  double rho = 26.0;
  double beta = 8.0 / 3.0;
};
struct HopfSystem {
  double mu = -1e-5;
  double omega = 1.0;
};
struct PitchforkSystem {
  double mu = 0.5;
};
using OdeSystem = std::variant<LorenzSystem, HopfSystem, PitchforkSystem>;

int system_dim(const OdeSystem& system);
std::string system_name(const OdeSystem& system);
Vector system_rhs(const OdeSystem& system, const Vector& state);

/// Classical fixed-step RK4 sampled at every step. Throws if the state
/// becomes non-finite, reporting the time of failure.
TrajectoryDataset integrate_rk4(const OdeSystem& system, const Vector& x0, double t0, double t_final,
                                double dt);

/// Second-order central differences (one-sided second order at endpoints).
TrajectoryDataset finite_difference_derivative(const TrajectoryDataset& data);

/// X + eta * rms(X_c) * N(0,1), rms per coordinate over the whole record.
/// eta = 0 returns the input bit-identically.
TrajectoryDataset add_noise(const TrajectoryDataset& data, double eta, std::uint64_t seed);

/// Same noise model applied to a field, rms over all grid values.
GridDataset add_noise(const GridDataset& data, double eta, std::uint64_t seed);

/// First shock time -1 / min u0'(x) (+inf when u0' >= 0), estimated on a
/// fine grid over [x0, x_end].
double burgers_shock_time(const std::function<double(double)>& u0, double x0, double x_end);

/// Inviscid Burgers by characteristics: u = u0(x - u t) solved per node by
/// bisection to 1e-12. Requires every requested time to precede the shock.
GridDataset burgers_1d(const TimeGrid& x_grid, const TimeGrid& t_grid,
                       const std::function<double(double)>& u0);

}  // namespace dictsel
