#pragma once

#include <cmath>
#include <cstdint>
#include <random>

namespace dictsel {

/// Seedable Gaussian stream on top of mt19937_64. The Box-Muller transform is
/// spelled out so the byte stream does not depend on the standard library's
/// normal_distribution implementation. Replicate r of a sweep uses
/// seed = base_seed + r.
class GaussianRng {
 public:
  explicit GaussianRng(std::uint64_t seed) : engine_(seed) {}

  double gaussian() {
    if (have_spare_) {
      have_spare_ = false;
      return spare_;
    }
    // u1 in (0,1], u2 in [0,1)
    const double u1 = (static_cast<double>(engine_()) + 1.0) / (static_cast<double>(engine_.max()) + 2.0);
    const double u2 = static_cast<double>(engine_()) / (static_cast<double>(engine_.max()) + 1.0);
    const double r = std::sqrt(-2.0 * std::log(u1));
    const double theta = 2.0 * M_PI * u2;
    spare_ = r * std::sin(theta);
    have_spare_ = true;
    return r * std::cos(theta);
  }

  double uniform() { return static_cast<double>(engine_()) / (static_cast<double>(engine_.max()) + 1.0); }

  std::uint64_t raw() { return engine_(); }

 private:
  std::mt19937_64 engine_;
  bool have_spare_ = false;
  double spare_ = 0.0;
};

}  // namespace dictsel
