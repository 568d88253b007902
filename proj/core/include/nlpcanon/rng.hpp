// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cmath>
#include <cstdint>
#include <random>
#include <vector>

namespace nlpcanon {

// Deterministic random stream. The mt19937_64 engine sequence is pinned by
// the standard; the double mappings below are ours, so identical seeds give
// identical samples on every platform. std::*_distribution is avoided
// because its output is implementation-defined.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : engine_(seed) {}

  std::uint64_t next_u64() { return engine_(); }

  /// Uniform in [0, 1).
  double uniform() {
    return static_cast<double>(engine_() >> 11) * 0x1.0p-53;
  }

  /// Uniform in [lo, hi).
  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

  /// Standard normal via Box-Muller (one value per call; pair cached).
  double gaussian() {
    if (have_spare_) {
      have_spare_ = false;
      return spare_;
    }
    double u1 = uniform();
    double u2 = uniform();
    while (u1 <= 0.0) u1 = uniform();
    const double radius = std::sqrt(-2.0 * std::log(u1));
    const double angle = 2.0 * 3.141592653589793238462643383279502884 * u2;
    spare_ = radius * std::sin(angle);
    have_spare_ = true;
    return radius * std::cos(angle);
  }

  /// Uniform direction on the unit sphere in R^n.
  std::vector<double> unit_vector(int n) {
    std::vector<double> v(static_cast<std::size_t>(n));
    double norm2 = 0.0;
    do {
      norm2 = 0.0;
      for (auto& vi : v) {
        vi = gaussian();
        norm2 += vi * vi;
      }
    } while (norm2 < 1e-60);
    const double scale = 1.0 / std::sqrt(norm2);
    for (auto& vi : v) vi *= scale;
    return v;
  }

  /// Uniform sample from the closed Euclidean ball of the given radius.
  std::vector<double> ball_point(int n, double radius) {
    std::vector<double> v = unit_vector(n);
    const double r = radius * std::pow(uniform(), 1.0 / static_cast<double>(n));
    for (auto& vi : v) vi *= r;
    return v;
  }

 private:
  std::mt19937_64 engine_;
  bool have_spare_ = false;
  double spare_ = 0.0;
};

}  // namespace nlpcanon
