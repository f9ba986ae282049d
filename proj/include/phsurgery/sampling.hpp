#pragma once

// Seeded sampling helpers shared by the campaigns.

#include <Eigen/Dense>

#include <cstdint>
#include <random>

namespace phsurgery::sampling {

using Rng = std::mt19937_64;

/// Independent stream `stream` derived from `seed` (splitmix64 mixing), so
/// that parallel samples do not depend on scheduling.
inline Rng make_rng(std::uint64_t seed, std::uint64_t stream = 0) {
  std::uint64_t z = seed + 0x9E3779B97F4A7C15ull * (stream + 1);
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ull;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBull;
  z ^= z >> 31;
  return Rng(z);
}

inline double uniform(Rng& rng, double lo, double hi) {
  // 53 random bits mapped to [0, 1): identical across standard libraries.
  const double u = static_cast<double>(rng() >> 11) * 0x1.0p-53;
  return lo + (hi - lo) * u;
}

/// Standard normal via Box-Muller on the portable uniform above.
inline double normal(Rng& rng) {
  double u1 = uniform(rng, 0.0, 1.0);
  while (u1 <= 0.0) u1 = uniform(rng, 0.0, 1.0);
  const double u2 = uniform(rng, 0.0, 1.0);
  return std::sqrt(-2.0 * std::log(u1)) * std::cos(6.283185307179586 * u2);
}

inline Eigen::VectorXd unit_vector(Rng& rng, int dim) {
  Eigen::VectorXd v(dim);
  do {
    for (int i = 0; i < dim; ++i) v[i] = normal(rng);
  } while (v.norm() < 1e-12);
  return v / v.norm();
}

inline Eigen::VectorXd uniform_box(Rng& rng, int dim, double half_width) {
  Eigen::VectorXd v(dim);
  for (int i = 0; i < dim; ++i) v[i] = uniform(rng, -half_width, half_width);
  return v;
}

/// Point uniformly distributed in the ball of given radius.
inline Eigen::VectorXd in_ball(Rng& rng, int dim, double radius) {
  const Eigen::VectorXd d = unit_vector(rng, dim);
  const double r = radius * std::pow(uniform(rng, 0.0, 1.0), 1.0 / dim);
  return r * d;
}

/// Radical-inverse (van der Corput) in base b: the building block for
/// low-discrepancy (Halton) sequences.
inline double radical_inverse(std::uint64_t i, unsigned base) {
  double inv = 1.0 / base;
  double f = inv;
  double r = 0.0;
  while (i > 0) {
    r += f * static_cast<double>(i % base);
    i /= base;
    f *= inv;
  }
  return r;
}

/// i-th point of a Cranley-Patterson rotated Halton sequence in [0,1)^dim.
inline Eigen::VectorXd halton(std::uint64_t i, int dim, const Eigen::VectorXd& shift) {
  static constexpr unsigned primes[] = {2, 3, 5, 7, 11, 13, 17, 19, 23, 29, 31, 37, 41, 43, 47, 53};
  Eigen::VectorXd p(dim);
  for (int j = 0; j < dim; ++j) {
    double v = radical_inverse(i + 1, primes[j % 16]) + shift[j];
    p[j] = v - std::floor(v);
  }
  return p;
}

/// Low-discrepancy unit vector: Halton point pushed through the inverse
/// normal CDF approximation then normalized.
Eigen::VectorXd quasi_unit_vector(std::uint64_t i, int dim, const Eigen::VectorXd& shift);

}  // namespace phsurgery::sampling
