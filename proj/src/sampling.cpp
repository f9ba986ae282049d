#include "phsurgery/sampling.hpp"

#include <cmath>

namespace phsurgery::sampling {

Eigen::VectorXd quasi_unit_vector(std::uint64_t i, int dim, const Eigen::VectorXd& shift) {
  const int pairs = (dim + 1) / 2;
  const Eigen::VectorXd u = halton(i, 2 * pairs, shift);
  Eigen::VectorXd g(2 * pairs);
  for (int p = 0; p < pairs; ++p) {
    // Box-Muller keeps the low-discrepancy structure of the pair.
    const double u1 = std::max(u[2 * p], 1e-300);
    const double r = std::sqrt(-2.0 * std::log(u1));
    g[2 * p] = r * std::cos(6.283185307179586 * u[2 * p + 1]);
    g[2 * p + 1] = r * std::sin(6.283185307179586 * u[2 * p + 1]);
  }
  Eigen::VectorXd v = g.head(dim);
  const double n = v.norm();
  if (n < 1e-12) {
    v.setZero();
    v[0] = 1.0;
    return v;
  }
  return v / n;
}

}  // namespace phsurgery::sampling
