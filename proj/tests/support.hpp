#pragma once

#include <cmath>
#include <vector>

#include <Eigen/Dense>

#include "otsafe/core.hpp"

namespace otsafe::testing {

inline ProbVec random_probvec(std::size_t n, Rng& rng, bool allow_zeros = false) {
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  std::vector<double> w(n);
  double total = 0.0;
  for (double& x : w) {
    x = unit(rng);
    if (allow_zeros && unit(rng) < 0.2) x = 0.0;
    total += x;
  }
  if (total == 0.0) w[0] = total = 1.0;
  for (double& x : w) x /= total;
  return ProbVec(std::move(w));
}

inline double total_variation(const ProbVec& a, const ProbVec& b) {
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) s += std::abs(a[i] - b[i]);
  return 0.5 * s;
}

/// Stationary distribution by solving (P^T - I) mu = 0 with sum(mu) = 1.
inline std::vector<double> stationary_by_solve(const Matrix& p) {
  const auto n = static_cast<Eigen::Index>(p.rows());
  Eigen::MatrixXd a(n + 1, n);
  for (Eigen::Index i = 0; i < n; ++i)
    for (Eigen::Index j = 0; j < n; ++j)
      a(i, j) = p(static_cast<std::size_t>(j), static_cast<std::size_t>(i)) - (i == j ? 1.0 : 0.0);
  a.row(n).setOnes();
  Eigen::VectorXd b = Eigen::VectorXd::Zero(n + 1);
  b(n) = 1.0;
  const Eigen::VectorXd mu = a.colPivHouseholderQr().solve(b);
  return {mu.data(), mu.data() + n};
}

}  // namespace otsafe::testing
