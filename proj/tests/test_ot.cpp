#include <gtest/gtest.h>

#include "otsafe/ot.hpp"
#include "support.hpp"

using namespace otsafe;
using otsafe::testing::random_probvec;
using otsafe::testing::total_variation;

namespace {

CostMatrix cost2(double a, double b, double c, double d) {
  Matrix m(2, 2);
  m(0, 0) = a, m(0, 1) = b, m(1, 0) = c, m(1, 1) = d;
  return CostMatrix(m);
}

// Two-point transportation: the plan is fixed by P00 = t on an interval and
// the cost is linear in t, so the optimum sits at an endpoint.
double two_by_two_optimum(const ProbVec& mu, const ProbVec& nu, const CostMatrix& c) {
  auto cost_at = [&](double t) {
    return t * c(0, 0) + (mu[0] - t) * c(0, 1) + (nu[0] - t) * c(1, 0) + (mu[1] - nu[0] + t) * c(1, 1);
  };
  const double lo = std::max(0.0, mu[0] - nu[1]), hi = std::min(mu[0], nu[0]);
  return std::min(cost_at(lo), cost_at(hi));
}

const SinkhornConfig kTight{0.005, 2000000, 1e-9};

}  // namespace

TEST(ProbVec, RejectsInvalidInput) {
  EXPECT_THROW(ProbVec(std::vector<double>{}), Error);
  EXPECT_THROW((ProbVec{0.5, 0.6}), Error);
  EXPECT_THROW((ProbVec{1.2, -0.2}), Error);
  try {
    ProbVec{std::nan(""), 1.0};
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), Errc::NonFiniteInput);
  }
  EXPECT_NO_THROW((ProbVec{0.5, 0.5 + 5e-10}));
}

TEST(CostMatrix, RejectsNegativeAndNonFinite) {
  EXPECT_THROW(cost2(0, -1, 1, 0), Error);
  EXPECT_THROW(cost2(0, INFINITY, 1, 0), Error);
  const auto c = zero_one_cost(3);
  for (std::size_t i = 0; i < 3; ++i)
    for (std::size_t j = 0; j < 3; ++j) EXPECT_EQ(c(i, j), i == j ? 0.0 : 1.0);
}

TEST(Sinkhorn, EqualMarginalsGiveNearDiagonalPlan) {
  const ProbVec mu{0.5, 0.5};
  const auto r = sinkhorn(mu, mu, zero_one_cost(2), {0.01, 1000, 1e-9});
  EXPECT_LE(r.cost, 0.01);
  EXPECT_NEAR(r.plan.entries(0, 0), 0.5, 0.01);
  EXPECT_NEAR(r.plan.entries(1, 1), 0.5, 0.01);
  EXPECT_NEAR(exact_ot(mu, mu, zero_one_cost(2)).cost, 0.0, 1e-15);
}

TEST(Sinkhorn, DisjointPointMassesMoveEverything) {
  const auto r = sinkhorn(ProbVec{1.0, 0.0}, ProbVec{0.0, 1.0}, zero_one_cost(2));
  EXPECT_GE(r.cost, 0.99);
  EXPECT_LE(r.cost, 1.0 + 1e-12);
}

TEST(Sinkhorn, MatchesTotalVariationOnTwoPoints) {
  const ProbVec mu{0.7, 0.3}, nu{0.4, 0.6};
  const auto r = sinkhorn(mu, nu, zero_one_cost(2), {0.005, 1000, 1e-9});
  EXPECT_NEAR(r.cost, total_variation(mu, nu), 0.02);
}

TEST(Sinkhorn, ErrorsAreTyped) {
  try {
    sinkhorn(ProbVec{0.5, 0.5}, ProbVec{0.2, 0.3, 0.5}, zero_one_cost(2));
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), Errc::DimensionMismatch);
  }
  try {
    sinkhorn(ProbVec{0.9, 0.05, 0.05}, ProbVec{0.05, 0.05, 0.9}, zero_one_cost(3), {0.001, 3, 1e-12});
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), Errc::NonConvergence);
  }
  EXPECT_THROW(sinkhorn(ProbVec{1.0}, ProbVec{1.0}, zero_one_cost(1), {0.0, 10, 1e-9}), Error);
}

TEST(Sinkhorn, PlanIsStrictlyPositiveAndMeetsMarginals) {
  Rng rng(1);
  for (int k = 0; k < 200; ++k) {
    const std::size_t n = 2 + static_cast<std::size_t>(k % 7);
    const auto mu = random_probvec(n, rng), nu = random_probvec(n, rng);
    const SinkhornConfig cfg{0.05, 100000, 1e-9};
    const auto r = sinkhorn(mu, nu, zero_one_cost(n), cfg);
    for (double x : r.plan.entries.data()) EXPECT_GT(x, 0.0);
    EXPECT_LE(r.plan.row_violation(), 1e-12);
    EXPECT_LE(r.plan.col_violation(), cfg.convergence_tol);
  }
}

TEST(Sinkhorn, ZeroMassEntriesGiveZeroRowsAndColumns) {
  const ProbVec mu{0.6, 0.0, 0.4}, nu{0.0, 0.5, 0.5};
  const auto r = sinkhorn(mu, nu, zero_one_cost(3), kTight);
  for (std::size_t j = 0; j < 3; ++j) EXPECT_EQ(r.plan.entries(1, j), 0.0);
  for (std::size_t i = 0; i < 3; ++i) EXPECT_EQ(r.plan.entries(i, 0), 0.0);
  EXPECT_NEAR(r.cost, total_variation(mu, nu), 0.02);
}

TEST(Sinkhorn, AgreesWithTotalVariationOnRandomPairs) {
  Rng rng(2);
  std::uniform_int_distribution<std::size_t> size(2, 8);
  for (int k = 0; k < 500; ++k) {
    const std::size_t n = size(rng);
    const auto mu = random_probvec(n, rng), nu = random_probvec(n, rng);
    EXPECT_NEAR(sinkhorn(mu, nu, zero_one_cost(n), kTight).cost, total_variation(mu, nu), 0.02);
  }
}

TEST(Sinkhorn, SymmetricUnderSymmetricCost) {
  Rng rng(3);
  for (int k = 0; k < 100; ++k) {
    const std::size_t n = 2 + static_cast<std::size_t>(k % 7);
    const auto mu = random_probvec(n, rng), nu = random_probvec(n, rng);
    const SinkhornConfig cfg{0.01, 1000000, 1e-9};
    const double ab = wasserstein_distance(mu, nu, zero_one_cost(n), 1, cfg);
    const double ba = wasserstein_distance(nu, mu, zero_one_cost(n), 1, cfg);
    EXPECT_LE(std::abs(ab - ba), 2 * cfg.convergence_tol) << "pair " << k;
  }
}

TEST(Sinkhorn, LinearCostGrowsWithRegularization) {
  Rng rng(4);
  for (int k = 0; k < 20; ++k) {
    const std::size_t n = 2 + static_cast<std::size_t>(k % 4);
    const auto mu = random_probvec(n, rng), nu = random_probvec(n, rng);
    const double sharp = sinkhorn(mu, nu, zero_one_cost(n), {0.001, 10000000, 1e-9}).cost;
    const double smooth = sinkhorn(mu, nu, zero_one_cost(n), {0.1, 100000, 1e-9}).cost;
    EXPECT_LE(sharp, smooth + 1e-6);
  }
}

TEST(Sinkhorn, ApproachesExactCostOnGeneralCosts) {
  Rng rng(5);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  for (int k = 0; k < 100; ++k) {
    const std::size_t n = 2 + static_cast<std::size_t>(k % 5);
    Matrix c(n, n);
    for (double& x : c.data()) x = unit(rng);
    const CostMatrix cost(c);
    const auto mu = random_probvec(n, rng), nu = random_probvec(n, rng);
    EXPECT_NEAR(sinkhorn(mu, nu, cost, kTight).cost, exact_ot(mu, nu, cost).cost, 0.02);
  }
}

TEST(ExactOt, IdentityCouplingForEqualMarginals) {
  const ProbVec mu{0.1, 0.2, 0.3, 0.4};
  Matrix c(4, 4, 3.0);
  for (std::size_t i = 0; i < 4; ++i) c(i, i) = 0.0;
  const auto r = exact_ot(mu, mu, CostMatrix(c));
  EXPECT_NEAR(r.cost, 0.0, 1e-15);
  for (std::size_t i = 0; i < 4; ++i)
    for (std::size_t j = 0; j < 4; ++j) EXPECT_NEAR(r.plan.entries(i, j), i == j ? mu[i] : 0.0, 1e-15);
}

TEST(ExactOt, TwoPointTotalVariation) {
  EXPECT_NEAR(exact_ot(ProbVec{0.7, 0.3}, ProbVec{0.4, 0.6}, zero_one_cost(2)).cost, 0.3, 1e-12);
}

TEST(ExactOt, AsymmetricTwoByTwo) {
  const auto r = exact_ot(ProbVec{0.5, 0.5}, ProbVec{0.25, 0.75}, cost2(0, 1, 2, 0));
  EXPECT_NEAR(r.cost, 0.25, 1e-12);
  EXPECT_NEAR(r.plan.entries(0, 0), 0.25, 1e-12);
  EXPECT_NEAR(r.plan.entries(0, 1), 0.25, 1e-12);
  EXPECT_NEAR(r.plan.entries(1, 0), 0.0, 1e-12);
  EXPECT_NEAR(r.plan.entries(1, 1), 0.5, 1e-12);
}

TEST(ExactOt, MatchesVertexEnumerationOnRandomTwoByTwo) {
  Rng rng(6);
  std::uniform_real_distribution<double> unit(0.0, 5.0);
  for (int k = 0; k < 300; ++k) {
    const auto mu = random_probvec(2, rng), nu = random_probvec(2, rng);
    const auto c = cost2(unit(rng), unit(rng), unit(rng), unit(rng));
    EXPECT_NEAR(exact_ot(mu, nu, c).cost, two_by_two_optimum(mu, nu, c), 1e-12);
  }
}

TEST(ExactOt, EqualsTotalVariationUnderZeroOneCost) {
  Rng rng(7);
  for (int k = 0; k < 500; ++k) {
    const std::size_t n = 1 + static_cast<std::size_t>(k % 12);
    const auto mu = random_probvec(n, rng, true), nu = random_probvec(n, rng, true);
    const auto r = exact_ot(mu, nu, zero_one_cost(n));
    EXPECT_NEAR(r.cost, total_variation(mu, nu), 1e-12);
    EXPECT_LE(r.plan.row_violation(), 1e-12);
    EXPECT_LE(r.plan.col_violation(), 1e-12);
    for (double x : r.plan.entries.data()) EXPECT_GE(x, 0.0);
  }
}

TEST(ExactOt, RectangularSupports) {
  Matrix c(2, 3);
  c(0, 0) = 0, c(0, 1) = 1, c(0, 2) = 2, c(1, 0) = 2, c(1, 1) = 1, c(1, 2) = 0;
  const auto r = exact_ot(ProbVec{0.5, 0.5}, ProbVec{0.25, 0.5, 0.25}, CostMatrix(c));
  // 0.25 stays at cost 0 from each side; the middle column costs 1 per unit.
  EXPECT_NEAR(r.cost, 0.5, 1e-12);
}

TEST(ExactOt, RejectsLargeSupports) {
  const auto big = ProbVec::uniform(13);
  try {
    exact_ot(big, big, zero_one_cost(13));
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), Errc::SupportTooLarge);
  }
  try {
    exact_ot(ProbVec::uniform(3), ProbVec::uniform(2), zero_one_cost(3));
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), Errc::DimensionMismatch);
  }
}

TEST(Wasserstein, SelfDistanceIsZero) {
  const ProbVec mu{0.1, 0.2, 0.3, 0.4};
  EXPECT_NEAR(wasserstein_distance(mu, mu, zero_one_cost(4), 1), 0.0, 0.02);
}

TEST(Wasserstein, DisjointPointMasses) {
  EXPECT_NEAR(wasserstein_distance(ProbVec{1, 0, 0, 0}, ProbVec{0, 0, 0, 1}, zero_one_cost(4), 1), 1.0, 0.02);
}

TEST(Wasserstein, UniformAgainstRampOracle) {
  const ProbVec mu{0.25, 0.25, 0.25, 0.25}, nu{0.1, 0.2, 0.3, 0.4};
  EXPECT_NEAR(wasserstein_distance(mu, nu, zero_one_cost(4), 1, {}, OtMode::Oracle), 0.2, 1e-12);
  EXPECT_NEAR(wasserstein_distance(mu, nu, zero_one_cost(4), 1, kTight), 0.2, 0.02);
}

TEST(Wasserstein, PowerTakesRoot) {
  const ProbVec mu{0.7, 0.3}, nu{0.4, 0.6};
  EXPECT_NEAR(wasserstein_distance(mu, nu, zero_one_cost(2), 2, {}, OtMode::Oracle), std::sqrt(0.3), 1e-12);
  EXPECT_THROW(wasserstein_distance(mu, nu, zero_one_cost(2), 0), Error);
}
