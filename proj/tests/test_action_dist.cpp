#include <gtest/gtest.h>

#include <sstream>

#include "otsafe/action_dist.hpp"
#include "support.hpp"

using namespace otsafe;

namespace {

void expect_probs(const ProbVec& p, std::initializer_list<double> want, double tol = 1e-12) {
  ASSERT_EQ(p.size(), want.size());
  std::size_t i = 0;
  for (double w : want) EXPECT_NEAR(p[i++], w, tol) << "entry " << i - 1;
}

}  // namespace

TEST(Normalize, ConstantInputIsUniform) {
  const std::vector<double> raw{5, 5, 5, 5};
  expect_probs(normalize_values(raw), {0.25, 0.25, 0.25, 0.25});
}

TEST(Normalize, ShiftsByMinimum) {
  const std::vector<double> a{-1, 0, 1};
  expect_probs(normalize_values(a), {0.0, 1.0 / 3, 2.0 / 3});
  const std::vector<double> b{0.2, 0.3, 0.1, 0.4};
  expect_probs(normalize_values(b), {1.0 / 6, 1.0 / 3, 0.0, 0.5});
}

TEST(Normalize, RejectsNonFiniteAndEmpty) {
  const std::vector<double> bad{1.0, std::nan("")};
  try {
    normalize_values(bad);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), Errc::NonFiniteInput);
  }
  const std::vector<double> inf{1.0, INFINITY};
  EXPECT_THROW(normalize_values(inf), Error);
  EXPECT_THROW(normalize_values(std::vector<double>{}), Error);
}

TEST(Normalize, AlwaysValidAndInvariantToAffineMaps) {
  Rng rng(21);
  std::uniform_real_distribution<double> val(-100.0, 100.0), scale(0.01, 50.0);
  for (int k = 0; k < 500; ++k) {
    std::vector<double> raw(1 + static_cast<std::size_t>(k % 8));
    for (double& x : raw) x = val(rng);
    const ProbVec p = normalize_values(raw);
    const double c = scale(rng), d = val(rng);
    std::vector<double> moved(raw);
    for (double& x : moved) x = c * x + d;
    const ProbVec p2 = normalize_values(moved);
    for (std::size_t i = 0; i < raw.size(); ++i) {
      EXPECT_GE(p[i], 0.0);
      EXPECT_NEAR(p[i], p2[i], 1e-9);
    }
    EXPECT_EQ(std::max_element(p.begin(), p.end()) - p.begin(), std::max_element(raw.begin(), raw.end()) - raw.begin());
  }
}

TEST(QDistribution, Examples) {
  QTable q(3, 3);
  expect_probs(q_distribution(q, 1, 3), {1.0 / 3, 1.0 / 3, 1.0 / 3});
  q(0, 0) = -2, q(0, 1) = -1, q(0, 2) = -1;
  expect_probs(q_distribution(q, 0, 3), {0.0, 0.5, 0.5});
  QTable two(1, 2);
  two(0, 0) = 1;
  expect_probs(q_distribution(two, 0, 2), {1.0, 0.0});
  try {
    q_distribution(q, 0, 4);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), Errc::DimensionMismatch);
  }
}

TEST(TDistribution, MirrorsQDistribution) {
  TargetBuffer buf(2, 3, 7.0);
  expect_probs(t_distribution(buf, 0, 3), {1.0 / 3, 1.0 / 3, 1.0 / 3});
  buf.store(1, 0, -2), buf.store(1, 1, -1), buf.store(1, 2, -1);
  expect_probs(t_distribution(buf, 1, 3), {0.0, 0.5, 0.5});
  TargetBuffer two(1, 2);
  two.store(0, 0, 1.0);
  expect_probs(t_distribution(two, 0, 2), {1.0, 0.0});
}

TEST(TargetBuffer, UnseenCellsKeepInitValue) {
  TargetBuffer buf(3, 2, 0.5);
  for (int s = 0; s < 3; ++s)
    for (int a = 0; a < 2; ++a) {
      EXPECT_FALSE(buf.seen(s, a));
      EXPECT_EQ(buf.value(s, a), 0.5);
    }
}

TEST(UpdateTarget, StoresRewardPlusDiscountedNext) {
  TargetBuffer buf(2, 2);
  update_target(buf, 0, 0, -1.0, 0.99, 0.0);
  EXPECT_EQ(buf.value(0, 0), -1.0);
  update_target(buf, 0, 1, 101.0, 0.99, 50.0);
  EXPECT_NEAR(buf.value(0, 1), 150.5, 1e-12);
}

TEST(UpdateTarget, LastWriteWinsAndTouchesOneCell) {
  TargetBuffer buf(2, 2);
  update_target(buf, 0, 0, 1.0, 0.9, 1.0);
  const TargetBuffer before = buf;
  update_target(buf, 0, 0, 3.0, 0.9, 0.0);
  EXPECT_EQ(buf.value(0, 0), 3.0);
  EXPECT_TRUE(buf.seen(0, 0));
  for (auto [s, a] : {std::pair{0, 1}, {1, 0}, {1, 1}}) {
    EXPECT_EQ(buf.value(s, a), before.value(s, a));
    EXPECT_EQ(buf.seen(s, a), before.seen(s, a));
  }
}

TEST(Normalization, JointShiftKeepsTargetsBelowEveryQVisible) {
  QTable q(1, 3);
  TargetBuffer buf(1, 3);
  q(0, 0) = 1, q(0, 1) = 2, q(0, 2) = 3;
  buf.store(0, 0, -1), buf.store(0, 1, 2), buf.store(0, 2, 3);
  const auto joint = action_distributions(q, buf, 0, Normalization::JointShiftMin);
  // Common floor is -1: q -> (2, 3, 4) / 9, t -> (0, 3, 4) / 7.
  expect_probs(joint.q_dist, {2.0 / 9, 3.0 / 9, 4.0 / 9});
  expect_probs(joint.t_dist, {0.0, 3.0 / 7, 4.0 / 7});
  const auto own = action_distributions(q, buf, 0, Normalization::ShiftMin);
  expect_probs(own.q_dist, {0.0, 1.0 / 3, 2.0 / 3});
  expect_probs(own.t_dist, {0.0, 3.0 / 7, 4.0 / 7});
  EXPECT_EQ(parse_normalization(to_string(Normalization::JointShiftMin)), Normalization::JointShiftMin);
  EXPECT_THROW(parse_normalization("softmax"), Error);
}

TEST(TableCsv, WritesEveryCell) {
  QTable q(2, 2);
  q(1, 0) = 0.25;
  std::ostringstream os;
  write_csv(os, q);
  EXPECT_EQ(os.str(), "state,action,value\n0,0,0\n0,1,0\n1,0,0.25\n1,1,0\n");
  TargetBuffer buf(1, 1);
  buf.store(0, 0, -1);
  std::ostringstream ob;
  write_csv(ob, buf);
  EXPECT_EQ(ob.str(), "state,action,value\n0,0,-1\n");
}
