#pragma once

// Quick oracle-agreement and invariant checks, runnable from the CLI on the
// target machine. The full suites live under tests/.

#include <functional>
#include <ostream>
#include <string>
#include <vector>

#include "otsafe/agents.hpp"
#include "otsafe/chain.hpp"
#include "otsafe/ot.hpp"
#include "otsafe/uncertainty.hpp"

namespace otsafe {

struct SelftestCase {
  std::string name;
  std::function<std::string()> run;  // empty string on success, else a reason
};

namespace selftest_detail {

inline ProbVec random_probvec(std::size_t n, Rng& rng) {
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  std::vector<double> w(n);
  double total = 0.0;
  for (double& x : w) total += (x = unit(rng));
  for (double& x : w) x /= total;
  return ProbVec(std::move(w));
}

inline double total_variation(const ProbVec& a, const ProbVec& b) {
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) s += std::abs(a[i] - b[i]);
  return s / 2.0;
}

}  // namespace selftest_detail

inline std::vector<SelftestCase> selftest_cases() {
  using namespace selftest_detail;
  std::vector<SelftestCase> cases;

  cases.push_back({"exact OT equals total variation under 0-1 cost", [] {
                     Rng rng(11);
                     for (int k = 0; k < 200; ++k) {
                       const std::size_t n = 2 + static_cast<std::size_t>(k % 7);
                       const auto mu = random_probvec(n, rng), nu = random_probvec(n, rng);
                       const double gap = std::abs(exact_ot(mu, nu, zero_one_cost(n)).cost - total_variation(mu, nu));
                       if (gap > 1e-12) return "gap " + std::to_string(gap);
                     }
                     return std::string{};
                   }});
  cases.push_back({"sinkhorn cost within 0.02 of total variation", [] {
                     Rng rng(12);
                     SinkhornConfig cfg{0.005, 1000000, 1e-9};
                     for (int k = 0; k < 100; ++k) {
                       const std::size_t n = 2 + static_cast<std::size_t>(k % 7);
                       const auto mu = random_probvec(n, rng), nu = random_probvec(n, rng);
                       const double gap = std::abs(sinkhorn(mu, nu, zero_one_cost(n), cfg).cost - total_variation(mu, nu));
                       if (gap > 0.02) return "gap " + std::to_string(gap);
                     }
                     return std::string{};
                   }});
  cases.push_back({"flow imbalance equals marginal difference", [] {
                     Rng rng(13);
                     for (int k = 0; k < 200; ++k) {
                       const std::size_t n = 2 + static_cast<std::size_t>(k % 7);
                       const auto mu = random_probvec(n, rng), nu = random_probvec(n, rng);
                       const auto d = flow_imbalance(exact_ot(mu, nu, zero_one_cost(n)).plan);
                       for (std::size_t i = 0; i < n; ++i)
                         if (std::abs(d[i] - std::abs(mu[i] - nu[i])) > 1e-12) return std::string("mismatch");
                     }
                     return std::string{};
                   }});
  cases.push_back({"uncertainty scores sum to 2", [] {
                     Rng rng(14);
                     OtSettings ot;
                     for (int k = 0; k < 200; ++k) {
                       const std::size_t n = 2 + static_cast<std::size_t>(k % 7);
                       const auto s = uncertainty_scores({random_probvec(n, rng), random_probvec(n, rng)}, ot);
                       if (s.total <= ot.guard) continue;
                       double sum = 0.0;
                       for (double x : s.u) sum += x;
                       if (std::abs(sum - 2.0) > 1e-9) return "sum " + std::to_string(sum);
                     }
                     return std::string{};
                   }});
  cases.push_back({"penalized selection prefers the low-uncertainty action", [] {
                     Rng rng(15);
                     const std::vector<double> q{0.2, 0.3, 0.1, 0.4}, u{0.21, 0.37, 0.78, 0.62};
                     if (select_eps_greedy(q, 0.0, rng) != 3) return std::string("plain selector");
                     if (select_ot_guided(q, u, 0.5, 0.0, rng) != 1) return std::string("penalized selector");
                     return std::string{};
                   }});
  cases.push_back({"stationary distribution of a two-state chain", [] {
                     Matrix p(2, 2);
                     p(0, 0) = 0.9, p(0, 1) = 0.1, p(1, 0) = 0.5, p(1, 1) = 0.5;
                     const auto r = stationary_distribution(p);
                     if (std::abs(r.distribution[0] - 5.0 / 6.0) > 1e-8) return std::string("wrong fixed point");
                     return std::string{};
                   }});
  return cases;
}

/// Prints one PASS/FAIL line per case; returns true when all pass.
inline bool run_selftest(std::ostream& os) {
  bool ok = true;
  for (const auto& c : selftest_cases()) {
    std::string why;
    try {
      why = c.run();
    } catch (const std::exception& e) {
      why = e.what();
    }
    os << (why.empty() ? "PASS " : "FAIL ") << c.name << (why.empty() ? "" : " (" + why + ")") << '\n';
    ok = ok && why.empty();
  }
  return ok;
}

}  // namespace otsafe
