#pragma once

// Discrete optimal transport between two probability vectors: a log-domain
// Sinkhorn solver for the entropy-regularized problem, an exact
// successive-shortest-path solver for small supports, and W_p.

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>
#include <vector>

#include "otsafe/core.hpp"

namespace otsafe {

/// Nonnegative ground-cost matrix.
class CostMatrix {
 public:
  CostMatrix() = default;
  explicit CostMatrix(Matrix entries) : m_(std::move(entries)) {
    for (double c : m_.data()) {
      require(std::isfinite(c), Errc::NonFiniteInput, "cost entry is not finite");
      require(c >= 0.0, Errc::InvalidArgument, "cost entry is negative");
    }
  }

  std::size_t rows() const noexcept { return m_.rows(); }
  std::size_t cols() const noexcept { return m_.cols(); }
  double operator()(std::size_t i, std::size_t j) const { return m_(i, j); }
  const Matrix& matrix() const noexcept { return m_; }

 private:
  Matrix m_;
};

/// C_ij = 1 if i != j, 0 otherwise.
inline CostMatrix zero_one_cost(std::size_t n) {
  Matrix m(n, n, 1.0);
  for (std::size_t i = 0; i < n; ++i) m(i, i) = 0.0;
  return CostMatrix(std::move(m));
}

struct SinkhornConfig {
  double epsilon = 0.01;
  int max_iterations = 1000;
  double convergence_tol = 1e-9;

  void validate() const {
    require(epsilon > 0.0 && std::isfinite(epsilon), Errc::InvalidArgument, "sinkhorn epsilon must be > 0");
    require(max_iterations > 0, Errc::InvalidArgument, "sinkhorn max_iterations must be > 0");
    require(convergence_tol > 0.0, Errc::InvalidArgument, "sinkhorn convergence_tol must be > 0");
  }
};

enum class OtMode { Oracle, Sinkhorn };

struct TransportPlan {
  Matrix entries;
  ProbVec source_marginal;
  ProbVec target_marginal;

  double row_violation() const {
    double v = 0.0;
    for (std::size_t i = 0; i < entries.rows(); ++i)
      v = std::max(v, std::abs(entries.row_sum(i) - source_marginal[i]));
    return v;
  }
  double col_violation() const {
    double v = 0.0;
    for (std::size_t j = 0; j < entries.cols(); ++j)
      v = std::max(v, std::abs(entries.col_sum(j) - target_marginal[j]));
    return v;
  }
};

struct TransportResult {
  TransportPlan plan;
  double cost = 0.0;  // <P, C>, without any entropy term
};

namespace detail {

inline void check_shapes(const ProbVec& mu, const ProbVec& nu, const CostMatrix& cost) {
  if (mu.size() != cost.rows() || nu.size() != cost.cols())
    throw Error(Errc::DimensionMismatch, "marginals " + std::to_string(mu.size()) + "x" +
                                             std::to_string(nu.size()) + " vs cost " +
                                             std::to_string(cost.rows()) + "x" + std::to_string(cost.cols()));
}

inline double linear_cost(const Matrix& plan, const CostMatrix& cost) {
  double c = 0.0;
  for (std::size_t i = 0; i < plan.rows(); ++i)
    for (std::size_t j = 0; j < plan.cols(); ++j) c += plan(i, j) * cost(i, j);
  return c;
}

inline double log_or_neg_inf(double x) {
  return x > 0.0 ? std::log(x) : -std::numeric_limits<double>::infinity();
}

// log(sum_k exp(v_k)); -inf when every term is -inf.
template <class F>
double log_sum_exp(std::size_t n, F&& term) {
  double hi = -std::numeric_limits<double>::infinity();
  for (std::size_t k = 0; k < n; ++k) hi = std::max(hi, term(k));
  if (!std::isfinite(hi)) return hi;
  double s = 0.0;
  for (std::size_t k = 0; k < n; ++k) s += std::exp(term(k) - hi);
  return hi + std::log(s);
}

}  // namespace detail

/// Entropy-regularized OT by log-domain Sinkhorn scaling.
///
/// Dual potentials f (rows) and g (columns) are updated alternately; the row
/// update runs last, and the plan is finally rescaled so that its row sums
/// reproduce mu exactly. Convergence is declared on the column marginal
/// violation. Zero-mass entries produce zero rows/columns in the plan.
inline TransportResult sinkhorn(const ProbVec& mu, const ProbVec& nu, const CostMatrix& cost,
                                const SinkhornConfig& cfg = {}) {
  detail::check_shapes(mu, nu, cost);
  cfg.validate();

  const std::size_t n = mu.size();
  const std::size_t m = nu.size();
  const double eps = cfg.epsilon;

  std::vector<double> log_a(n), log_b(m);
  for (std::size_t i = 0; i < n; ++i) log_a[i] = detail::log_or_neg_inf(mu[i]);
  for (std::size_t j = 0; j < m; ++j) log_b[j] = detail::log_or_neg_inf(nu[j]);

  std::vector<double> f(n, 0.0), g(m, 0.0);
  Matrix plan(n, m);
  auto fill_plan = [&] {
    for (std::size_t i = 0; i < n; ++i)
      for (std::size_t j = 0; j < m; ++j) plan(i, j) = std::exp((f[i] + g[j] - cost(i, j)) / eps);
  };

  double violation = std::numeric_limits<double>::infinity();
  for (int it = 0; it < cfg.max_iterations; ++it) {
    for (std::size_t j = 0; j < m; ++j) {
      if (!std::isfinite(log_b[j])) {
        g[j] = -std::numeric_limits<double>::infinity();
        continue;
      }
      g[j] = eps * (log_b[j] - detail::log_sum_exp(n, [&](std::size_t i) { return (f[i] - cost(i, j)) / eps; }));
    }
    for (std::size_t i = 0; i < n; ++i) {
      if (!std::isfinite(log_a[i])) {
        f[i] = -std::numeric_limits<double>::infinity();
        continue;
      }
      f[i] = eps * (log_a[i] - detail::log_sum_exp(m, [&](std::size_t j) { return (g[j] - cost(i, j)) / eps; }));
    }
    fill_plan();
    violation = 0.0;
    for (std::size_t j = 0; j < m; ++j) violation = std::max(violation, std::abs(plan.col_sum(j) - nu[j]));
    if (violation <= cfg.convergence_tol) break;
  }
  if (!(violation <= cfg.convergence_tol))
    throw Error(Errc::NonConvergence, "marginal violation " + std::to_string(violation) + " after " +
                                          std::to_string(cfg.max_iterations) + " iterations (epsilon " +
                                          std::to_string(eps) + ")");

  for (std::size_t i = 0; i < n; ++i) {
    const double rs = plan.row_sum(i);
    if (rs > 0.0)
      for (double& x : plan.row(i)) x *= mu[i] / rs;
  }

  TransportResult out{TransportPlan{plan, mu, nu}, 0.0};
  out.cost = detail::linear_cost(out.plan.entries, cost);
  return out;
}

/// Largest support the exact solver accepts on either side.
inline constexpr std::size_t kExactOtMaxSupport = 12;

/// Exact solution of the unregularized transport LP by successive shortest
/// paths (Bellman-Ford on the residual network). Intended as an oracle for
/// small supports.
inline TransportResult exact_ot(const ProbVec& mu, const ProbVec& nu, const CostMatrix& cost) {
  detail::check_shapes(mu, nu, cost);
  const std::size_t n = mu.size();
  const std::size_t m = nu.size();
  if (n > kExactOtMaxSupport || m > kExactOtMaxSupport)
    throw Error(Errc::SupportTooLarge, "exact_ot supports at most " + std::to_string(kExactOtMaxSupport) + " points");

  // Node layout: 0 = source, 1..n rows, n+1..n+m columns, n+m+1 = sink.
  struct Edge {
    int to;
    double cap;
    double cost;
  };
  const int source = 0;
  const int sink = static_cast<int>(n + m + 1);
  const int nodes = sink + 1;
  std::vector<Edge> edges;
  std::vector<std::vector<int>> adj(static_cast<std::size_t>(nodes));
  auto add_edge = [&](int u, int v, double cap, double c) {
    adj[static_cast<std::size_t>(u)].push_back(static_cast<int>(edges.size()));
    edges.push_back({v, cap, c});
    adj[static_cast<std::size_t>(v)].push_back(static_cast<int>(edges.size()));
    edges.push_back({u, 0.0, -c});
  };
  for (std::size_t i = 0; i < n; ++i) add_edge(source, static_cast<int>(1 + i), mu[i], 0.0);
  std::vector<int> middle(n * m);
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < m; ++j) {
      middle[i * m + j] = static_cast<int>(edges.size());
      add_edge(static_cast<int>(1 + i), static_cast<int>(1 + n + j), 2.0, cost(i, j));
    }
  for (std::size_t j = 0; j < m; ++j) add_edge(static_cast<int>(1 + n + j), sink, nu[j], 0.0);

  constexpr double kCapEps = 1e-15;
  const double inf = std::numeric_limits<double>::infinity();
  std::vector<double> dist(static_cast<std::size_t>(nodes));
  std::vector<int> via(static_cast<std::size_t>(nodes));
  for (int round = 0; round < 10000; ++round) {
    std::fill(dist.begin(), dist.end(), inf);
    std::fill(via.begin(), via.end(), -1);
    dist[source] = 0.0;
    for (int pass = 0; pass < nodes; ++pass) {
      bool changed = false;
      for (int u = 0; u < nodes; ++u) {
        if (dist[static_cast<std::size_t>(u)] == inf) continue;
        for (int e : adj[static_cast<std::size_t>(u)]) {
          const Edge& ed = edges[static_cast<std::size_t>(e)];
          if (ed.cap <= kCapEps) continue;
          const double nd = dist[static_cast<std::size_t>(u)] + ed.cost;
          if (nd < dist[static_cast<std::size_t>(ed.to)] - 1e-15) {
            dist[static_cast<std::size_t>(ed.to)] = nd;
            via[static_cast<std::size_t>(ed.to)] = e;
            changed = true;
          }
        }
      }
      if (!changed) break;
    }
    if (dist[static_cast<std::size_t>(sink)] == inf) break;

    double push = inf;
    for (int v = sink; v != source;) {
      const int e = via[static_cast<std::size_t>(v)];
      push = std::min(push, edges[static_cast<std::size_t>(e)].cap);
      v = edges[static_cast<std::size_t>(e ^ 1)].to;
    }
    for (int v = sink; v != source;) {
      const int e = via[static_cast<std::size_t>(v)];
      edges[static_cast<std::size_t>(e)].cap -= push;
      edges[static_cast<std::size_t>(e ^ 1)].cap += push;
      v = edges[static_cast<std::size_t>(e ^ 1)].to;
    }
  }

  Matrix plan(n, m);
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < m; ++j)
      plan(i, j) = edges[static_cast<std::size_t>(middle[i * m + j] ^ 1)].cap;

  TransportResult out{TransportPlan{plan, mu, nu}, 0.0};
  out.cost = detail::linear_cost(plan, cost);
  return out;
}

/// W_p = <P, C>^(1/p), with P from Sinkhorn or (OtMode::Oracle) the exact LP.
inline double wasserstein_distance(const ProbVec& mu, const ProbVec& nu, const CostMatrix& cost, int p,
                                   const SinkhornConfig& cfg = {}, OtMode mode = OtMode::Sinkhorn) {
  require(p >= 1, Errc::InvalidArgument, "p must be >= 1");
  const double c = mode == OtMode::Oracle ? exact_ot(mu, nu, cost).cost : sinkhorn(mu, nu, cost, cfg).cost;
  return p == 1 ? c : std::pow(c, 1.0 / static_cast<double>(p));
}

}  // namespace otsafe
