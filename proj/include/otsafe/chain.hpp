#pragma once

// Markov chains induced by fixed policies on explicit finite MDPs, their
// stationary distributions, and the unsafe-visitation ratio between plain
// and OT-penalized epsilon-greedy policies.

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <string>
#include <vector>

#include <json.hpp>

#include "otsafe/action_dist.hpp"
#include "otsafe/core.hpp"
#include "otsafe/envs.hpp"

namespace otsafe {

/// Finite MDP with dense dynamics T(s' | s, a).
class ExplicitMDP {
 public:
  ExplicitMDP() = default;
  ExplicitMDP(int n_states, int n_actions, double discount = 0.99)
      : n_states_(n_states), n_actions_(n_actions), discount_(discount),
        transition_(static_cast<std::size_t>(n_states) * static_cast<std::size_t>(n_actions) *
                        static_cast<std::size_t>(n_states),
                    0.0),
        reward_(static_cast<std::size_t>(n_states), static_cast<std::size_t>(n_actions)) {
    require(n_states > 0 && n_actions > 0, Errc::InvalidArgument, "MDP dimensions must be positive");
  }

  int n_states() const noexcept { return n_states_; }
  int n_actions() const noexcept { return n_actions_; }
  double discount() const noexcept { return discount_; }
  void set_discount(double g) { discount_ = g; }

  double& t(int s, int a, int next) { return transition_[flat(s, a, next)]; }
  double t(int s, int a, int next) const { return transition_[flat(s, a, next)]; }
  std::span<const double> slice(int s, int a) const {
    return {transition_.data() + flat(s, a, 0), static_cast<std::size_t>(n_states_)};
  }

  double& reward(int s, int a) { return reward_(static_cast<std::size_t>(s), static_cast<std::size_t>(a)); }
  double reward(int s, int a) const { return reward_(static_cast<std::size_t>(s), static_cast<std::size_t>(a)); }

  const std::vector<int>& unsafe() const noexcept { return unsafe_; }
  void set_unsafe(std::vector<int> states) {
    std::sort(states.begin(), states.end());
    states.erase(std::unique(states.begin(), states.end()), states.end());
    for (int s : states) require(s >= 0 && s < n_states_, Errc::InvalidArgument, "unsafe state out of range");
    unsafe_ = std::move(states);
  }

  /// Every T(.|s,a) must be a probability vector.
  void validate() const {
    for (int s = 0; s < n_states_; ++s)
      for (int a = 0; a < n_actions_; ++a) {
        try {
          ProbVec(std::vector<double>(slice(s, a).begin(), slice(s, a).end()));
        } catch (const Error& e) {
          throw Error(Errc::InvalidProbability,
                      "T(.|" + std::to_string(s) + "," + std::to_string(a) + "): " + e.what());
        }
      }
  }

 private:
  std::size_t flat(int s, int a, int next) const {
    return (static_cast<std::size_t>(s) * static_cast<std::size_t>(n_actions_) + static_cast<std::size_t>(a)) *
               static_cast<std::size_t>(n_states_) +
           static_cast<std::size_t>(next);
  }

  int n_states_ = 0;
  int n_actions_ = 0;
  double discount_ = 0.99;
  std::vector<double> transition_;
  Matrix reward_;
  std::vector<int> unsafe_;
};

struct StationaryResult {
  ProbVec distribution;
  long iterations = 0;
  double residual = 0.0;  // ||mu P - mu||_1 at exit
};

/// P(s'|s) = sum_a pi(a|s) T(s'|s,a). `policy` is n_states x n_actions.
inline Matrix induced_chain(const ExplicitMDP& mdp, const Matrix& policy) {
  require(policy.rows() == static_cast<std::size_t>(mdp.n_states()) &&
              policy.cols() == static_cast<std::size_t>(mdp.n_actions()),
          Errc::DimensionMismatch, "policy shape does not match the MDP");
  const auto n = static_cast<std::size_t>(mdp.n_states());
  Matrix p(n, n);
  for (int s = 0; s < mdp.n_states(); ++s) {
    const auto row = policy.row(static_cast<std::size_t>(s));
    try {
      ProbVec(std::vector<double>(row.begin(), row.end()));
    } catch (const Error& e) {
      throw Error(Errc::InvalidPolicy, "policy row " + std::to_string(s) + ": " + e.what());
    }
    for (int a = 0; a < mdp.n_actions(); ++a) {
      const double w = row[static_cast<std::size_t>(a)];
      if (w == 0.0) continue;
      const auto next = mdp.slice(s, a);
      for (std::size_t j = 0; j < n; ++j) p(static_cast<std::size_t>(s), j) += w * next[j];
    }
  }
  return p;
}

namespace detail {

// Tarjan SCC labels for the support graph of p.
inline std::vector<int> strong_components(const Matrix& p, int& count) {
  const int n = static_cast<int>(p.rows());
  std::vector<int> index(n, -1), low(n, 0), comp(n, -1), stack;
  std::vector<char> on_stack(n, 0);
  int next_index = 0;
  count = 0;
  // Iterative DFS: (node, next neighbour to try).
  std::vector<std::pair<int, int>> frames;
  for (int root = 0; root < n; ++root) {
    if (index[root] >= 0) continue;
    frames.push_back({root, 0});
    index[root] = low[root] = next_index++;
    stack.push_back(root);
    on_stack[root] = 1;
    while (!frames.empty()) {
      auto& [v, j] = frames.back();
      if (j < n) {
        const int w = j++;
        if (p(v, w) <= 0.0) continue;
        if (index[w] < 0) {
          index[w] = low[w] = next_index++;
          stack.push_back(w);
          on_stack[w] = 1;
          frames.push_back({w, 0});
        } else if (on_stack[w]) {
          low[v] = std::min(low[v], index[w]);
        }
        continue;
      }
      if (low[v] == index[v]) {
        for (;;) {
          const int w = stack.back();
          stack.pop_back();
          on_stack[w] = 0;
          comp[w] = count;
          if (w == v) break;
        }
        ++count;
      }
      const int done = v;
      frames.pop_back();
      if (!frames.empty()) low[frames.back().first] = std::min(low[frames.back().first], low[done]);
    }
  }
  return comp;
}

// Period of the class containing `members` (gcd of level differences).
inline int class_period(const Matrix& p, const std::vector<int>& comp, int label) {
  const int n = static_cast<int>(p.rows());
  std::vector<int> level(n, -1);
  int root = -1;
  for (int v = 0; v < n && root < 0; ++v)
    if (comp[v] == label) root = v;
  std::vector<int> queue{root};
  level[root] = 0;
  int g = 0;
  for (std::size_t head = 0; head < queue.size(); ++head) {
    const int v = queue[head];
    for (int w = 0; w < n; ++w) {
      if (p(v, w) <= 0.0 || comp[w] != label) continue;
      if (level[w] < 0) {
        level[w] = level[v] + 1;
        queue.push_back(w);
      } else {
        g = std::gcd(g, std::abs(level[v] + 1 - level[w]));
      }
    }
  }
  return g;
}

}  // namespace detail

/// Power iteration from the uniform vector until ||mu P - mu||_1 <= tol.
///
/// A chain whose recurrent part is not a single aperiodic class has no
/// limit from every start; that case is reported as NonConvergence up front
/// (the uniform start can be a fixed point of a periodic chain, so the
/// iteration alone would not notice).
inline StationaryResult stationary_distribution(const Matrix& p, double tol = 1e-10, long max_iter = 1000000) {
  require(p.square() && p.rows() > 0, Errc::DimensionMismatch, "transition matrix must be square and nonempty");
  const std::size_t n = p.rows();
  for (std::size_t i = 0; i < n; ++i) {
    for (double x : p.row(i)) require(std::isfinite(x) && x >= 0.0, Errc::InvalidProbability, "negative or non-finite transition");
    require(std::abs(p.row_sum(i) - 1.0) <= 1e-9, Errc::InvalidProbability, "row " + std::to_string(i) + " does not sum to 1");
  }

  int n_comp = 0;
  const auto comp = detail::strong_components(p, n_comp);
  std::vector<char> closed(static_cast<std::size_t>(n_comp), 1);
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < n; ++j)
      if (p(i, j) > 0.0 && comp[i] != comp[j]) closed[static_cast<std::size_t>(comp[i])] = 0;
  const auto n_closed = std::count(closed.begin(), closed.end(), 1);
  if (n_closed != 1)
    throw Error(Errc::NonConvergence, "chain has " + std::to_string(n_closed) + " closed classes");
  const int recurrent = static_cast<int>(std::find(closed.begin(), closed.end(), 1) - closed.begin());
  if (const int period = detail::class_period(p, comp, recurrent); period != 1)
    throw Error(Errc::NonConvergence, "chain is periodic with period " + std::to_string(period));

  std::vector<double> mu(n, 1.0 / static_cast<double>(n)), next(n);
  double residual = std::numeric_limits<double>::infinity();
  for (long it = 1; it <= max_iter; ++it) {
    std::fill(next.begin(), next.end(), 0.0);
    for (std::size_t i = 0; i < n; ++i) {
      if (mu[i] == 0.0) continue;
      for (std::size_t j = 0; j < n; ++j) next[j] += mu[i] * p(i, j);
    }
    residual = 0.0;
    double total = 0.0;
    for (std::size_t j = 0; j < n; ++j) {
      residual += std::abs(next[j] - mu[j]);
      total += next[j];
    }
    for (std::size_t j = 0; j < n; ++j) mu[j] = next[j] / total;
    if (residual <= tol) return {ProbVec(mu), it, residual};
  }
  throw Error(Errc::NonConvergence, "power iteration residual " + std::to_string(residual) + " after " +
                                        std::to_string(max_iter) + " iterations");
}

inline double unsafe_mass(const ProbVec& mu, const std::vector<int>& unsafe) {
  double m = 0.0;
  for (int s : unsafe) {
    require(s >= 0 && static_cast<std::size_t>(s) < mu.size(), Errc::InvalidArgument, "unsafe state out of range");
    m += mu[static_cast<std::size_t>(s)];
  }
  return m;
}

/// Epsilon-greedy policy matrix over `values` (n_states x n_actions); the
/// greedy share is split evenly among exact maximizers.
inline Matrix eps_greedy_policy(const Matrix& values, double epsilon) {
  require(epsilon >= 0.0 && epsilon <= 1.0, Errc::InvalidArgument, "epsilon must be in [0, 1]");
  Matrix pi(values.rows(), values.cols());
  const double explore = epsilon / static_cast<double>(values.cols());
  for (std::size_t s = 0; s < values.rows(); ++s) {
    const auto row = values.row(s);
    const double best = *std::max_element(row.begin(), row.end());
    const auto ties = static_cast<double>(std::count(row.begin(), row.end(), best));
    for (std::size_t a = 0; a < values.cols(); ++a)
      pi(s, a) = explore + (row[a] == best ? (1.0 - epsilon) / ties : 0.0);
  }
  return pi;
}

struct Theorem1Result {
  double c_hat = 1.0;  // mass_ot / mass_base, +inf when mass_base <= 1e-12
  double mass_base = 0.0;
  double mass_ot = 0.0;
};

inline constexpr double kMassFloor = 1e-12;

/// Long-run unsafe mass under epsilon-greedy on Q versus on Q - beta * U.
inline Theorem1Result theorem1_ratio(const ExplicitMDP& mdp, const Matrix& q, const Matrix& u, double epsilon,
                                     double beta, double tol = 1e-10, long max_iter = 1000000) {
  const auto shape_ok = [&](const Matrix& m) {
    return m.rows() == static_cast<std::size_t>(mdp.n_states()) && m.cols() == static_cast<std::size_t>(mdp.n_actions());
  };
  require(shape_ok(q) && shape_ok(u), Errc::DimensionMismatch, "Q/U shape does not match the MDP");
  require(beta >= 0.0, Errc::InvalidArgument, "beta must be >= 0");

  Matrix penalized = q;
  for (std::size_t i = 0; i < q.data().size(); ++i) penalized.data()[i] = q.data()[i] - beta * u.data()[i];
  const Matrix pi_base = eps_greedy_policy(q, epsilon);
  const Matrix pi_ot = eps_greedy_policy(penalized, epsilon);

  Theorem1Result r;
  r.mass_base = unsafe_mass(stationary_distribution(induced_chain(mdp, pi_base), tol, max_iter).distribution, mdp.unsafe());
  if (pi_ot == pi_base) {
    r.mass_ot = r.mass_base;
    r.c_hat = 1.0;
    return r;
  }
  r.mass_ot = unsafe_mass(stationary_distribution(induced_chain(mdp, pi_ot), tol, max_iter).distribution, mdp.unsafe());
  r.c_hat = r.mass_base <= kMassFloor ? std::numeric_limits<double>::infinity() : r.mass_ot / r.mass_base;
  return r;
}

/// Grid-world or cliff-walking layout as an explicit MDP on cells. Episode
/// ends are folded into the chain: every action from a terminal cell (goal,
/// cliff) returns to the start. Slippery rewards enter as their mean; the
/// step cap is dropped. Unsafe states are slippery cells (grid-world) or
/// cliff cells (cliff walking).
inline ExplicitMDP tabularize(const GridSpec& spec, double discount = 0.99) {
  require(spec.env != EnvName::Rover, Errc::InvalidArgument, "rover is partially observed; tabularize supports gridworld and cliffwalk");
  ExplicitMDP mdp(spec.n_cells(), 4, discount);
  const int start = spec.id(spec.start);
  std::vector<int> unsafe;
  Rng unused(0);
  for (int s = 0; s < spec.n_cells(); ++s) {
    const CellRole role = spec.role(s);
    if (role == CellRole::Slippery || role == CellRole::Cliff) unsafe.push_back(s);
    const bool terminal = role == CellRole::Goal || role == CellRole::Cliff;
    for (int a = 0; a < 4; ++a) {
      if (terminal) {
        mdp.t(s, a, start) = 1.0;
        continue;
      }
      StepOutcome o = spec.env == EnvName::GridWorld ? gridworld_step(s, a, spec, unused) : cliffwalk_step(s, a, spec, unused);
      if (spec.env == EnvName::GridWorld && spec.role(o.next) == CellRole::Slippery && o.next != s)
        o.reward = (kSlipperyRewardLo + kSlipperyRewardHi) / 2.0;
      mdp.t(s, a, o.next) = 1.0;
      mdp.reward(s, a) = o.reward;
    }
  }
  mdp.set_unsafe(std::move(unsafe));
  return mdp;
}

// JSON form: {"n_states", "n_actions", "discount", "transition": [s][a][s'],
// "reward": [s][a], "unsafe": [...]}.
inline nlohmann::json to_json(const ExplicitMDP& mdp) {
  nlohmann::json t = nlohmann::json::array(), r = nlohmann::json::array();
  for (int s = 0; s < mdp.n_states(); ++s) {
    nlohmann::json ts = nlohmann::json::array(), rs = nlohmann::json::array();
    for (int a = 0; a < mdp.n_actions(); ++a) {
      ts.push_back(std::vector<double>(mdp.slice(s, a).begin(), mdp.slice(s, a).end()));
      rs.push_back(mdp.reward(s, a));
    }
    t.push_back(std::move(ts));
    r.push_back(std::move(rs));
  }
  return {{"n_states", mdp.n_states()}, {"n_actions", mdp.n_actions()}, {"discount", mdp.discount()},
          {"transition", t}, {"reward", r}, {"unsafe", mdp.unsafe()}};
}

inline ExplicitMDP mdp_from_json(const nlohmann::json& j) {
  try {
    const int n = j.at("n_states").get<int>(), m = j.at("n_actions").get<int>();
    ExplicitMDP mdp(n, m, j.value("discount", 0.99));
    const auto& t = j.at("transition");
    require(t.size() == static_cast<std::size_t>(n), Errc::DimensionMismatch, "transition has wrong state count");
    for (int s = 0; s < n; ++s) {
      require(t[s].size() == static_cast<std::size_t>(m), Errc::DimensionMismatch, "transition has wrong action count");
      for (int a = 0; a < m; ++a) {
        require(t[s][a].size() == static_cast<std::size_t>(n), Errc::DimensionMismatch, "transition row has wrong length");
        for (int k = 0; k < n; ++k) mdp.t(s, a, k) = t[s][a][k].get<double>();
      }
    }
    if (j.contains("reward")) {
      const auto& r = j.at("reward");
      require(r.size() == static_cast<std::size_t>(n), Errc::DimensionMismatch, "reward has wrong state count");
      for (int s = 0; s < n; ++s) {
        require(r[s].size() == static_cast<std::size_t>(m), Errc::DimensionMismatch, "reward has wrong action count");
        for (int a = 0; a < m; ++a) mdp.reward(s, a) = r[s][a].get<double>();
      }
    }
    mdp.set_unsafe(j.value("unsafe", std::vector<int>{}));
    mdp.validate();
    return mdp;
  } catch (const nlohmann::json::exception& e) {
    throw Error(Errc::InvalidConfig, std::string("malformed MDP document: ") + e.what());
  }
}

inline nlohmann::json matrix_to_json(const Matrix& m) {
  nlohmann::json out = nlohmann::json::array();
  for (std::size_t i = 0; i < m.rows(); ++i) out.push_back(std::vector<double>(m.row(i).begin(), m.row(i).end()));
  return out;
}

inline Matrix matrix_from_json(const nlohmann::json& j) {
  try {
    require(j.is_array() && !j.empty(), Errc::InvalidConfig, "matrix must be a nonempty array of rows");
    Matrix m(j.size(), j[0].size());
    for (std::size_t i = 0; i < j.size(); ++i) {
      require(j[i].size() == m.cols(), Errc::DimensionMismatch, "ragged matrix rows");
      for (std::size_t k = 0; k < m.cols(); ++k) m(i, k) = j[i][k].get<double>();
    }
    return m;
  } catch (const nlohmann::json::exception& e) {
    throw Error(Errc::InvalidConfig, std::string("malformed matrix: ") + e.what());
  }
}

/// (Q, U) tables of one learner, plus the epsilon/beta it acted with.
struct PolicySnapshot {
  Matrix q;
  Matrix u;
  double epsilon = 0.1;
  double beta = 0.5;
};

inline nlohmann::json to_json(const PolicySnapshot& s) {
  return {{"q", matrix_to_json(s.q)}, {"u", matrix_to_json(s.u)}, {"epsilon", s.epsilon}, {"beta", s.beta}};
}

inline PolicySnapshot snapshot_from_json(const nlohmann::json& j) {
  try {
    PolicySnapshot s{matrix_from_json(j.at("q")), matrix_from_json(j.at("u")), j.value("epsilon", 0.1), j.value("beta", 0.5)};
    require(s.q.rows() == s.u.rows() && s.q.cols() == s.u.cols(), Errc::DimensionMismatch, "Q and U shapes differ");
    return s;
  } catch (const nlohmann::json::exception& e) {
    throw Error(Errc::InvalidConfig, std::string("malformed snapshot: ") + e.what());
  }
}

}  // namespace otsafe
