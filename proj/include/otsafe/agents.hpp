#pragma once

// Tabular TD learners (Q-learning, SARSA, SARSA(lambda)) and their
// OT-guided variants, which act epsilon-greedily on Q(s,a) - beta * U(s,a).

#include <algorithm>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "otsafe/action_dist.hpp"
#include "otsafe/envs.hpp"
#include "otsafe/uncertainty.hpp"

namespace otsafe {

enum class AgentKind { QLearning, Sarsa, SarsaLambda, OtSarsa, OtSarsaLambda };
enum class TraceKind { Accumulating, Replacing };

inline std::string to_string(AgentKind k) {
  switch (k) {
    case AgentKind::QLearning: return "qlearning";
    case AgentKind::Sarsa: return "sarsa";
    case AgentKind::SarsaLambda: return "sarsa_lambda";
    case AgentKind::OtSarsa: return "ot_sarsa";
    case AgentKind::OtSarsaLambda: return "ot_sarsa_lambda";
  }
  return "?";
}
inline AgentKind parse_agent_kind(std::string_view s) {
  for (auto k : {AgentKind::QLearning, AgentKind::Sarsa, AgentKind::SarsaLambda, AgentKind::OtSarsa,
                 AgentKind::OtSarsaLambda})
    if (s == to_string(k)) return k;
  throw Error(Errc::InvalidConfig, "unknown agent kind '" + std::string(s) + "'");
}
inline std::string to_string(TraceKind k) { return k == TraceKind::Replacing ? "replacing" : "accumulating"; }
inline TraceKind parse_trace_kind(std::string_view s) {
  if (s == "replacing") return TraceKind::Replacing;
  if (s == "accumulating") return TraceKind::Accumulating;
  throw Error(Errc::InvalidConfig, "unknown trace kind '" + std::string(s) + "'");
}

inline bool is_ot_guided(AgentKind k) { return k == AgentKind::OtSarsa || k == AgentKind::OtSarsaLambda; }
inline bool uses_traces(AgentKind k) { return k == AgentKind::SarsaLambda || k == AgentKind::OtSarsaLambda; }

struct AgentConfig {
  double alpha = 0.1;
  double gamma = 0.99;
  double epsilon = 0.1;
  double beta = 0.5;
  double lambda = 0.9;
  TraceKind trace_kind = TraceKind::Replacing;

  void validate() const {
    require(alpha > 0.0 && alpha <= 1.0, Errc::InvalidConfig, "alpha must be in (0, 1]");
    require(gamma >= 0.0 && gamma < 1.0, Errc::InvalidConfig, "gamma must be in [0, 1)");
    require(epsilon >= 0.0 && epsilon <= 1.0, Errc::InvalidConfig, "epsilon must be in [0, 1]");
    require(beta >= 0.0, Errc::InvalidConfig, "beta must be >= 0");
    require(lambda >= 0.0 && lambda <= 1.0, Errc::InvalidConfig, "lambda must be in [0, 1]");
  }
};

/// Eligibility traces with a list of the currently nonzero cells, so the
/// SARSA(lambda) sweep only touches pairs that can change.
class EligibilityTable {
 public:
  /// Traces below this are dropped from the active set.
  static constexpr double kDropBelow = 1e-12;

  EligibilityTable() = default;
  EligibilityTable(int n_states, int n_actions)
      : n_actions_(n_actions),
        traces_(static_cast<std::size_t>(n_states) * static_cast<std::size_t>(n_actions), 0.0),
        active_flag_(traces_.size(), 0) {}

  double operator()(int s, int a) const { return traces_[flat(s, a)]; }

  void visit(int s, int a, TraceKind kind) {
    const std::size_t k = flat(s, a);
    traces_[k] = kind == TraceKind::Replacing ? 1.0 : traces_[k] + 1.0;
    if (!active_flag_[k]) {
      active_flag_[k] = 1;
      active_.push_back(k);
    }
  }

  /// Calls fn(state, action, trace) for every active trace.
  template <class F>
  void for_each_active(F&& fn) const {
    for (std::size_t k : active_)
      fn(static_cast<int>(k / static_cast<std::size_t>(n_actions_)), static_cast<int>(k % static_cast<std::size_t>(n_actions_)),
         traces_[k]);
  }

  void decay(double factor) {
    std::size_t keep = 0;
    for (std::size_t k : active_) {
      traces_[k] *= factor;
      if (traces_[k] < kDropBelow) {
        traces_[k] = 0.0;
        active_flag_[k] = 0;
      } else {
        active_[keep++] = k;
      }
    }
    active_.resize(keep);
  }

  void clear() {
    for (std::size_t k : active_) {
      traces_[k] = 0.0;
      active_flag_[k] = 0;
    }
    active_.clear();
  }

  std::size_t active_count() const noexcept { return active_.size(); }

 private:
  std::size_t flat(int s, int a) const {
    return static_cast<std::size_t>(s) * static_cast<std::size_t>(n_actions_) + static_cast<std::size_t>(a);
  }

  int n_actions_ = 0;
  std::vector<double> traces_;
  std::vector<char> active_flag_;
  std::vector<std::size_t> active_;
};

/// Epsilon-greedy over `qvals`: uniform action with probability epsilon,
/// otherwise an argmax with ties broken uniformly. Always draws exactly two
/// numbers from `rng`.
inline int select_eps_greedy(std::span<const double> qvals, double epsilon, Rng& rng) {
  require(!qvals.empty(), Errc::InvalidArgument, "no actions to select from");
  const double u = std::uniform_real_distribution<double>(0.0, 1.0)(rng);
  if (u < epsilon) return static_cast<int>(std::uniform_int_distribution<std::size_t>(0, qvals.size() - 1)(rng));

  const double best = *std::max_element(qvals.begin(), qvals.end());
  std::size_t ties = 0;
  for (double v : qvals) ties += v == best ? 1 : 0;
  auto pick = std::uniform_int_distribution<std::size_t>(0, ties - 1)(rng);
  for (std::size_t i = 0; i < qvals.size(); ++i)
    if (qvals[i] == best && pick-- == 0) return static_cast<int>(i);
  return 0;  // unreachable
}

/// Epsilon-greedy over the penalized values Q - beta * U.
inline int select_ot_guided(std::span<const double> qvals, std::span<const double> u, double beta, double epsilon,
                            Rng& rng) {
  require(qvals.size() == u.size(), Errc::DimensionMismatch, "Q and U lengths differ");
  std::vector<double> penalized(qvals.size());
  for (std::size_t i = 0; i < qvals.size(); ++i) penalized[i] = qvals[i] - beta * u[i];
  return select_eps_greedy(penalized, epsilon, rng);
}

struct Transition {
  int s = 0;
  int a = 0;
  double r = 0.0;
  int next = 0;
  int next_action = 0;  // ignored by Q-learning and on terminal transitions
  bool terminal = false;
};

inline void q_learning_step(QTable& q, const Transition& t, const AgentConfig& cfg) {
  const double bootstrap = t.terminal ? 0.0 : q.max(t.next);
  q(t.s, t.a) += cfg.alpha * (t.r + cfg.gamma * bootstrap - q(t.s, t.a));
}

inline void sarsa_step(QTable& q, TargetBuffer& buf, const Transition& t, const AgentConfig& cfg) {
  const double q_next = t.terminal ? 0.0 : q(t.next, t.next_action);
  update_target(buf, t.s, t.a, t.r, cfg.gamma, q_next);
  q(t.s, t.a) += cfg.alpha * (t.r + cfg.gamma * q_next - q(t.s, t.a));
}

inline void sarsa_lambda_step(QTable& q, TargetBuffer& buf, EligibilityTable& e, const Transition& t,
                              const AgentConfig& cfg) {
  const double q_next = t.terminal ? 0.0 : q(t.next, t.next_action);
  const double td = t.r + cfg.gamma * q_next - q(t.s, t.a);
  update_target(buf, t.s, t.a, t.r, cfg.gamma, q_next);
  e.visit(t.s, t.a, cfg.trace_kind);
  e.for_each_active([&](int s, int a, double trace) { q(s, a) += cfg.alpha * td * trace; });
  e.decay(cfg.gamma * cfg.lambda);
}

/// Learner state for one run: tables plus configuration.
struct Agent {
  AgentKind kind = AgentKind::Sarsa;
  AgentConfig cfg;
  OtSettings ot;
  QTable q;
  TargetBuffer targets;
  EligibilityTable traces;

  Agent(AgentKind k, int n_states, int n_actions, AgentConfig c = {}, OtSettings o = {})
      : kind(k), cfg(c), ot(std::move(o)), q(n_states, n_actions),
        targets(kind == AgentKind::QLearning ? TargetBuffer{} : TargetBuffer(n_states, n_actions)),
        traces(uses_traces(kind) ? EligibilityTable(n_states, n_actions) : EligibilityTable{}) {
    cfg.validate();
  }

  /// Behavioral action at state s.
  int act(int s, Rng& rng) const {
    if (is_ot_guided(kind)) {
      const UncertaintyScores scores = state_uncertainty(q, targets, s, ot);
      return select_ot_guided(q.row(s), scores.u, cfg.beta, cfg.epsilon, rng);
    }
    return select_eps_greedy(q.row(s), cfg.epsilon, rng);
  }

  void learn(const Transition& t) {
    switch (kind) {
      case AgentKind::QLearning: q_learning_step(q, t, cfg); break;
      case AgentKind::Sarsa:
      case AgentKind::OtSarsa: sarsa_step(q, targets, t, cfg); break;
      case AgentKind::SarsaLambda:
      case AgentKind::OtSarsaLambda: sarsa_lambda_step(q, targets, traces, t, cfg); break;
    }
  }
};

struct EpisodeResult {
  double ret = 0.0;  // undiscounted
  int steps = 0;
  int failures = 0;
  std::vector<int> visited;  // true state entered at each step
};

/// Runs one episode from a fresh reset.
inline EpisodeResult run_episode(Agent& agent, TabularEnv& env, Rng& rng) {
  EpisodeResult res;
  int s = env.reset(rng);
  if (env.terminated()) return res;
  if (uses_traces(agent.kind)) agent.traces.clear();

  auto record = [&](const StepOutcome& o) {
    res.ret += o.reward;
    ++res.steps;
    res.failures += o.unsafe_event ? 1 : 0;
    res.visited.push_back(o.true_state.value_or(o.next));
  };

  if (agent.kind == AgentKind::QLearning) {
    for (;;) {
      const int a = agent.act(s, rng);
      const StepOutcome o = env.step(a, rng);
      record(o);
      agent.learn({s, a, o.reward, o.next, 0, o.terminal});
      if (o.terminal) break;
      s = o.next;
    }
    return res;
  }

  int a = agent.act(s, rng);
  for (;;) {
    const StepOutcome o = env.step(a, rng);
    record(o);
    if (o.terminal) {
      agent.learn({s, a, o.reward, o.next, 0, true});
      break;
    }
    const int next_a = agent.act(o.next, rng);
    agent.learn({s, a, o.reward, o.next, next_a, false});
    s = o.next;
    a = next_a;
  }
  return res;
}

}  // namespace otsafe
