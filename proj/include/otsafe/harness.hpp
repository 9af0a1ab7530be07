#pragma once

// Multi-seed experiment runs: every (seed, agent) pair is an independent unit
// writing into its own pre-allocated slot, so results do not depend on
// scheduling.

#include <atomic>
#include <chrono>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <map>
#include <optional>
#include <thread>
#include <vector>

#include <json.hpp>

#include "otsafe/agents.hpp"
#include "otsafe/chain.hpp"
#include "otsafe/config.hpp"
#include "otsafe/envs.hpp"

namespace otsafe {

/// Everything recorded for one agent kind across all seeds.
struct AgentRun {
  AgentKind kind = AgentKind::Sarsa;
  Matrix returns;                          // seed x episode, undiscounted
  std::vector<std::vector<int>> failures;  // seed x episode, unsafe events
  std::vector<long> visitation;            // per true cell, summed over seeds and episodes
  long total_steps = 0;
  std::optional<PolicySnapshot> snapshot;  // seed 0, end of training

  long failures_of_seed(int seed) const {
    long n = 0;
    for (int f : failures[static_cast<std::size_t>(seed)]) n += f;
    return n;
  }
};

struct RunMetrics {
  ExperimentConfig config;
  GridSpec layout;
  std::vector<AgentRun> agents;  // in config.agents order
  double wall_time = 0.0;        // seconds; not written to any output file

  const AgentRun& of(AgentKind k) const {
    for (const auto& a : agents)
      if (a.kind == k) return a;
    throw Error(Errc::InvalidArgument, "no results for agent " + to_string(k));
  }
};

struct SummaryRow {
  AgentKind kind = AgentKind::Sarsa;
  double mean_return = 0.0;
  double std_return = 0.0;  // population std
  double mean_failures = 0.0;
};

/// U(s, .) for every state of a learner.
inline Matrix uncertainty_table(const Agent& agent) {
  const int n = agent.q.n_states(), m = agent.q.n_actions();
  Matrix u(static_cast<std::size_t>(n), static_cast<std::size_t>(m));
  if (agent.kind == AgentKind::QLearning) return u;
  for (int s = 0; s < n; ++s) {
    const auto scores = state_uncertainty(agent.q, agent.targets, s, agent.ot);
    std::copy(scores.u.begin(), scores.u.end(), u.row(static_cast<std::size_t>(s)).begin());
  }
  return u;
}

inline Matrix q_matrix(const QTable& q) {
  Matrix m(static_cast<std::size_t>(q.n_states()), static_cast<std::size_t>(q.n_actions()));
  std::copy(q.values().begin(), q.values().end(), m.data().begin());
  return m;
}

namespace detail {

// Runs fn(i) for i in [0, n) on up to `threads` workers.
template <class F>
void parallel_for(std::size_t n, unsigned threads, F&& fn) {
  if (threads == 0) threads = std::max(1u, std::thread::hardware_concurrency());
  threads = static_cast<unsigned>(std::min<std::size_t>(threads, n));
  if (threads <= 1) {
    for (std::size_t i = 0; i < n; ++i) fn(i);
    return;
  }
  std::atomic<std::size_t> next{0};
  std::vector<std::exception_ptr> errors(n);
  {
    std::vector<std::jthread> pool;
    for (unsigned t = 0; t < threads; ++t)
      pool.emplace_back([&] {
        for (std::size_t i; (i = next.fetch_add(1)) < n;) {
          try {
            fn(i);
          } catch (...) {
            errors[i] = std::current_exception();
          }
        }
      });
  }
  for (auto& e : errors)
    if (e) std::rethrow_exception(e);
}

}  // namespace detail

/// Runs every configured agent for n_seeds x n_episodes on one shared layout.
/// Seed s drives a fresh Rng(s) for each agent. `threads` = 0 uses all cores.
inline RunMetrics run_experiment(const ExperimentConfig& cfg, unsigned threads = 0) {
  cfg.validate();
  const auto t0 = std::chrono::steady_clock::now();
  RunMetrics out;
  out.config = cfg;
  out.layout = make_layout(cfg.env, cfg.scenario, cfg.layout_seed);

  const auto n_seeds = static_cast<std::size_t>(cfg.n_seeds);
  const auto n_eps = static_cast<std::size_t>(cfg.n_episodes);
  const auto n_cells = static_cast<std::size_t>(out.layout.n_cells());
  for (AgentKind k : cfg.agents) {
    AgentRun r;
    r.kind = k;
    r.returns = Matrix(n_seeds, n_eps);
    r.failures.assign(n_seeds, std::vector<int>(n_eps, 0));
    out.agents.push_back(std::move(r));
  }

  struct Slot {
    std::vector<long> visits;
    long steps = 0;
  };
  std::vector<Slot> slots(n_seeds * cfg.agents.size());

  detail::parallel_for(slots.size(), threads, [&](std::size_t unit) {
    const std::size_t ai = unit / n_seeds, seed = unit % n_seeds;
    AgentRun& run = out.agents[ai];
    Slot& slot = slots[unit];
    slot.visits.assign(n_cells, 0);
    GridEnv env(out.layout);
    Rng rng(seed);
    Agent agent(run.kind, env.n_states(), env.n_actions(), cfg.agent, cfg.ot);
    for (std::size_t ep = 0; ep < n_eps; ++ep) {
      const EpisodeResult res = run_episode(agent, env, rng);
      run.returns(seed, ep) = res.ret;
      run.failures[seed][ep] = res.failures;
      slot.steps += res.steps;
      for (int c : res.visited) ++slot.visits[static_cast<std::size_t>(c)];
    }
    if (cfg.snapshot && seed == 0)
      run.snapshot = PolicySnapshot{q_matrix(agent.q), uncertainty_table(agent), cfg.agent.epsilon, cfg.agent.beta};
  });

  for (std::size_t ai = 0; ai < out.agents.size(); ++ai) {
    auto& run = out.agents[ai];
    run.visitation.assign(n_cells, 0);
    for (std::size_t seed = 0; seed < n_seeds; ++seed) {
      const Slot& slot = slots[ai * n_seeds + seed];
      run.total_steps += slot.steps;
      for (std::size_t c = 0; c < n_cells; ++c) run.visitation[c] += slot.visits[c];
    }
  }
  out.wall_time = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  return out;
}

/// Mean and population std of returns over the last `window` episodes pooled
/// across seeds, plus mean failures per seed (all episodes).
inline std::vector<SummaryRow> summarize(const RunMetrics& m, int window) {
  require(window >= 1, Errc::InvalidArgument, "window must be >= 1");
  const int n_eps = m.config.n_episodes;
  if (window > n_eps)
    throw Error(Errc::WindowTooLarge, "window " + std::to_string(window) + " exceeds " + std::to_string(n_eps) + " episodes");
  std::vector<SummaryRow> rows;
  for (const auto& run : m.agents) {
    SummaryRow row;
    row.kind = run.kind;
    double sum = 0.0;
    long n = 0;
    for (std::size_t s = 0; s < run.returns.rows(); ++s)
      for (int e = n_eps - window; e < n_eps; ++e, ++n) sum += run.returns(s, static_cast<std::size_t>(e));
    row.mean_return = sum / static_cast<double>(n);
    double ss = 0.0;
    for (std::size_t s = 0; s < run.returns.rows(); ++s)
      for (int e = n_eps - window; e < n_eps; ++e) {
        const double d = run.returns(s, static_cast<std::size_t>(e)) - row.mean_return;
        ss += d * d;
      }
    row.std_return = std::sqrt(ss / static_cast<double>(n));
    long fails = 0;
    for (std::size_t s = 0; s < run.failures.size(); ++s) fails += run.failures_of_seed(static_cast<int>(s));
    row.mean_failures = static_cast<double>(fails) / static_cast<double>(run.failures.size());
    rows.push_back(row);
  }
  return rows;
}

/// Visit counts laid out as height x width, row index = grid y (0 = bottom).
inline Matrix visitation_grid(const std::vector<long>& visits, const GridSpec& layout) {
  require(visits.size() == static_cast<std::size_t>(layout.n_cells()), Errc::DimensionMismatch,
          "visit vector does not match the layout");
  Matrix g(static_cast<std::size_t>(layout.height), static_cast<std::size_t>(layout.width));
  for (int id = 0; id < layout.n_cells(); ++id) {
    const Cell c = layout.cell(id);
    g(static_cast<std::size_t>(c.y), static_cast<std::size_t>(c.x)) = static_cast<double>(visits[static_cast<std::size_t>(id)]);
  }
  return g;
}

inline Matrix visitation_grid(const RunMetrics& m, AgentKind k) { return visitation_grid(m.of(k).visitation, m.layout); }

/// Total visits to cells with the given role.
inline long visits_to(const AgentRun& run, const GridSpec& layout, CellRole role) {
  long n = 0;
  for (int id = 0; id < layout.n_cells(); ++id)
    if (layout.role(id) == role) n += run.visitation[static_cast<std::size_t>(id)];
  return n;
}

/// One run per beta with everything else fixed.
inline std::vector<std::pair<double, RunMetrics>> beta_sweep(const ExperimentConfig& cfg, const std::vector<double>& betas,
                                                             unsigned threads = 0) {
  require(!betas.empty(), Errc::InvalidArgument, "beta sweep needs at least one beta");
  std::vector<std::pair<double, RunMetrics>> out;
  for (double b : betas) {
    ExperimentConfig c = cfg;
    c.agent.beta = b;
    out.emplace_back(b, run_experiment(c, threads));
  }
  return out;
}

// ---- output files -------------------------------------------------------

inline nlohmann::json layout_to_json(const GridSpec& g) {
  auto cells = [](const std::vector<Cell>& v) {
    nlohmann::json a = nlohmann::json::array();
    for (Cell c : v) a.push_back({c.x, c.y});
    return a;
  };
  return {{"env", to_string(g.env)},
          {"scenario", to_string(g.scenario)},
          {"layout_seed", g.seed},
          {"width", g.width},
          {"height", g.height},
          {"max_steps", g.max_steps},
          {"n_actions", g.n_actions()},
          {"special_cells", special_cell_count(g.env, g.scenario)},
          {"start", {g.start.x, g.start.y}},
          {"goal", cells(g.goal)},
          {"slippery", cells(g.slippery)},
          {"cliff", cells(g.cliff)},
          {"trap", cells(g.trap)},
          {"obstacle", cells(g.obstacle)}};
}

namespace detail {

inline std::ofstream open_out(const std::filesystem::path& p) {
  std::ofstream f(p);
  require(f.good(), Errc::InvalidArgument, "cannot write '" + p.string() + "'");
  f.precision(17);
  return f;
}

inline nlohmann::json manifest(const ExperimentConfig& cfg, const GridSpec& layout) {
  return {{"config", config_to_json(cfg)},
          {"layout", layout_to_json(layout)},
          {"std_convention", "population"},
          {"columns",
           {{"returns.csv", "seed,episode,agent,return"},
            {"failures.csv", "seed,episode,agent,failures"},
            {"summary.csv", "agent,mean_return,std_return,mean_failures"},
            {"visitation_<agent>.csv", "width values per line, top grid row first"}}}};
}

}  // namespace detail

inline void write_summary_csv(std::ostream& os, const std::vector<SummaryRow>& rows) {
  os << "agent,mean_return,std_return,mean_failures\n";
  for (const auto& r : rows) os << to_string(r.kind) << ',' << r.mean_return << ',' << r.std_return << ',' << r.mean_failures << '\n';
}

inline void write_visitation_csv(std::ostream& os, const Matrix& grid) {
  for (std::size_t y = grid.rows(); y-- > 0;) {
    for (std::size_t x = 0; x < grid.cols(); ++x) os << (x ? "," : "") << static_cast<long>(grid(y, x));
    os << '\n';
  }
}

/// Writes returns.csv, failures.csv, summary.csv, visitation_<agent>.csv,
/// manifest.json and (if enabled) snapshot_<agent>.json into `dir`.
inline void write_outputs(const RunMetrics& m, const std::filesystem::path& dir) {
  std::filesystem::create_directories(dir);
  {
    auto f = detail::open_out(dir / "returns.csv");
    f << "seed,episode,agent,return\n";
    for (const auto& run : m.agents)
      for (std::size_t s = 0; s < run.returns.rows(); ++s)
        for (std::size_t e = 0; e < run.returns.cols(); ++e)
          f << s << ',' << e << ',' << to_string(run.kind) << ',' << run.returns(s, e) << '\n';
  }
  {
    auto f = detail::open_out(dir / "failures.csv");
    f << "seed,episode,agent,failures\n";
    for (const auto& run : m.agents)
      for (std::size_t s = 0; s < run.failures.size(); ++s)
        for (std::size_t e = 0; e < run.failures[s].size(); ++e)
          f << s << ',' << e << ',' << to_string(run.kind) << ',' << run.failures[s][e] << '\n';
  }
  {
    auto f = detail::open_out(dir / "summary.csv");
    write_summary_csv(f, summarize(m, m.config.window));
  }
  for (const auto& run : m.agents) {
    auto f = detail::open_out(dir / ("visitation_" + to_string(run.kind) + ".csv"));
    write_visitation_csv(f, visitation_grid(run.visitation, m.layout));
    if (run.snapshot) detail::open_out(dir / ("snapshot_" + to_string(run.kind) + ".json")) << to_json(*run.snapshot).dump(1) << '\n';
  }
  detail::open_out(dir / "manifest.json") << detail::manifest(m.config, m.layout).dump(2) << '\n';
}

/// sweep.csv (beta, agent, summary fields) plus manifest.json.
inline void write_sweep_outputs(const std::vector<std::pair<double, RunMetrics>>& sweep, const std::filesystem::path& dir) {
  require(!sweep.empty(), Errc::InvalidArgument, "empty sweep");
  std::filesystem::create_directories(dir);
  auto f = detail::open_out(dir / "sweep.csv");
  f << "beta,agent,mean_return,std_return,mean_failures\n";
  for (const auto& [beta, m] : sweep)
    for (const auto& r : summarize(m, m.config.window))
      f << beta << ',' << to_string(r.kind) << ',' << r.mean_return << ',' << r.std_return << ',' << r.mean_failures << '\n';
  auto man = detail::manifest(sweep.front().second.config, sweep.front().second.layout);
  man["columns"] = {{"sweep.csv", "beta,agent,mean_return,std_return,mean_failures"}};
  detail::open_out(dir / "manifest.json") << man.dump(2) << '\n';
}

}  // namespace otsafe
