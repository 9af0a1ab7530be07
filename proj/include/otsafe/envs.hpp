#pragma once

// Benchmark grid environments behind one tabular contract:
//  - gridworld: reward uncertainty on slippery cells
//  - cliffwalk: trap cells force the agent down into the cliff
//  - rover:     stochastic 8-way motion, obstacles sighted with noise (POMDP)

#include <algorithm>
#include <array>
#include <cstdint>
#include <memory>
#include <optional>
#include <queue>
#include <string>
#include <string_view>
#include <vector>

#include "otsafe/core.hpp"

namespace otsafe {

enum class EnvName { GridWorld, CliffWalk, Rover };
enum class Scenario { LU, HU, LargeHU };
enum class CellRole : std::uint8_t { Normal, Start, Goal, Slippery, Cliff, Trap, Obstacle };

inline std::string to_string(EnvName e) {
  switch (e) {
    case EnvName::GridWorld: return "gridworld";
    case EnvName::CliffWalk: return "cliffwalk";
    case EnvName::Rover: return "rover";
  }
  return "?";
}
inline std::string to_string(Scenario s) {
  switch (s) {
    case Scenario::LU: return "LU";
    case Scenario::HU: return "HU";
    case Scenario::LargeHU: return "LARGE_HU";
  }
  return "?";
}
inline std::string to_string(CellRole r) {
  switch (r) {
    case CellRole::Normal: return "normal";
    case CellRole::Start: return "start";
    case CellRole::Goal: return "goal";
    case CellRole::Slippery: return "slippery";
    case CellRole::Cliff: return "cliff";
    case CellRole::Trap: return "trap";
    case CellRole::Obstacle: return "obstacle";
  }
  return "?";
}

inline EnvName parse_env_name(std::string_view s) {
  if (s == "gridworld") return EnvName::GridWorld;
  if (s == "cliffwalk") return EnvName::CliffWalk;
  if (s == "rover") return EnvName::Rover;
  throw Error(Errc::UnknownScenario, "unknown environment '" + std::string(s) + "'");
}
inline Scenario parse_scenario(std::string_view s) {
  if (s == "LU") return Scenario::LU;
  if (s == "HU") return Scenario::HU;
  if (s == "LARGE_HU") return Scenario::LargeHU;
  throw Error(Errc::UnknownScenario, "unknown scenario '" + std::string(s) + "'");
}

struct Cell {
  int x = 0;  // column, 0 = left
  int y = 0;  // row, 0 = bottom
  friend auto operator<=>(const Cell&, const Cell&) = default;
};

// Four-way moves (gridworld, cliffwalk).
enum Move4 : int { kUp = 0, kDown = 1, kLeft = 2, kRight = 3 };
inline constexpr std::array<Cell, 4> kMove4Delta{{{0, 1}, {0, -1}, {-1, 0}, {1, 0}}};

// Compass moves (rover), clockwise from north so that a +/- 1 turn is a
// 45 degree heading change.
inline constexpr std::array<Cell, 8> kCompassDelta{{{0, 1}, {1, 1}, {1, 0}, {1, -1}, {0, -1}, {-1, -1}, {-1, 0}, {-1, 1}}};

/// Environment layout: dimensions, role-tagged cells, step cap.
struct GridSpec {
  EnvName env = EnvName::GridWorld;
  Scenario scenario = Scenario::LU;
  int width = 0;
  int height = 0;
  Cell start;
  std::vector<Cell> goal;
  std::vector<Cell> slippery;
  std::vector<Cell> cliff;
  std::vector<Cell> trap;
  std::vector<Cell> obstacle;
  int max_steps = 100;
  std::uint64_t seed = 0;

  int n_cells() const noexcept { return width * height; }
  int n_actions() const noexcept { return env == EnvName::Rover ? 8 : 4; }
  bool in_bounds(Cell c) const noexcept { return c.x >= 0 && c.y >= 0 && c.x < width && c.y < height; }
  int id(Cell c) const noexcept { return c.y * width + c.x; }
  Cell cell(int id) const noexcept { return {id % width, id / width}; }
  CellRole role(int id) const { return roles_.at(static_cast<std::size_t>(id)); }
  CellRole role(Cell c) const { return role(id(c)); }

  /// Validates bounds and disjointness, then builds the role lookup.
  void finalize() {
    require(width > 0 && height > 0, Errc::InvalidArgument, "grid dimensions must be positive");
    require(max_steps > 0, Errc::InvalidArgument, "max_steps must be positive");
    roles_.assign(static_cast<std::size_t>(n_cells()), CellRole::Normal);
    auto tag = [&](Cell c, CellRole r) {
      require(in_bounds(c), Errc::InvalidArgument, to_string(r) + " cell out of bounds");
      auto& slot = roles_[static_cast<std::size_t>(id(c))];
      require(slot == CellRole::Normal, Errc::InvalidArgument, to_string(r) + " cell overlaps " + to_string(slot));
      slot = r;
    };
    tag(start, CellRole::Start);
    require(!goal.empty(), Errc::InvalidArgument, "layout needs a goal");
    for (Cell c : goal) tag(c, CellRole::Goal);
    for (Cell c : slippery) tag(c, CellRole::Slippery);
    for (Cell c : cliff) tag(c, CellRole::Cliff);
    for (Cell c : trap) tag(c, CellRole::Trap);
    for (Cell c : obstacle) tag(c, CellRole::Obstacle);
  }

 private:
  std::vector<CellRole> roles_;
};

struct StepOutcome {
  int next = 0;  // state id (MDPs) or observation id (rover)
  double reward = 0.0;
  bool terminal = false;
  bool unsafe_event = false;
  std::optional<int> true_state;
};

inline constexpr double kSlipperyRewardLo = -12.0;
inline constexpr double kSlipperyRewardHi = 10.0;
inline constexpr double kWallPenalty = -10.0;
inline constexpr double kCliffReward = -49.0;
inline constexpr double kCliffGoalReward = 101.0;
inline constexpr double kRoverObstaclePenalty = -10.0;
inline constexpr double kRoverStepPenalty = -2.0;
inline constexpr double kRoverIntendedProb = 0.9;
inline constexpr double kRoverSightingProb = 0.6;

/// One grid-world transition without the episode step cap.
inline StepOutcome gridworld_step(int state, int action, const GridSpec& spec, Rng& rng) {
  require(action >= 0 && action < 4, Errc::InvalidArgument, "gridworld action out of range");
  const Cell from = spec.cell(state);
  const Cell to{from.x + kMove4Delta[action].x, from.y + kMove4Delta[action].y};
  StepOutcome out;
  if (!spec.in_bounds(to)) {
    out.next = state;
    out.reward = kWallPenalty;
  } else {
    out.next = spec.id(to);
    switch (spec.role(to)) {
      case CellRole::Slippery:
        out.reward = std::uniform_real_distribution<double>(kSlipperyRewardLo, kSlipperyRewardHi)(rng);
        out.unsafe_event = true;
        break;
      case CellRole::Goal:
        out.reward = -1.0;
        out.terminal = true;
        break;
      default:
        out.reward = -1.0;
    }
  }
  out.true_state = out.next;
  return out;
}

/// One cliff-walking transition without the episode step cap. Deterministic.
inline StepOutcome cliffwalk_step(int state, int action, const GridSpec& spec, Rng& /*rng*/) {
  require(action >= 0 && action < 4, Errc::InvalidArgument, "cliffwalk action out of range");
  const Cell from = spec.cell(state);
  const int executed = spec.role(from) == CellRole::Trap ? kDown : action;
  const Cell to{from.x + kMove4Delta[executed].x, from.y + kMove4Delta[executed].y};
  StepOutcome out;
  out.reward = -1.0;
  out.next = spec.in_bounds(to) ? spec.id(to) : state;
  if (spec.in_bounds(to)) {
    if (spec.role(to) == CellRole::Cliff) {
      out.reward = kCliffReward;
      out.terminal = true;
      out.unsafe_event = true;
    } else if (spec.role(to) == CellRole::Goal) {
      out.reward = kCliffGoalReward;
      out.terminal = true;
    }
  }
  out.true_state = out.next;
  return out;
}

namespace rover {

inline constexpr int kSightingCodes = 26;  // none + 5x5 offsets around the rover

/// Observation = (rover cell, sighting). The sighting is stored as an offset
/// relative to the rover, which is always within Chebyshev distance 2.
inline int encode(const GridSpec& spec, int cell, std::optional<Cell> sighting) {
  int code = 0;
  if (sighting) {
    const Cell r = spec.cell(cell);
    code = 1 + (sighting->x - r.x + 2) * 5 + (sighting->y - r.y + 2);
  }
  return cell * kSightingCodes + code;
}

inline int observed_cell(int observation) { return observation / kSightingCodes; }

inline std::optional<Cell> decode_sighting(const GridSpec& spec, int observation) {
  const int code = observation % kSightingCodes;
  if (code == 0) return std::nullopt;
  const Cell r = spec.cell(observed_cell(observation));
  return Cell{r.x + (code - 1) / 5 - 2, r.y + (code - 1) % 5 - 2};
}

/// Obstacle the rover would report from `cell`: among 8-adjacent obstacles,
/// the nearest in Euclidean distance, ties to the lowest cell id.
inline std::optional<Cell> adjacent_obstacle(const GridSpec& spec, int cell) {
  const Cell r = spec.cell(cell);
  std::optional<Cell> best;
  int best_d2 = 0;
  for (Cell o : spec.obstacle) {
    const int dx = o.x - r.x, dy = o.y - r.y;
    if (std::max(std::abs(dx), std::abs(dy)) != 1) continue;
    const int d2 = dx * dx + dy * dy;
    if (!best || d2 < best_d2 || (d2 == best_d2 && spec.id(o) < spec.id(*best))) {
      best = o;
      best_d2 = d2;
    }
  }
  return best;
}

/// Cells the noisy branch may report: the obstacle's in-grid 8-neighbours.
inline std::vector<Cell> sighting_noise_cells(const GridSpec& spec, Cell obstacle) {
  std::vector<Cell> out;
  for (Cell d : kCompassDelta) {
    const Cell c{obstacle.x + d.x, obstacle.y + d.y};
    if (spec.in_bounds(c)) out.push_back(c);
  }
  return out;
}

/// Next-cell distribution for a compass action from `cell` (true state).
inline std::vector<std::pair<int, double>> transition_distribution(const GridSpec& spec, int cell, int action) {
  const Cell from = spec.cell(cell);
  std::vector<std::pair<int, double>> out;
  auto add = [&](int heading, double p) {
    const Cell d = kCompassDelta[static_cast<std::size_t>((heading + 8) % 8)];
    const Cell to{from.x + d.x, from.y + d.y};
    int next = cell;
    if (spec.in_bounds(to) && spec.role(to) != CellRole::Obstacle) next = spec.id(to);
    for (auto& [s, q] : out)
      if (s == next) {
        q += p;
        return;
      }
    out.emplace_back(next, p);
  };
  add(action, kRoverIntendedProb);
  add(action - 1, (1.0 - kRoverIntendedProb) / 2.0);
  add(action + 1, (1.0 - kRoverIntendedProb) / 2.0);
  return out;
}

}  // namespace rover

/// Sample the rover's observation at its true cell.
inline int rover_observe(int true_state, const GridSpec& spec, Rng& rng) {
  const auto obstacle = rover::adjacent_obstacle(spec, true_state);
  if (!obstacle) return rover::encode(spec, true_state, std::nullopt);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  if (unit(rng) < kRoverSightingProb) return rover::encode(spec, true_state, obstacle);
  const auto noise = rover::sighting_noise_cells(spec, *obstacle);
  const auto k = std::uniform_int_distribution<std::size_t>(0, noise.size() - 1)(rng);
  return rover::encode(spec, true_state, noise[k]);
}

/// One rover transition on the true state plus an emitted observation.
/// Obstacle collisions bounce back; boundary moves leave the rover in place.
inline StepOutcome rover_step(int state, int action, const GridSpec& spec, Rng& rng) {
  require(action >= 0 && action < 8, Errc::InvalidArgument, "rover action out of range");
  const double u = std::uniform_real_distribution<double>(0.0, 1.0)(rng);
  int heading = action;
  if (u >= kRoverIntendedProb) heading = u < kRoverIntendedProb + (1.0 - kRoverIntendedProb) / 2.0 ? action - 1 : action + 1;
  const Cell d = kCompassDelta[static_cast<std::size_t>((heading + 8) % 8)];
  const Cell from = spec.cell(state);
  const Cell to{from.x + d.x, from.y + d.y};

  StepOutcome out;
  int cell = state;
  out.reward = kRoverStepPenalty;
  if (spec.in_bounds(to)) {
    switch (spec.role(to)) {
      case CellRole::Obstacle:
        out.reward = kRoverObstaclePenalty;
        out.unsafe_event = true;
        break;
      case CellRole::Goal:
        cell = spec.id(to);
        out.reward = 0.0;
        out.terminal = true;
        break;
      default:
        cell = spec.id(to);
    }
  }
  out.true_state = cell;
  out.next = rover_observe(cell, spec, rng);
  return out;
}

/// Episodic environment contract shared by all benchmarks.
class TabularEnv {
 public:
  virtual ~TabularEnv() = default;

  /// Number of distinct states (or observations) the agent sees.
  virtual int n_states() const = 0;
  virtual int n_actions() const = 0;
  virtual int reset(Rng& rng) = 0;
  virtual StepOutcome step(int action, Rng& rng) = 0;
  virtual bool terminated() const = 0;
  /// Grid layout, when the environment has one (used for visitation).
  virtual const GridSpec* layout() const { return nullptr; }
};

/// Grid environment with episode bookkeeping and the step cap.
class GridEnv : public TabularEnv {
 public:
  explicit GridEnv(GridSpec spec) : spec_(std::move(spec)) { spec_.finalize(); }

  int n_states() const override {
    return spec_.env == EnvName::Rover ? spec_.n_cells() * rover::kSightingCodes : spec_.n_cells();
  }
  int n_actions() const override { return spec_.n_actions(); }
  bool terminated() const override { return done_; }
  const GridSpec* layout() const override { return &spec_; }
  const GridSpec& spec() const noexcept { return spec_; }
  int true_state() const noexcept { return cell_; }
  int steps_taken() const noexcept { return t_; }

  int reset(Rng& rng) override {
    cell_ = spec_.id(spec_.start);
    t_ = 0;
    done_ = false;
    return spec_.env == EnvName::Rover ? rover_observe(cell_, spec_, rng) : cell_;
  }

  StepOutcome step(int action, Rng& rng) override {
    if (done_) throw Error(Errc::SteppedAfterTerminal, "step() called on a finished episode");
    StepOutcome out;
    switch (spec_.env) {
      case EnvName::GridWorld: out = gridworld_step(cell_, action, spec_, rng); break;
      case EnvName::CliffWalk: out = cliffwalk_step(cell_, action, spec_, rng); break;
      case EnvName::Rover: out = rover_step(cell_, action, spec_, rng); break;
    }
    cell_ = *out.true_state;
    ++t_;
    if (t_ >= spec_.max_steps) out.terminal = true;
    done_ = out.terminal;
    return out;
  }

 private:
  GridSpec spec_;
  int cell_ = 0;
  int t_ = 0;
  bool done_ = true;
};

namespace detail {

// Draw `count` distinct cells from `pool` (order of the pool matters).
inline std::vector<Cell> sample_cells(std::vector<Cell> pool, std::size_t count, Rng& rng) {
  require(count <= pool.size(), Errc::InvalidArgument, "not enough free cells for the layout");
  for (std::size_t i = 0; i < count; ++i) {
    const auto j = std::uniform_int_distribution<std::size_t>(i, pool.size() - 1)(rng);
    std::swap(pool[i], pool[j]);
  }
  pool.resize(count);
  std::sort(pool.begin(), pool.end(), [](Cell a, Cell b) { return a.y != b.y ? a.y < b.y : a.x < b.x; });
  return pool;
}

inline bool rover_goal_reachable(const GridSpec& spec) {
  std::vector<char> seen(static_cast<std::size_t>(spec.n_cells()), 0);
  std::queue<Cell> frontier;
  frontier.push(spec.start);
  seen[static_cast<std::size_t>(spec.id(spec.start))] = 1;
  while (!frontier.empty()) {
    const Cell c = frontier.front();
    frontier.pop();
    if (spec.role(c) == CellRole::Goal) return true;
    for (Cell d : kCompassDelta) {
      const Cell n{c.x + d.x, c.y + d.y};
      if (!spec.in_bounds(n) || spec.role(n) == CellRole::Obstacle) continue;
      if (seen[static_cast<std::size_t>(spec.id(n))]) continue;
      seen[static_cast<std::size_t>(spec.id(n))] = 1;
      frontier.push(n);
    }
  }
  return false;
}

}  // namespace detail

/// Number of special cells per (environment, scenario). The large variants
/// keep the high-uncertainty density of the 10x10 / 10x7 layouts.
inline int special_cell_count(EnvName env, Scenario scenario) {
  switch (env) {
    case EnvName::GridWorld: return scenario == Scenario::LU ? 33 : scenario == Scenario::HU ? 50 : 450;
    case EnvName::CliffWalk: return scenario == Scenario::LU ? 2 : scenario == Scenario::HU ? 6 : 21;
    case EnvName::Rover: return scenario == Scenario::LU ? 3 : scenario == Scenario::HU ? 10 : 90;
  }
  return 0;
}

/// Deterministic layout for (env, scenario, seed).
inline GridSpec make_layout(EnvName env, Scenario scenario, std::uint64_t seed) {
  Rng rng(seed);
  const bool large = scenario == Scenario::LargeHU;
  const int count = special_cell_count(env, scenario);
  GridSpec spec;
  spec.env = env;
  spec.scenario = scenario;
  spec.seed = seed;
  switch (env) {
    case EnvName::GridWorld: {
      spec.width = spec.height = large ? 30 : 10;
      spec.start = {0, 0};
      spec.goal = {{spec.width - 1, spec.height - 1}};
      spec.max_steps = 100;
      std::vector<Cell> pool;
      for (int y = 0; y < spec.height; ++y)
        for (int x = 0; x < spec.width; ++x)
          if (Cell c{x, y}; c != spec.start && c != spec.goal[0]) pool.push_back(c);
      spec.slippery = detail::sample_cells(std::move(pool), static_cast<std::size_t>(count), rng);
      break;
    }
    case EnvName::CliffWalk: {
      spec.width = large ? 30 : 10;
      spec.height = large ? 21 : 7;
      spec.start = {0, 0};
      spec.goal = {{spec.width - 1, 0}};
      spec.max_steps = 200;
      std::vector<Cell> pool;
      for (int x = 1; x < spec.width - 1; ++x) {
        spec.cliff.push_back({x, 0});
        pool.push_back({x, 1});
      }
      spec.trap = detail::sample_cells(std::move(pool), static_cast<std::size_t>(count), rng);
      break;
    }
    case EnvName::Rover: {
      spec.width = spec.height = large ? 30 : 10;
      spec.start = {0, 0};
      const int w = spec.width, h = spec.height;
      spec.goal = {{w - 2, h - 2}, {w - 1, h - 2}, {w - 2, h - 1}, {w - 1, h - 1}};
      spec.max_steps = large ? 600 : 200;
      std::vector<Cell> pool;
      for (int y = 0; y < h; ++y)
        for (int x = 0; x < w; ++x) {
          const Cell c{x, y};
          if (c == spec.start || std::find(spec.goal.begin(), spec.goal.end(), c) != spec.goal.end()) continue;
          pool.push_back(c);
        }
      for (int attempt = 0;; ++attempt) {
        require(attempt < 1000, Errc::InvalidArgument, "could not place rover obstacles with a reachable goal");
        spec.obstacle = detail::sample_cells(pool, static_cast<std::size_t>(count), rng);
        spec.finalize();
        if (detail::rover_goal_reachable(spec)) break;
      }
      break;
    }
  }
  spec.finalize();
  return spec;
}

inline std::unique_ptr<GridEnv> make_env(EnvName env, Scenario scenario, std::uint64_t seed) {
  return std::make_unique<GridEnv>(make_layout(env, scenario, seed));
}

inline std::unique_ptr<GridEnv> make_env(std::string_view env, std::string_view scenario, std::uint64_t seed) {
  return make_env(parse_env_name(env), parse_scenario(scenario), seed);
}

}  // namespace otsafe
