#pragma once

// Flat key = value experiment configuration. Every field has a key; the
// effective configuration is echoed in full into run manifests.
//
//   # comment
//   env.name = cliffwalk
//   agent.beta = 0.5
//
// An optional `[section]` header prefixes the following keys with
// "section.". Values may be double-quoted.

#include <algorithm>
#include <charconv>
#include <fstream>
#include <map>
#include <sstream>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

#include "otsafe/agents.hpp"
#include "otsafe/envs.hpp"
#include "otsafe/uncertainty.hpp"

namespace otsafe {

struct ExperimentConfig {
  EnvName env = EnvName::CliffWalk;
  Scenario scenario = Scenario::LU;
  std::uint64_t layout_seed = 0;
  std::vector<AgentKind> agents{AgentKind::OtSarsa, AgentKind::QLearning, AgentKind::Sarsa};
  int n_seeds = 50;
  int n_episodes = 500;
  int window = 20;  // summary window (last episodes)
  AgentConfig agent;
  OtSettings ot;
  std::vector<double> betas{0.1, 0.5, 2.0};  // beta sweep
  bool snapshot = false;                     // write seed-0 (Q, U) tables

  void validate() const {
    require(n_seeds >= 1, Errc::InvalidConfig, "experiment.seeds must be >= 1");
    require(n_episodes >= 1, Errc::InvalidConfig, "experiment.episodes must be >= 1");
    require(window >= 1, Errc::InvalidConfig, "experiment.window must be >= 1");
    require(window <= n_episodes, Errc::WindowTooLarge, "experiment.window exceeds experiment.episodes");
    require(!agents.empty(), Errc::InvalidConfig, "experiment.agents must name at least one agent");
    require(!betas.empty(), Errc::InvalidConfig, "sweep.betas must not be empty");
    for (double b : betas) require(b >= 0.0, Errc::InvalidConfig, "sweep.betas entries must be >= 0");
    require(ot.guard > 0.0, Errc::InvalidConfig, "ot.guard must be > 0");
    agent.validate();
    ot.sinkhorn.validate();
  }
};

namespace config_detail {

inline std::string trim(std::string_view s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string_view::npos) return {};
  const auto e = s.find_last_not_of(" \t\r");
  return std::string(s.substr(b, e - b + 1));
}

inline std::vector<std::string> split_list(std::string_view s) {
  std::vector<std::string> out;
  std::string cur;
  std::stringstream ss{std::string(s)};
  while (std::getline(ss, cur, ',')) {
    auto t = trim(cur);
    if (!t.empty()) out.push_back(std::move(t));
  }
  return out;
}

template <class T>
T parse_number(const std::string& key, const std::string& v) {
  T out{};
  const auto* end = v.data() + v.size();
  const auto [ptr, ec] = std::from_chars(v.data(), end, out);
  if (ec != std::errc{} || ptr != end) throw Error(Errc::InvalidConfig, key + ": cannot parse '" + v + "'");
  return out;
}

inline bool parse_bool(const std::string& key, const std::string& v) {
  if (v == "true" || v == "1") return true;
  if (v == "false" || v == "0") return false;
  throw Error(Errc::InvalidConfig, key + ": expected true/false, got '" + v + "'");
}

inline std::string format_double(double x) {
  std::ostringstream os;
  os.precision(17);
  os << x;
  return os.str();
}

}  // namespace config_detail

inline std::string to_string(OtMode m) { return m == OtMode::Oracle ? "oracle" : "sinkhorn"; }
inline OtMode parse_ot_mode(std::string_view s) {
  if (s == "oracle") return OtMode::Oracle;
  if (s == "sinkhorn") return OtMode::Sinkhorn;
  throw Error(Errc::InvalidConfig, "unknown ot mode '" + std::string(s) + "'");
}

/// Sets one key. Unknown keys are a validation error.
inline void apply_setting(ExperimentConfig& c, const std::string& key, const std::string& raw) {
  using namespace config_detail;
  std::string v = raw;
  if (v.size() >= 2 && v.front() == '"' && v.back() == '"') v = v.substr(1, v.size() - 2);

  if (key == "env.name") c.env = parse_env_name(v);
  else if (key == "env.scenario") c.scenario = parse_scenario(v);
  else if (key == "env.layout_seed") c.layout_seed = parse_number<std::uint64_t>(key, v);
  else if (key == "experiment.agents") {
    c.agents.clear();
    for (const auto& a : split_list(v)) c.agents.push_back(parse_agent_kind(a));
  } else if (key == "experiment.seeds") c.n_seeds = parse_number<int>(key, v);
  else if (key == "experiment.episodes") c.n_episodes = parse_number<int>(key, v);
  else if (key == "experiment.window") c.window = parse_number<int>(key, v);
  else if (key == "experiment.snapshot") c.snapshot = parse_bool(key, v);
  else if (key == "agent.alpha") c.agent.alpha = parse_number<double>(key, v);
  else if (key == "agent.gamma") c.agent.gamma = parse_number<double>(key, v);
  else if (key == "agent.epsilon") c.agent.epsilon = parse_number<double>(key, v);
  else if (key == "agent.beta") c.agent.beta = parse_number<double>(key, v);
  else if (key == "agent.lambda") c.agent.lambda = parse_number<double>(key, v);
  else if (key == "agent.trace") c.agent.trace_kind = parse_trace_kind(v);
  else if (key == "ot.mode") c.ot.mode = parse_ot_mode(v);
  else if (key == "ot.guard") c.ot.guard = parse_number<double>(key, v);
  else if (key == "ot.normalization") c.ot.normalization = parse_normalization(v);
  else if (key == "ot.sinkhorn_epsilon") c.ot.sinkhorn.epsilon = parse_number<double>(key, v);
  else if (key == "ot.sinkhorn_max_iterations") c.ot.sinkhorn.max_iterations = parse_number<int>(key, v);
  else if (key == "ot.sinkhorn_tol") c.ot.sinkhorn.convergence_tol = parse_number<double>(key, v);
  else if (key == "sweep.betas") {
    c.betas.clear();
    for (const auto& b : split_list(v)) c.betas.push_back(parse_number<double>(key, b));
  } else
    throw Error(Errc::InvalidConfig, "unknown config key '" + key + "'");
}

/// Every effective key with its value, in a fixed order.
inline std::vector<std::pair<std::string, std::string>> flatten(const ExperimentConfig& c) {
  using config_detail::format_double;
  std::string agents, betas;
  for (auto k : c.agents) agents += (agents.empty() ? "" : ",") + to_string(k);
  for (double b : c.betas) betas += (betas.empty() ? "" : ",") + format_double(b);
  return {
      {"env.name", to_string(c.env)},
      {"env.scenario", to_string(c.scenario)},
      {"env.layout_seed", std::to_string(c.layout_seed)},
      {"experiment.agents", agents},
      {"experiment.seeds", std::to_string(c.n_seeds)},
      {"experiment.episodes", std::to_string(c.n_episodes)},
      {"experiment.window", std::to_string(c.window)},
      {"experiment.snapshot", c.snapshot ? "true" : "false"},
      {"agent.alpha", format_double(c.agent.alpha)},
      {"agent.gamma", format_double(c.agent.gamma)},
      {"agent.epsilon", format_double(c.agent.epsilon)},
      {"agent.beta", format_double(c.agent.beta)},
      {"agent.lambda", format_double(c.agent.lambda)},
      {"agent.trace", to_string(c.agent.trace_kind)},
      {"ot.mode", to_string(c.ot.mode)},
      {"ot.guard", format_double(c.ot.guard)},
      {"ot.normalization", to_string(c.ot.normalization)},
      {"ot.sinkhorn_epsilon", format_double(c.ot.sinkhorn.epsilon)},
      {"ot.sinkhorn_max_iterations", std::to_string(c.ot.sinkhorn.max_iterations)},
      {"ot.sinkhorn_tol", format_double(c.ot.sinkhorn.convergence_tol)},
      {"sweep.betas", betas},
  };
}

inline std::string to_config_text(const ExperimentConfig& c) {
  std::string out;
  for (const auto& [k, v] : flatten(c)) out += k + " = " + v + "\n";
  return out;
}

/// Applies `key = value` lines on top of `base`.
inline ExperimentConfig parse_config_text(std::string_view text, ExperimentConfig base = {}) {
  using config_detail::trim;
  std::string section;
  std::istringstream in{std::string(text)};
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (const auto hash = line.find('#'); hash != std::string::npos) line.erase(hash);
    const std::string t = trim(line);
    if (t.empty()) continue;
    if (t.front() == '[') {
      require(t.back() == ']', Errc::InvalidConfig, "line " + std::to_string(lineno) + ": unterminated section header");
      section = trim(std::string_view(t).substr(1, t.size() - 2));
      continue;
    }
    const auto eq = t.find('=');
    require(eq != std::string::npos, Errc::InvalidConfig, "line " + std::to_string(lineno) + ": expected key = value");
    std::string key = trim(std::string_view(t).substr(0, eq));
    if (!section.empty()) key = section + "." + key;
    apply_setting(base, key, trim(std::string_view(t).substr(eq + 1)));
  }
  return base;
}

/// `key=value` override as given to --set.
inline void apply_override(ExperimentConfig& c, std::string_view kv) {
  const auto eq = kv.find('=');
  require(eq != std::string_view::npos, Errc::InvalidConfig, "override '" + std::string(kv) + "' is not key=value");
  apply_setting(c, config_detail::trim(kv.substr(0, eq)), config_detail::trim(kv.substr(eq + 1)));
}

inline nlohmann::json config_to_json(const ExperimentConfig& c) {
  nlohmann::json j = nlohmann::json::object();
  for (const auto& [k, v] : flatten(c)) j[k] = v;
  return j;
}

/// Loads a key = value file, or a run manifest (JSON with a "config" object).
inline ExperimentConfig load_config(const std::string& path) {
  std::ifstream in(path);
  require(in.good(), Errc::InvalidConfig, "cannot open config '" + path + "'");
  std::stringstream ss;
  ss << in.rdbuf();
  const std::string text = ss.str();
  ExperimentConfig c;
  const auto first = text.find_first_not_of(" \t\r\n");
  if (first != std::string::npos && text[first] == '{') {
    nlohmann::json j;
    try {
      j = nlohmann::json::parse(text);
    } catch (const nlohmann::json::exception& e) {
      throw Error(Errc::InvalidConfig, "'" + path + "': " + e.what());
    }
    require(j.contains("config") && j["config"].is_object(), Errc::InvalidConfig, "manifest has no config object");
    for (const auto& [k, v] : j["config"].items())
      apply_setting(c, k, v.is_string() ? v.get<std::string>() : v.dump());
  } else {
    c = parse_config_text(text);
  }
  return c;
}

}  // namespace otsafe
