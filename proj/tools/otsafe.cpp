// otsafe: run experiments, sweep beta, check the stationary-safety ratio,
// export layouts, and self-test.
//
// Exit codes: 0 success, 1 validation/usage error, 2 runtime error.

#include <CLI11.hpp>

#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>

#include "otsafe/otsafe.hpp"

namespace fs = std::filesystem;
using namespace otsafe;

namespace {

struct RunOptions {
  std::string config_path;
  std::string out_dir;
  std::vector<std::string> overrides;
  unsigned threads = 0;
  std::optional<int> seed_count;
  std::optional<int> episodes;
};

void add_run_options(CLI::App* cmd, RunOptions& o, bool needs_out) {
  cmd->add_option("--config", o.config_path, "key = value config file or a run manifest.json")->check(CLI::ExistingFile);
  auto* out = cmd->add_option("--out", o.out_dir, "output directory");
  if (needs_out) out->required();
  cmd->add_option("--set", o.overrides, "override one key, e.g. agent.beta=0 (repeatable)")->take_all();
  cmd->add_option("--threads", o.threads, "worker cap (default: all cores)");
  cmd->add_option("--seed-count", o.seed_count, "shorthand for experiment.seeds")->check(CLI::PositiveNumber);
  cmd->add_option("--episodes", o.episodes, "shorthand for experiment.episodes")->check(CLI::PositiveNumber);
}

ExperimentConfig resolve(const RunOptions& o) {
  ExperimentConfig c = o.config_path.empty() ? ExperimentConfig{} : load_config(o.config_path);
  for (const auto& kv : o.overrides) apply_override(c, kv);
  if (o.seed_count) c.n_seeds = *o.seed_count;
  if (o.episodes) c.n_episodes = *o.episodes;
  c.validate();
  return c;
}

nlohmann::json read_json(const std::string& path) {
  std::ifstream in(path);
  require(in.good(), Errc::InvalidConfig, "cannot open '" + path + "'");
  try {
    return nlohmann::json::parse(in);
  } catch (const nlohmann::json::exception& e) {
    throw Error(Errc::InvalidConfig, "'" + path + "': " + e.what());
  }
}

bool is_validation_error(Errc c) {
  switch (c) {
    case Errc::InvalidConfig:
    case Errc::InvalidArgument:
    case Errc::UnknownScenario:
    case Errc::WindowTooLarge:
    case Errc::DimensionMismatch:
    case Errc::InvalidPolicy:
    case Errc::InvalidProbability:
    case Errc::NonFiniteInput:
      return true;
    default:
      return false;
  }
}

void print_summary(const RunMetrics& m) {
  for (const auto& r : summarize(m, m.config.window))
    std::cout << to_string(r.kind) << ": mean_return " << r.mean_return << " std " << r.std_return << " failures/seed "
              << r.mean_failures << '\n';
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Safe tabular RL with optimal-transport uncertainty scores"};
  app.require_subcommand(1);

  RunOptions run_opts, sweep_opts, layout_opts;
  auto* run = app.add_subcommand("run", "train all configured agents and write CSV metrics");
  add_run_options(run, run_opts, true);

  auto* sweep = app.add_subcommand("sweep-beta", "repeat the run for each beta in sweep.betas");
  add_run_options(sweep, sweep_opts, true);

  auto* layout = app.add_subcommand("export-layout", "write layout.json (and mdp.json for fully observed grids)");
  add_run_options(layout, layout_opts, true);

  std::string mdp_path, snap_path;
  std::optional<double> beta_flag, eps_flag;
  auto* check = app.add_subcommand("check-theorem1", "compare long-run unsafe mass of plain and penalized policies");
  check->add_option("--mdp", mdp_path, "explicit MDP JSON")->required()->check(CLI::ExistingFile);
  check->add_option("--snapshot", snap_path, "(Q, U) snapshot JSON")->required()->check(CLI::ExistingFile);
  check->add_option("--beta", beta_flag, "override the snapshot's beta");
  check->add_option("--epsilon", eps_flag, "override the snapshot's epsilon");

  auto* self = app.add_subcommand("selftest", "oracle-agreement and invariant checks");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 1;
  }

  try {
    if (run->parsed()) {
      const auto cfg = resolve(run_opts);
      const auto metrics = run_experiment(cfg, run_opts.threads);
      write_outputs(metrics, run_opts.out_dir);
      print_summary(metrics);
      std::cerr << "wall time " << metrics.wall_time << " s\n";
    } else if (sweep->parsed()) {
      const auto cfg = resolve(sweep_opts);
      const auto results = beta_sweep(cfg, cfg.betas, sweep_opts.threads);
      write_sweep_outputs(results, sweep_opts.out_dir);
      for (const auto& [b, m] : results) {
        std::cout << "beta " << b << '\n';
        print_summary(m);
      }
    } else if (layout->parsed()) {
      const auto cfg = resolve(layout_opts);
      const GridSpec spec = make_layout(cfg.env, cfg.scenario, cfg.layout_seed);
      fs::create_directories(layout_opts.out_dir);
      std::ofstream(fs::path(layout_opts.out_dir) / "layout.json") << layout_to_json(spec).dump(2) << '\n';
      if (spec.env != EnvName::Rover)
        std::ofstream(fs::path(layout_opts.out_dir) / "mdp.json") << to_json(tabularize(spec, cfg.agent.gamma)).dump() << '\n';
    } else if (check->parsed()) {
      const ExplicitMDP mdp = mdp_from_json(read_json(mdp_path));
      PolicySnapshot snap = snapshot_from_json(read_json(snap_path));
      if (beta_flag) snap.beta = *beta_flag;
      if (eps_flag) snap.epsilon = *eps_flag;
      const auto r = theorem1_ratio(mdp, snap.q, snap.u, snap.epsilon, snap.beta);
      std::cout.precision(10);
      std::cout << "c_hat " << r.c_hat << "\nmass_base " << r.mass_base << "\nmass_ot " << r.mass_ot << '\n';
    } else if (self->parsed()) {
      return run_selftest(std::cout) ? 0 : 2;
    }
  } catch (const Error& e) {
    std::cerr << "error: " << e.what() << '\n';
    return is_validation_error(e.code()) ? 1 : 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 2;
  }
  return 0;
}
