// Command-line driver: single solves, the Monte Carlo CDF study, the
// CRB-rate trade-off sweep, model validation, and a stdin/stdout conic
// solve endpoint usable as an external-solver command.

#include <CLI11.hpp>

#include <cstdio>
#include <iostream>
#include <memory>
#include <sstream>

#include "rrbeam/experiments.hpp"

namespace {

using namespace rrbeam;

constexpr int kExitConfig = 2;
constexpr int kExitSolver = 3;

struct CommonArgs {
  std::string config_path;
  uint64_t seed = 0;
  bool seed_set = false;
  int trials = 0;
  std::string out_dir;
  std::string solver;
  std::string solver_command;
  int threads = -1;
};

void add_common(CLI::App* app, CommonArgs& args) {
  app->add_option("--config", args.config_path, "JSON config file");
  app->add_option("--seed", args.seed, "base RNG seed")->each([&](const std::string&) {
    args.seed_set = true;
  });
  app->add_option("--trials", args.trials, "Monte Carlo trials per sweep point");
  app->add_option("--out", args.out_dir, "output directory for CSV/plot files");
  app->add_option("--solver", args.solver, "conic backend: embedded | external");
  app->add_option("--solver-cmd", args.solver_command, "external solver command");
  app->add_option("--threads", args.threads, "worker threads (0 = hardware)");
}

ExperimentConfig make_config(const CommonArgs& args, const std::string& mode) {
  ExperimentConfig cfg;
  if (!args.config_path.empty()) cfg = load_config(args.config_path);
  cfg.mode = mode;
  if (args.seed_set) cfg.base_seed = args.seed;
  if (args.trials > 0) cfg.trials = args.trials;
  if (!args.out_dir.empty()) cfg.output_dir = args.out_dir;
  if (!args.solver.empty()) cfg.solver = args.solver;
  if (!args.solver_command.empty()) cfg.solver_command = args.solver_command;
  if (args.threads >= 0) cfg.threads = args.threads;
  if (cfg.solver == "external")
    cfg.rr.backend = std::make_shared<conic::ExternalCommandSolver>(cfg.solver_command);
  cfg.validate();
  return cfg;
}

int cmd_solve(const CommonArgs& args) {
  ExperimentConfig cfg = make_config(args, "single_solve");
  const double ratio = cfg.frame_ratios.empty() ? cfg.scenario.frame_ratio : cfg.frame_ratios[0];
  const TrialRecord rec = run_trial(cfg.scenario, cfg.rr, cfg.base_seed, 0, ratio);
  if (!rec.solved) {
    std::fprintf(stderr, "solve: trial did not produce a feasible design\n");
    return kExitSolver;
  }
  std::printf("u_hat = [%.6f, %.6f] m, serving BS %d\n", rec.u_hat.x, rec.u_hat.y,
              rec.serving_index);
  std::printf("robust:    rate %.6f bps/Hz, power %.6e W, iterations %d\n", rec.robust_rate,
              rec.robust_power, rec.rr_iterations);
  std::printf("nonrobust: rate %.6f bps/Hz, power %.6e W\n", rec.nonrobust_rate,
              rec.nonrobust_power);
  std::printf("crb %.6e m^2\n", rec.crb_m2);
  return 0;
}

int cmd_mc_cdf(const CommonArgs& args) {
  ExperimentConfig cfg = make_config(args, "mc_cdf");
  if (cfg.output_dir.empty()) cfg.output_dir = ".";
  const McResult res = run_mc_cdf(cfg);
  for (double ratio : cfg.frame_ratios) {
    std::vector<double> robust, nonrobust;
    for (const auto& r : res.records) {
      if (r.ratio != ratio || !r.solved) continue;
      robust.push_back(r.robust_rate);
      nonrobust.push_back(r.nonrobust_rate);
    }
    if (robust.empty()) continue;
    const OutageEstimate er = empirical_outage(robust, cfg.scenario.rate_threshold);
    const OutageEstimate en = empirical_outage(nonrobust, cfg.scenario.rate_threshold);
    std::printf("r=%.4f: robust outage %.4f [%.4f, %.4f], nonrobust outage %.4f (n=%d)\n", ratio,
                er.p, er.lo, er.hi, en.p, er.n);
  }
  std::printf("solver failure rate %.4f; outputs in %s\n", res.failure_rate,
              cfg.output_dir.c_str());
  return res.failure_rate > 0.10 ? kExitSolver : 0;
}

int cmd_tradeoff(const CommonArgs& args) {
  ExperimentConfig cfg = make_config(args, "tradeoff");
  if (cfg.output_dir.empty()) cfg.output_dir = ".";
  const TradeoffResult res = run_tradeoff(cfg);
  std::printf("n_antennas  ratio    mean_crb_m2    mean_rate     mean_power_w\n");
  for (const auto& row : res.rows)
    std::printf("%9d  %.4f  %.6e  %.6f  %.6e\n", row.n_antennas, row.ratio, row.mean_crb_m2,
                row.mean_rate_bps_hz, row.mean_power_w);
  std::printf("solver failure rate %.4f; outputs in %s\n", res.failure_rate,
              cfg.output_dir.c_str());
  return res.failure_rate > 0.10 ? kExitSolver : 0;
}

int cmd_validate(const CommonArgs& args, int vtrials, int samples) {
  ExperimentConfig cfg = make_config(args, "validate");
  const ValidationResult res = run_validation(cfg, vtrials, samples);
  for (const auto& line : res.lines) std::printf("%s\n", line.c_str());
  std::printf("validation: %d/%d trials within the outage bound\n", res.passed, res.trials);
  return res.ok ? 0 : kExitSolver;
}

int cmd_conic_solve() {
  std::stringstream ss;
  ss << std::cin.rdbuf();
  const conic::Problem p = conic::problem_from_json(ss.str());
  const conic::Solution s = conic::solve(p);
  std::cout << conic::to_json(s) << "\n";
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"localization-aided robust beamforming simulator"};
  app.require_subcommand(1);

  CommonArgs args;
  int vtrials = 5, vsamples = 100000;

  CLI::App* solve = app.add_subcommand("solve", "run one seeded trial end to end");
  add_common(solve, args);
  CLI::App* mc = app.add_subcommand("mc-cdf", "Monte Carlo rate-CDF study");
  add_common(mc, args);
  CLI::App* tr = app.add_subcommand("tradeoff", "CRB vs rate sweep over antenna counts");
  add_common(tr, args);
  CLI::App* va = app.add_subcommand("validate", "Monte Carlo chance-constraint validation");
  add_common(va, args);
  va->add_option("--validate-trials", vtrials, "designs to validate");
  va->add_option("--samples", vsamples, "error samples per design");
  CLI::App* cs = app.add_subcommand("conic-solve", "solve a canonical conic problem (stdin JSON)");

  CLI11_PARSE(app, argc, argv);

  try {
    if (solve->parsed()) return cmd_solve(args);
    if (mc->parsed()) return cmd_mc_cdf(args);
    if (tr->parsed()) return cmd_tradeoff(args);
    if (va->parsed()) return cmd_validate(args, vtrials, vsamples);
    if (cs->parsed()) return cmd_conic_solve();
  } catch (const rrbeam::ConfigError& e) {
    std::fprintf(stderr, "config error: %s\n", e.what());
    return kExitConfig;
  } catch (const rrbeam::Error& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return kExitSolver;
  }
  return 0;
}
