#pragma once

// Monte Carlo experiment harness: rate-CDF study with a non-robust
// baseline, the CRB-rate trade-off sweep, config loading, CSV and
// plot-script emission.

#include <cstdint>
#include <string>
#include <vector>

#include "rrbeam/rr.hpp"
#include "rrbeam/scenario.hpp"

namespace rrbeam {

struct ExperimentConfig {
  Scenario scenario = default_scenario();
  int trials = 500;
  uint64_t base_seed = 1;
  std::vector<double> frame_ratios = {1.0 / 8, 2.0 / 8, 3.0 / 8};
  std::vector<int> antenna_counts = {8, 16, 32, 64};
  std::string mode = "mc_cdf";  // mc_cdf | tradeoff | single_solve | validate
  std::string output_dir;
  RrConfig rr;
  int threads = 0;  // 0 -> hardware concurrency
  std::string solver = "embedded";
  std::string solver_command;

  void validate() const;
};

ExperimentConfig config_from_json(const std::string& text);
ExperimentConfig load_config(const std::string& path);

struct TrialRecord {
  int trial_id = 0;
  double ratio = 0.0;
  int n_antennas = 0;
  Vec2 u_hat;
  int serving_index = 0;
  double robust_rate = 0.0;
  double nonrobust_rate = 0.0;
  double robust_power = 0.0;
  double nonrobust_power = 0.0;
  bool robust_outage = false;
  bool nonrobust_outage = false;
  int rr_iterations = 0;
  double crb_m2 = 0.0;
  bool solved = false;
};

// Minimum-power matched-filter beam that meets the rate threshold when the
// estimated channel is taken as perfect CSI: w = sqrt(P) g^ / ||g^||,
// P = Gamma / ||g^||^2 with Gamma = Nc (2^{(1+r) Rbar} - 1).
CVec nonrobust_baseline(const CVec& g_hat, const Scenario& sc);

// One full trial: draw the estimate, run R&R, realize the true channel at
// u^ + du with du = u - u^, score both designs.
TrialRecord run_trial(const Scenario& sc, const RrConfig& rr_cfg, uint64_t base_seed,
                      int trial_id, double ratio);

struct McResult {
  std::vector<TrialRecord> records;  // trial-id order within each ratio
  double failure_rate = 0.0;
};

// Fig.-2 style study. Writes cdf.csv, cdf_curves.csv and plot_cdf.gp under
// config.output_dir when it is non-empty.
McResult run_mc_cdf(const ExperimentConfig& config);

struct TradeoffRow {
  int n_antennas = 0;
  double ratio = 0.0;
  double mean_crb_m2 = 0.0;
  double mean_rate_bps_hz = 0.0;
  double mean_power_w = 0.0;
  int solved_trials = 0;
};

struct TradeoffResult {
  std::vector<TradeoffRow> rows;  // sorted by (n_antennas, ratio)
  double failure_rate = 0.0;
};

// Fig.-3 style sweep. Writes tradeoff.csv and plot_tradeoff.gp when
// config.output_dir is non-empty.
TradeoffResult run_tradeoff(const ExperimentConfig& config);

struct OutageEstimate {
  double p = 0.0;
  double lo = 0.0;  // binomial 95% interval
  double hi = 0.0;
  int n = 0;
};

OutageEstimate empirical_outage(const std::vector<double>& rates, double rate_threshold);

struct ValidationResult {
  int trials = 0;
  int passed = 0;
  std::vector<std::string> lines;
  bool ok = false;
};

// Model-level chance-constraint validation: Monte Carlo over the design's
// own positioning-error distribution at the solved beams.
ValidationResult run_validation(const ExperimentConfig& config, int n_trials = 5,
                                int samples = 100000);

std::string csv_from_records(const std::vector<TrialRecord>& records);

}  // namespace rrbeam
