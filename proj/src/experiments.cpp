#include "rrbeam/experiments.hpp"

#include <json.hpp>

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <thread>

#include "rrbeam/rng.hpp"

namespace rrbeam {

using nlohmann::json;

void ExperimentConfig::validate() const {
  scenario.validate();
  if (trials < 1) throw ConfigError("config: trials must be >= 1");
  for (double r : frame_ratios)
    if (!(r > 0.0)) throw ConfigError("config: frame ratios must be > 0");
  for (int n : antenna_counts)
    if (n < 1) throw ConfigError("config: antenna counts must be >= 1");
  if (mode != "mc_cdf" && mode != "tradeoff" && mode != "single_solve" && mode != "validate")
    throw ConfigError("config: unknown mode " + mode);
  if (solver != "embedded" && solver != "external")
    throw ConfigError("config: solver must be embedded or external");
  if (solver == "external" && solver_command.empty())
    throw ConfigError("config: external solver requires solver_command");
}

namespace {

Vec2 vec2_from(const json& j) { return {j.at(0).get<double>(), j.at(1).get<double>()}; }

Scenario scenario_from_json(const json& j) {
  Scenario sc = default_scenario();
  if (j.contains("bs_positions")) {
    sc.bs_positions.clear();
    for (const auto& p : j.at("bs_positions")) sc.bs_positions.push_back(vec2_from(p));
    sc.channel_gains.assign(sc.bs_positions.size(), cplx(1.0, 1.0) / std::sqrt(2.0));
  }
  if (j.contains("user_position")) sc.user_position = vec2_from(j.at("user_position"));
  if (j.contains("n_antennas")) sc.n_antennas = j.at("n_antennas").get<int>();
  if (j.contains("carrier_frequency_ghz"))
    sc.carrier_frequency_ghz = j.at("carrier_frequency_ghz").get<double>();
  if (j.contains("element_spacing_m")) sc.element_spacing_m = j.at("element_spacing_m").get<double>();
  if (j.contains("channel_gains")) {
    const auto& g = j.at("channel_gains");
    sc.channel_gains.clear();
    for (const auto& h : g) sc.channel_gains.emplace_back(h.at(0).get<double>(), h.at(1).get<double>());
  }
  if (j.contains("clock_bias_std_ns")) sc.clock_bias_std_ns = j.at("clock_bias_std_ns").get<double>();
  if (j.contains("noise_psd_positioning"))
    sc.noise_psd_positioning = j.at("noise_psd_positioning").get<double>();
  if (j.contains("noise_psd_comm")) sc.noise_psd_comm = j.at("noise_psd_comm").get<double>();
  if (j.contains("effective_bandwidth_ghz"))
    sc.effective_bandwidth_ghz = j.at("effective_bandwidth_ghz").get<double>();
  if (j.contains("frame_ratio")) sc.frame_ratio = j.at("frame_ratio").get<double>();
  if (j.contains("rate_threshold")) sc.rate_threshold = j.at("rate_threshold").get<double>();
  if (j.contains("outage_prob")) sc.outage_prob = j.at("outage_prob").get<double>();
  if (j.contains("positioning_energy_factor"))
    sc.positioning_energy_factor = j.at("positioning_energy_factor").get<double>();
  return sc;
}

}  // namespace

ExperimentConfig config_from_json(const std::string& text) {
  json j;
  try {
    j = json::parse(text);
  } catch (const std::exception& e) {
    throw ConfigError(std::string("config: invalid JSON: ") + e.what());
  }
  ExperimentConfig cfg;
  try {
    if (j.contains("scenario")) cfg.scenario = scenario_from_json(j.at("scenario"));
    if (j.contains("trials")) cfg.trials = j.at("trials").get<int>();
    if (j.contains("base_seed")) cfg.base_seed = j.at("base_seed").get<uint64_t>();
    if (j.contains("frame_ratios")) cfg.frame_ratios = j.at("frame_ratios").get<std::vector<double>>();
    if (j.contains("antenna_counts")) cfg.antenna_counts = j.at("antenna_counts").get<std::vector<int>>();
    if (j.contains("mode")) cfg.mode = j.at("mode").get<std::string>();
    if (j.contains("output_dir")) cfg.output_dir = j.at("output_dir").get<std::string>();
    if (j.contains("threads")) cfg.threads = j.at("threads").get<int>();
    if (j.contains("solver")) cfg.solver = j.at("solver").get<std::string>();
    if (j.contains("solver_command")) cfg.solver_command = j.at("solver_command").get<std::string>();
    if (j.contains("rr")) {
      const auto& r = j.at("rr");
      if (r.contains("epsilon")) cfg.rr.epsilon = r.at("epsilon").get<double>();
      if (r.contains("delta_inc")) cfg.rr.delta_inc = r.at("delta_inc").get<double>();
      if (r.contains("max_iterations")) cfg.rr.max_iterations = r.at("max_iterations").get<int>();
      if (r.contains("max_rescales")) cfg.rr.max_rescales = r.at("max_rescales").get<int>();
      if (r.contains("rank_one_ratio_tol"))
        cfg.rr.rank_one_ratio_tol = r.at("rank_one_ratio_tol").get<double>();
      if (r.contains("solver_tol_gap")) cfg.rr.solver.tol_gap = r.at("solver_tol_gap").get<double>();
      if (r.contains("solver_tol_feas")) cfg.rr.solver.tol_feas = r.at("solver_tol_feas").get<double>();
      if (r.contains("solver_max_iter")) cfg.rr.solver.max_iter = r.at("solver_max_iter").get<int>();
    }
  } catch (const ConfigError&) {
    throw;
  } catch (const std::exception& e) {
    throw ConfigError(std::string("config: ") + e.what());
  }
  cfg.validate();
  return cfg;
}

ExperimentConfig load_config(const std::string& path) {
  std::ifstream f(path);
  if (!f) throw ConfigError("config: cannot open " + path);
  std::stringstream ss;
  ss << f.rdbuf();
  return config_from_json(ss.str());
}

CVec nonrobust_baseline(const CVec& g_hat, const Scenario& sc) {
  const double norm_sq = cnorm_sq(g_hat);
  if (!(norm_sq > 0.0)) throw DegenerateChannel("nonrobust_baseline: zero channel");
  const double exponent = (1.0 + sc.frame_ratio) * sc.rate_threshold;
  const double big_gamma = sc.noise_power_comm() * (std::exp2(exponent) - 1.0);
  const double power = big_gamma / norm_sq;
  const double scale = std::sqrt(power / norm_sq);
  CVec w(g_hat.size());
  for (size_t k = 0; k < w.size(); ++k) w[k] = scale * g_hat[k];
  return w;
}

TrialRecord run_trial(const Scenario& base, const RrConfig& rr_cfg, uint64_t base_seed,
                      int trial_id, double ratio) {
  Scenario sc = base;
  sc.frame_ratio = ratio;

  TrialRecord rec;
  rec.trial_id = trial_id;
  rec.ratio = ratio;
  rec.n_antennas = sc.n_antennas;

  // Draw anchor at the true geometry (Algorithm 1 computes the initial
  // surrogate EFIM before any estimate exists).
  std::vector<double> true_thetas(sc.num_bs());
  for (int i = 0; i < sc.num_bs(); ++i)
    true_thetas[i] = estimated_angle(sc.user_position, sc.bs_positions[i]);
  const AffineEfimMap true_map = build_affine_map(sc, sc.user_position, true_thetas);
  const int serving_at_truth = serving_bs(sc, sc.user_position);
  const Anchor draw_anchor = isotropic_anchor(sc, sc.user_position, serving_at_truth, true_map);

  const Estimate est =
      draw_estimate(sc, Efim{draw_anchor.efim0, std::nullopt},
                    base_seed * 0x9e3779b97f4a7c15ULL + uint64_t(trial_id));
  rec.u_hat = est.u_hat;
  rec.serving_index = serving_bs(sc, est.u_hat);

  // Run anchor at the estimated geometry so the Taylor expansion point is
  // consistent with the SDP's own EFIM map.
  const AffineEfimMap map = build_affine_map(sc, est.u_hat, est.thetas_hat);
  const Anchor run_anchor = isotropic_anchor(sc, est.u_hat, rec.serving_index, map);

  const RrReport report = run(sc, rr_cfg, run_anchor, est.u_hat, rec.serving_index);
  if (!report.feasible) return rec;  // solved == false

  // Realized channel: u^ + du = u with the angle frozen at theta^.
  const Vec2 delta_u = sc.user_position - est.u_hat;
  const ChannelRealization cr = channel_split(sc, rec.serving_index, est.u_hat, delta_u);
  CVec g_true(cr.g_hat.size());
  for (size_t k = 0; k < g_true.size(); ++k) g_true[k] = cr.g_hat[k] + cr.g_err[k];

  rec.robust_rate = achievable_rate(g_true, report.beamformers.vectors[rec.serving_index], sc);
  double total = 0.0;
  for (const HermMatrix& c : report.final_covariances) total += c.trace();
  rec.robust_power = total;
  rec.robust_outage = rec.robust_rate <= sc.rate_threshold;
  rec.rr_iterations = report.iterations;

  const CVec w_nr = nonrobust_baseline(cr.g_hat, sc);
  rec.nonrobust_rate = achievable_rate(g_true, w_nr, sc);
  rec.nonrobust_power = cnorm_sq(w_nr);
  rec.nonrobust_outage = rec.nonrobust_rate <= sc.rate_threshold;

  rec.crb_m2 = crb(Efim{map.evaluate(report.final_covariances), std::nullopt});
  rec.solved = true;
  return rec;
}

namespace {

// Runs trials 0..n-1 on a small worker pool; results land in trial order.
std::vector<TrialRecord> run_trials(const Scenario& sc, const RrConfig& rr_cfg,
                                    uint64_t base_seed, int n_trials, double ratio,
                                    int threads) {
  std::vector<TrialRecord> records(n_trials);
  std::atomic<int> next{0};
  int n_workers = threads > 0 ? threads : int(std::thread::hardware_concurrency());
  n_workers = std::max(1, std::min(n_workers, n_trials));
  auto worker = [&]() {
    while (true) {
      const int t = next.fetch_add(1);
      if (t >= n_trials) break;
      try {
        records[t] = run_trial(sc, rr_cfg, base_seed, t, ratio);
      } catch (const Error&) {
        records[t].trial_id = t;
        records[t].ratio = ratio;
        records[t].solved = false;
      }
    }
  };
  std::vector<std::thread> pool;
  for (int i = 1; i < n_workers; ++i) pool.emplace_back(worker);
  worker();
  for (auto& th : pool) th.join();
  return records;
}

void write_file(const std::string& dir, const std::string& name, const std::string& text) {
  std::filesystem::create_directories(dir);
  std::ofstream f(dir + "/" + name);
  f << text;
}

std::string format_double(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.12g", v);
  return buf;
}

std::string cdf_curves_csv(const std::vector<TrialRecord>& records) {
  std::ostringstream out;
  out << "ratio,design,rate_bps_hz,cdf\n";
  std::vector<double> ratios;
  for (const auto& r : records)
    if (std::find(ratios.begin(), ratios.end(), r.ratio) == ratios.end())
      ratios.push_back(r.ratio);
  for (double ratio : ratios) {
    for (const char* design : {"robust", "nonrobust"}) {
      std::vector<double> rates;
      for (const auto& r : records) {
        if (r.ratio != ratio || !r.solved) continue;
        rates.push_back(std::string(design) == "robust" ? r.robust_rate : r.nonrobust_rate);
      }
      std::sort(rates.begin(), rates.end());
      const size_t n = rates.size();
      for (size_t i = 0; i < n; ++i)
        out << format_double(ratio) << ',' << design << ',' << format_double(rates[i]) << ','
            << format_double(double(i + 1) / double(n)) << '\n';
    }
  }
  return out.str();
}

const char* kCdfPlotScript = R"(# gnuplot script: rate CDF per design and frame ratio
set datafile separator ','
set key bottom right
set xlabel 'data rate (bps/Hz)'
set ylabel 'CDF'
set grid
plot for [r in ratios] for [d in "robust nonrobust"] \
  'cdf_curves.csv' using 3:($0 >= 0 && strcol(2) eq d && column(1) == real(r) ? $4 : NaN) \
  with steps title sprintf('%s r=%s', d, r)
# Define the ratio list before plotting, e.g.:  ratios = "0.125 0.25 0.375"
)";

const char* kTradeoffPlotScript = R"(# gnuplot script: CRB vs data rate trade-off across antenna counts
set datafile separator ','
set key top right
set xlabel 'mean data rate (bps/Hz)'
set ylabel 'mean CRB (m^2)'
set logscale y
set grid
plot 'tradeoff.csv' using 4:3:(sprintf('N=%d r=%.3f', int(column(1)), column(2))) \
  with labels point pt 7 offset char 1,0.5 notitle
)";

}  // namespace

std::string csv_from_records(const std::vector<TrialRecord>& records) {
  std::ostringstream out;
  out << "trial_id,ratio,design,rate_bps_hz,power_w,outage\n";
  for (const auto& r : records) {
    if (!r.solved) continue;
    out << r.trial_id << ',' << format_double(r.ratio) << ",robust,"
        << format_double(r.robust_rate) << ',' << format_double(r.robust_power) << ','
        << (r.robust_outage ? 1 : 0) << '\n';
    out << r.trial_id << ',' << format_double(r.ratio) << ",nonrobust,"
        << format_double(r.nonrobust_rate) << ',' << format_double(r.nonrobust_power) << ','
        << (r.nonrobust_outage ? 1 : 0) << '\n';
  }
  return out.str();
}

McResult run_mc_cdf(const ExperimentConfig& config) {
  config.validate();
  McResult result;
  int failures = 0, total = 0;
  for (double ratio : config.frame_ratios) {
    std::vector<TrialRecord> batch =
        run_trials(config.scenario, config.rr, config.base_seed, config.trials, ratio,
                   config.threads);
    for (auto& r : batch) {
      total += 1;
      if (!r.solved) failures += 1;
      result.records.push_back(std::move(r));
    }
  }
  result.failure_rate = total > 0 ? double(failures) / total : 0.0;
  if (!config.output_dir.empty()) {
    write_file(config.output_dir, "cdf.csv", csv_from_records(result.records));
    write_file(config.output_dir, "cdf_curves.csv", cdf_curves_csv(result.records));
    write_file(config.output_dir, "plot_cdf.gp", kCdfPlotScript);
  }
  return result;
}

TradeoffResult run_tradeoff(const ExperimentConfig& config) {
  config.validate();
  TradeoffResult result;
  int failures = 0, total = 0;
  for (int nb : config.antenna_counts) {
    for (double ratio : config.frame_ratios) {
      Scenario sc = config.scenario;
      sc.n_antennas = nb;
      std::vector<TrialRecord> batch =
          run_trials(sc, config.rr, config.base_seed, config.trials, ratio, config.threads);
      TradeoffRow row;
      row.n_antennas = nb;
      row.ratio = ratio;
      for (const auto& r : batch) {
        total += 1;
        if (!r.solved) {
          failures += 1;
          continue;
        }
        row.solved_trials += 1;
        row.mean_crb_m2 += r.crb_m2;
        row.mean_rate_bps_hz += r.robust_rate;
        row.mean_power_w += r.robust_power;
      }
      if (row.solved_trials > 0) {
        row.mean_crb_m2 /= row.solved_trials;
        row.mean_rate_bps_hz /= row.solved_trials;
        row.mean_power_w /= row.solved_trials;
      }
      result.rows.push_back(row);
    }
  }
  std::sort(result.rows.begin(), result.rows.end(), [](const TradeoffRow& a, const TradeoffRow& b) {
    return a.n_antennas != b.n_antennas ? a.n_antennas < b.n_antennas : a.ratio < b.ratio;
  });
  result.failure_rate = total > 0 ? double(failures) / total : 0.0;
  if (!config.output_dir.empty()) {
    std::ostringstream out;
    out << "n_antennas,ratio,mean_crb_m2,mean_rate_bps_hz,mean_power_w\n";
    for (const auto& row : result.rows)
      out << row.n_antennas << ',' << format_double(row.ratio) << ','
          << format_double(row.mean_crb_m2) << ',' << format_double(row.mean_rate_bps_hz) << ','
          << format_double(row.mean_power_w) << '\n';
    write_file(config.output_dir, "tradeoff.csv", out.str());
    write_file(config.output_dir, "plot_tradeoff.gp", kTradeoffPlotScript);
  }
  return result;
}

OutageEstimate empirical_outage(const std::vector<double>& rates, double rate_threshold) {
  if (rates.empty()) throw InvalidInput("empirical_outage: no samples");
  OutageEstimate e;
  e.n = int(rates.size());
  int count = 0;
  for (double r : rates)
    if (r <= rate_threshold) ++count;
  e.p = double(count) / e.n;
  const double half = 1.959963984540054 * std::sqrt(std::max(e.p * (1.0 - e.p), 1e-12) / e.n);
  e.lo = std::max(0.0, e.p - half);
  e.hi = std::min(1.0, e.p + half);
  return e;
}

ValidationResult run_validation(const ExperimentConfig& config, int n_trials, int samples) {
  config.validate();
  ValidationResult out;
  const Scenario& base = config.scenario;
  for (int t = 0; t < n_trials; ++t) {
    Scenario sc = base;
    TrialRecord rec;
    std::ostringstream line;
    try {
      rec = run_trial(sc, config.rr, config.base_seed, t, sc.frame_ratio);
    } catch (const Error& e) {
      line << "trial " << t << ": error " << e.what();
      out.lines.push_back(line.str());
      out.trials += 1;
      continue;
    }
    out.trials += 1;
    if (!rec.solved) {
      line << "trial " << t << ": solver did not produce a feasible design";
      out.lines.push_back(line.str());
      continue;
    }

    // Re-run the trial's design path to recover the beams, then sample the
    // model's own positioning-error distribution at the solved beams.
    std::vector<double> thetas(sc.num_bs());
    for (int i = 0; i < sc.num_bs(); ++i)
      thetas[i] = estimated_angle(rec.u_hat, sc.bs_positions[i]);
    const AffineEfimMap map = build_affine_map(sc, rec.u_hat, thetas);
    const Anchor anchor = isotropic_anchor(sc, rec.u_hat, rec.serving_index, map);
    const RrReport report = run(sc, config.rr, anchor, rec.u_hat, rec.serving_index);
    if (!report.feasible) {
      line << "trial " << t << ": design infeasible on revalidation";
      out.lines.push_back(line.str());
      continue;
    }
    const FimInputs inputs = make_fim_inputs(sc, rec.u_hat, report.beamformers.vectors);
    const SymMatrix j = surrogate_efim(inputs).matrix;
    const SymMatrix half = spd_inv_sqrt(j);
    Rng rng(config.base_seed * 7919 + t);
    int outages = 0;
    for (int s = 0; s < samples; ++s) {
      const Vec2 e_p{rng.normal(), rng.normal()};
      const Vec2 delta_u = half.mul(e_p);
      const ChannelRealization cr = channel_split(sc, rec.serving_index, rec.u_hat, delta_u);
      CVec g(cr.g_hat.size());
      for (size_t k = 0; k < g.size(); ++k) g[k] = cr.g_hat[k] + cr.g_err[k];
      const double rate =
          achievable_rate(g, report.beamformers.vectors[rec.serving_index], sc);
      if (rate <= sc.rate_threshold) ++outages;
    }
    const double p_hat = double(outages) / samples;
    const double sigma_hat = std::sqrt(sc.outage_prob * (1.0 - sc.outage_prob) / samples);
    const bool pass = p_hat <= sc.outage_prob + 3.0 * sigma_hat;
    if (pass) out.passed += 1;
    line << "trial " << t << ": model outage " << p_hat << " vs bound " << sc.outage_prob
         << " (3-sigma slack " << 3.0 * sigma_hat << ") -> " << (pass ? "ok" : "VIOLATED");
    out.lines.push_back(line.str());
  }
  out.ok = out.passed == out.trials && out.trials > 0;
  return out;
}

}  // namespace rrbeam
