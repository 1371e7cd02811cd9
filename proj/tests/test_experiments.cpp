#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <sstream>

#include "rrbeam/experiments.hpp"

using namespace rrbeam;

namespace {

ExperimentConfig small_config() {
  ExperimentConfig cfg;
  cfg.scenario = default_scenario();
  cfg.scenario.bs_positions = {{50, 50}, {100, 50}, {75, 100}};
  cfg.scenario.channel_gains.assign(3, cplx(1.0, 1.0) / std::sqrt(2.0));
  cfg.scenario.n_antennas = 8;
  cfg.trials = 4;
  cfg.base_seed = 9;
  cfg.frame_ratios = {1.0};
  cfg.antenna_counts = {4, 8};
  cfg.rr.epsilon = 1.0;
  cfg.rr.max_iterations = 10;
  cfg.threads = 2;
  cfg.output_dir.clear();
  return cfg;
}

}  // namespace

TEST_CASE("nonrobust baseline meets the threshold exactly under perfect CSI") {
  Scenario sc = default_scenario();
  sc.frame_ratio = 1.0;
  ChannelRealization cr = channel_split(sc, 1, {70.0, 80.0}, {0.0, 0.0});
  CVec w = nonrobust_baseline(cr.g_hat, sc);
  CHECK(achievable_rate(cr.g_hat, w, sc) == doctest::Approx(sc.rate_threshold).epsilon(1e-9));

  // Doubling the channel norm divides the power by four.
  CVec g2(cr.g_hat.size());
  for (size_t k = 0; k < g2.size(); ++k) g2[k] = 2.0 * cr.g_hat[k];
  CHECK(cnorm_sq(nonrobust_baseline(g2, sc)) ==
        doctest::Approx(cnorm_sq(w) / 4.0).epsilon(1e-12));

  // Gamma constant at r = 1, Rbar = 0.3, unit noise power.
  CHECK(cnorm_sq(w) * cnorm_sq(cr.g_hat) ==
        doctest::Approx((std::exp2(0.6) - 1.0)).epsilon(1e-12));
  CHECK(std::exp2(0.6) - 1.0 == doctest::Approx(0.51572).epsilon(1e-4));

  CHECK_THROWS_AS(nonrobust_baseline(CVec(8, cplx(0, 0)), sc), DegenerateChannel);
}

TEST_CASE("empirical outage") {
  CHECK(empirical_outage({1.0, 2.0, 3.0}, 0.5).p == 0.0);
  OutageEstimate half = empirical_outage({0.1, 0.2, 0.9, 0.8}, 0.5);
  CHECK(half.p == doctest::Approx(0.5));
  CHECK(half.lo < 0.5);
  CHECK(half.hi > 0.5);
  CHECK_THROWS_AS(empirical_outage({}, 0.5), InvalidInput);
}

TEST_CASE("config parsing") {
  const std::string text = R"({
    "scenario": {"n_antennas": 4, "frame_ratio": 0.5, "outage_prob": 0.1},
    "trials": 7,
    "base_seed": 123,
    "frame_ratios": [0.25],
    "mode": "tradeoff",
    "rr": {"epsilon": 2.5, "max_iterations": 9}
  })";
  ExperimentConfig cfg = config_from_json(text);
  CHECK(cfg.scenario.n_antennas == 4);
  CHECK(cfg.scenario.outage_prob == doctest::Approx(0.1));
  CHECK(cfg.trials == 7);
  CHECK(cfg.base_seed == 123);
  CHECK(cfg.frame_ratios == std::vector<double>{0.25});
  CHECK(cfg.mode == "tradeoff");
  CHECK(cfg.rr.epsilon == doctest::Approx(2.5));
  CHECK(cfg.rr.max_iterations == 9);

  CHECK_THROWS_AS(config_from_json("{ not json"), ConfigError);
  CHECK_THROWS_AS(config_from_json(R"({"mode": "bogus"})"), ConfigError);
  CHECK_THROWS_AS(config_from_json(R"({"trials": 0})"), ConfigError);
}

TEST_CASE("single trial record is self-consistent") {
  ExperimentConfig cfg = small_config();
  TrialRecord rec = run_trial(cfg.scenario, cfg.rr, cfg.base_seed, 0, 1.0);
  REQUIRE(rec.solved);
  CHECK(rec.robust_rate >= 0.0);
  CHECK(rec.nonrobust_rate >= 0.0);
  CHECK(rec.robust_power > 0.0);
  CHECK(rec.nonrobust_power > 0.0);
  CHECK(rec.robust_outage == (rec.robust_rate <= cfg.scenario.rate_threshold));
  CHECK(rec.crb_m2 > 0.0);

  // Determinism.
  TrialRecord again = run_trial(cfg.scenario, cfg.rr, cfg.base_seed, 0, 1.0);
  CHECK(again.robust_rate == rec.robust_rate);
  CHECK(again.robust_power == rec.robust_power);
  CHECK(again.u_hat.x == rec.u_hat.x);
}

TEST_CASE("mc cdf run: reproducible records and monotone CDF") {
  ExperimentConfig cfg = small_config();
  McResult a = run_mc_cdf(cfg);
  McResult b = run_mc_cdf(cfg);
  REQUIRE(a.records.size() == size_t(cfg.trials));
  CHECK(a.failure_rate == 0.0);
  CHECK(csv_from_records(a.records) == csv_from_records(b.records));

  // Thread-count independence.
  ExperimentConfig serial = cfg;
  serial.threads = 1;
  McResult c = run_mc_cdf(serial);
  CHECK(csv_from_records(a.records) == csv_from_records(c.records));

  // CSV recount oracle for the outage fraction.
  std::vector<double> robust_rates;
  int outage_flags = 0;
  std::istringstream csv(csv_from_records(a.records));
  std::string line;
  std::getline(csv, line);  // header
  while (std::getline(csv, line)) {
    if (line.find(",robust,") == std::string::npos) continue;
    const auto last_comma = line.rfind(',');
    outage_flags += (line.substr(last_comma + 1) == "1") ? 1 : 0;
    const auto rate_start = line.find(",robust,") + 8;
    robust_rates.push_back(std::stod(line.substr(rate_start)));
  }
  REQUIRE(!robust_rates.empty());
  OutageEstimate est = empirical_outage(robust_rates, cfg.scenario.rate_threshold);
  CHECK(est.p == doctest::Approx(double(outage_flags) / robust_rates.size()));
}

TEST_CASE("power accounting matches the covariance trace") {
  ExperimentConfig cfg = small_config();
  const double ratio = 1.0;
  Scenario sc = cfg.scenario;
  sc.frame_ratio = ratio;

  TrialRecord rec = run_trial(cfg.scenario, cfg.rr, cfg.base_seed, 1, ratio);
  REQUIRE(rec.solved);

  // Reproduce the trial pipeline and compare the recorded power with the
  // trace of the returned covariances.
  std::vector<double> thetas;
  for (int i = 0; i < sc.num_bs(); ++i)
    thetas.push_back(estimated_angle(sc.user_position, sc.bs_positions[i]));
  const AffineEfimMap true_map = build_affine_map(sc, sc.user_position, thetas);
  const Anchor draw_anchor =
      isotropic_anchor(sc, sc.user_position, serving_bs(sc, sc.user_position), true_map);
  const Estimate est = draw_estimate(sc, Efim{draw_anchor.efim0, std::nullopt},
                                     cfg.base_seed * 0x9e3779b97f4a7c15ULL + 1);
  const int serving = serving_bs(sc, est.u_hat);
  const AffineEfimMap map = build_affine_map(sc, est.u_hat, est.thetas_hat);
  const Anchor anchor = isotropic_anchor(sc, est.u_hat, serving, map);
  RrReport rep = run(sc, cfg.rr, anchor, est.u_hat, serving);
  REQUIRE(rep.feasible);
  double total = 0.0;
  for (const HermMatrix& c : rep.final_covariances) total += c.trace();
  CHECK(rec.robust_power == doctest::Approx(total).epsilon(1e-9));
}

TEST_CASE("tradeoff sweep shape") {
  ExperimentConfig cfg = small_config();
  cfg.trials = 2;
  cfg.antenna_counts = {4, 8};
  cfg.frame_ratios = {0.5, 1.0};
  TradeoffResult res = run_tradeoff(cfg);
  REQUIRE(res.rows.size() == 4);
  CHECK(res.rows[0].n_antennas == 4);
  CHECK(res.rows[0].ratio == doctest::Approx(0.5));
  CHECK(res.rows[3].n_antennas == 8);
  for (const auto& row : res.rows) {
    CHECK(row.solved_trials == 2);
    CHECK(row.mean_crb_m2 > 0.0);
    CHECK(row.mean_power_w > 0.0);
  }
}
