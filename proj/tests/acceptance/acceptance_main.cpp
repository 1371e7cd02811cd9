// Acceptance suite: one pass/fail line per criterion, nonzero exit when
// any fails. Criteria are property-based plus qualitative reproduction of
// the paper-style Monte Carlo studies at desk scale.

#include <chrono>
#include <cmath>
#include <cstdio>
#include <string>
#include <vector>

#include "rrbeam/experiments.hpp"
#include "rrbeam/restriction.hpp"
#include "rrbeam/rng.hpp"

using namespace rrbeam;

namespace {

int g_failures = 0;

void report(int id, const std::string& name, bool pass, const std::string& detail,
            double seconds) {
  std::printf("[%s] criterion %d: %s — %s (%.1f s)\n", pass ? "PASS" : "FAIL", id, name.c_str(),
              detail.c_str(), seconds);
  std::fflush(stdout);
  if (!pass) ++g_failures;
}

struct Timer {
  std::chrono::steady_clock::time_point t0 = std::chrono::steady_clock::now();
  double seconds() const {
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  }
};

Scenario three_bs_scenario(int n_antennas) {
  Scenario sc = default_scenario();
  sc.bs_positions = {{50, 50}, {100, 50}, {75, 100}};
  sc.channel_gains.assign(3, cplx(1.0, 1.0) / std::sqrt(2.0));
  sc.n_antennas = n_antennas;
  sc.frame_ratio = 1.0;
  return sc;
}

std::vector<double> estimated_thetas(const Scenario& sc, Vec2 u_hat) {
  std::vector<double> thetas;
  for (int i = 0; i < sc.num_bs(); ++i)
    thetas.push_back(estimated_angle(u_hat, sc.bs_positions[i]));
  return thetas;
}

RrConfig desk_rr_config() {
  // At Table-1 parameters the optimal powers sit near 1e8 W, so the spec
  // default 1e-4 W trace threshold lies below the conic solver's noise
  // floor; 1 W (~1e-8 relative) is the desk-scale stopping rule.
  RrConfig cfg;
  cfg.epsilon = 1.0;
  cfg.max_iterations = 25;
  return cfg;
}

// --- criterion 1: Bernstein tail validity --------------------------------

void criterion_1() {
  Timer timer;
  Rng rng(101);
  bool pass = true;
  std::string detail;
  const int samples = 100000;
  for (int trial = 0; trial < 10 && pass; ++trial) {
    SymMatrix s(2);
    s.set(0, 0, rng.normal());
    s.set(1, 1, rng.normal());
    s.set(0, 1, rng.normal());
    std::vector<double> sv = {rng.normal(), rng.normal()};
    for (double zeta : {1.0, 2.0, 3.0}) {
      const double bound = bernstein_bound(s, sv, zeta);
      int exceed = 0;
      for (int k = 0; k < samples; ++k) {
        const double z0 = rng.normal(), z1 = rng.normal();
        const double chi = s(0, 0) * z0 * z0 + 2 * s(0, 1) * z0 * z1 + s(1, 1) * z1 * z1 +
                           2 * (z0 * sv[0] + z1 * sv[1]);
        if (chi >= bound) ++exceed;
      }
      const double p = std::exp(-zeta);
      const double limit = p + 3.0 * std::sqrt(p * (1.0 - p) / samples);
      if (double(exceed) / samples > limit) {
        pass = false;
        detail = "tail mass " + std::to_string(double(exceed) / samples) + " > " +
                 std::to_string(limit) + " at zeta " + std::to_string(zeta);
      }
    }
  }
  if (pass) detail = "empirical tail within e^{-zeta} + 3 sigma for 10 (S, s), zeta in {1,2,3}";
  report(1, "Bernstein tail validity", pass && timer.seconds() < 10.0,
         detail + (timer.seconds() >= 10.0 ? "; over 10 s budget" : ""), timer.seconds());
}

// --- criterion 2: EFIM oracle equivalence --------------------------------

void criterion_2() {
  Timer timer;
  Rng rng(202);
  double worst = 0.0;
  for (int trial = 0; trial < 100; ++trial) {
    const int m = 2 + int(rng.uniform01() * 7);
    FimInputs in;
    in.xi = 0.5 + rng.uniform01();
    in.sigma_b = 0.005 + 0.05 * rng.uniform01();
    for (int i = 0; i < m; ++i) {
      in.lambdas.emplace_back(rng.normal(), rng.normal());
      const double ang = 6.283185307179586 * rng.uniform01();
      in.alphas.push_back({std::cos(ang) / 0.3, std::sin(ang) / 0.3});
      in.channel_norms.push_back(0.5 + rng.uniform01());
    }
    const SymMatrix a = efim_position(in, 1.0, EfimPath::ClosedForm).matrix;
    const SymMatrix b = efim_position(in, 1.0, EfimPath::Assembly).matrix;
    worst = std::max(worst, (a - b).frobenius_norm() / a.frobenius_norm());
  }
  const bool pass = worst <= 1e-9 && timer.seconds() < 5.0;
  report(2, "EFIM closed form vs Schur-complement assembly", pass,
         "worst relative Frobenius gap " + std::to_string(worst) + " over 100 scenarios",
         timer.seconds());
}

// --- criterion 3: Taylor correctness --------------------------------------

void criterion_3() {
  Timer timer;
  Rng rng(303);
  bool pass = true;
  std::string detail = "residuals <= 1e-6 at t = 1e-4 ||J0||, slopes ";
  double worst_slope_lo = 2.0, worst_slope_hi = 2.0;
  for (int trial = 0; trial < 20 && pass; ++trial) {
    // Well-conditioned random anchors: eigenvalues in [0.5, 2].
    const double ang = 6.283185307179586 * rng.uniform01();
    Mat q(2, 2);
    q(0, 0) = std::cos(ang);
    q(0, 1) = -std::sin(ang);
    q(1, 0) = std::sin(ang);
    q(1, 1) = std::cos(ang);
    Mat d(2, 2);
    d(0, 0) = 0.5 + 1.5 * rng.uniform01();
    d(1, 1) = 0.5 + 1.5 * rng.uniform01();
    Anchor anchor;
    anchor.efim0 = SymMatrix(q * d * transpose(q));
    anchor.varpi0 = 0.5 + rng.uniform01();

    Mat dm(2, 2);
    for (int i = 0; i < 2; ++i)
      for (int j = 0; j < 2; ++j) dm(i, j) = rng.normal();
    SymMatrix dir(dm);
    dir = dir.scaled(1.0 / dir.frobenius_norm());
    const Vec2 x{rng.normal(), rng.normal()};
    const double scale = anchor.efim0.frobenius_norm();

    auto residuals = [&](double t) {
      Linearization lin = linearize(anchor, dir.scaled(t), anchor.varpi0, x);
      const SymMatrix truth = spd_inverse(anchor.efim0 + dir.scaled(t));
      const double r_inv = (lin.inv_lin - truth).frobenius_norm() / truth.frobenius_norm();
      const double f_true = std::pow(truth.frobenius_norm(), 2);
      const double r_frob = std::abs(lin.frob_lin - f_true) / f_true;
      const double q_true = truth.quad_form(x);
      const double r_quad = std::abs(lin.quad_lin - q_true) / (1.0 + std::abs(q_true));
      return std::vector<double>{r_inv, r_frob, r_quad};
    };

    const auto at4 = residuals(1e-4 * scale);
    for (double r : at4)
      if (r > 1e-6) {
        pass = false;
        detail = "residual " + std::to_string(r) + " above 1e-6 at t = 1e-4 ||J0||";
      }
    const auto at2 = residuals(1e-2 * scale);
    for (size_t i = 0; i < at2.size() && pass; ++i) {
      if (at4[i] <= 0.0 || at2[i] <= 0.0) continue;
      const double slope = std::log(at2[i] / at4[i]) / std::log(1e2);
      worst_slope_lo = std::min(worst_slope_lo, slope);
      worst_slope_hi = std::max(worst_slope_hi, slope);
      if (slope < 1.8 || slope > 2.2) {
        pass = false;
        detail = "log-log slope " + std::to_string(slope) + " outside 2 +- 0.2";
      }
    }
  }
  if (pass)
    detail += "in [" + std::to_string(worst_slope_lo) + ", " + std::to_string(worst_slope_hi) + "]";
  report(3, "first-order Taylor finite-difference check", pass, detail, timer.seconds());
}

// --- criterion 4: conic solver sanity -------------------------------------

void criterion_4() {
  Timer timer;
  conic::Problem p;
  const int x = p.add_psd_block("x", 2);
  p.objective.add_block(x, SymMatrix::identity(2));
  conic::LinExpr e;
  e.add_block(x, SymMatrix::diag({2.0, 1.0}));
  e.add_constant(-1.0);
  p.add_linear("gain", std::move(e), conic::Sense::GreaterEqual);
  conic::Solution s = conic::solve(p);
  const bool analytic_ok =
      s.status == conic::SolveStatus::Optimal && std::abs(s.objective - 0.5) <= 1e-6;

  conic::Problem q;
  const int t = q.add_nonneg_scalar("t");
  conic::LinExpr lo;
  lo.add_scalar(t, 1.0);
  lo.add_constant(-1.0);
  q.add_linear("lower", std::move(lo), conic::Sense::GreaterEqual);
  conic::LinExpr hi;
  hi.add_scalar(t, 1.0);
  q.add_linear("upper", std::move(hi), conic::Sense::LessEqual);
  const bool infeas_ok = conic::solve(q).status == conic::SolveStatus::Infeasible;

  const bool pass = analytic_ok && infeas_ok && timer.seconds() < 1.0;
  report(4, "conic solver sanity", pass,
         "analytic objective " + std::to_string(s.objective) + ", infeasible probe " +
             (infeas_ok ? "detected" : "missed"),
         timer.seconds());
}

// --- criterion 5: R&R behavior ---------------------------------------------

void criterion_5() {
  Timer timer;
  Scenario sc = three_bs_scenario(8);
  RrConfig cfg;  // spec defaults: epsilon 1e-4 W, max 50 iterations
  cfg.max_iterations = 25;
  bool pass = true;
  std::string detail;
  int feasible_runs = 0;
  for (uint64_t seed = 1; seed <= 20 && pass; ++seed) {
    const AffineEfimMap true_map =
        build_affine_map(sc, sc.user_position, estimated_thetas(sc, sc.user_position));
    const Anchor draw_anchor =
        isotropic_anchor(sc, sc.user_position, serving_bs(sc, sc.user_position), true_map);
    const Estimate est = draw_estimate(sc, Efim{draw_anchor.efim0, std::nullopt}, seed);
    const int serving = serving_bs(sc, est.u_hat);
    const AffineEfimMap map = build_affine_map(sc, est.u_hat, est.thetas_hat);
    const Anchor anchor = isotropic_anchor(sc, est.u_hat, serving, map);
    RrReport rep;
    try {
      rep = run(sc, cfg, anchor, est.u_hat, serving);
    } catch (const Error& err) {
      pass = false;
      detail = std::string("seed ") + std::to_string(seed) + ": " + err.what();
      break;
    }
    for (size_t i = 1; i < rep.objective_history.size(); ++i) {
      if (rep.objective_history[i] >
          rep.objective_history[i - 1] * (1.0 + 1e-6) + 1e-9) {
        pass = false;
        detail = "objective increased at seed " + std::to_string(seed) + " step " +
                 std::to_string(i);
      }
    }
    if (rep.feasible) {
      ++feasible_runs;
      if (!feasible(exact_constraint(sc, est.u_hat, rep.beamformers)).feasible) {
        pass = false;
        detail = "feasible report fails the from-scratch check at seed " + std::to_string(seed);
      }
    }
  }
  if (pass)
    detail = std::to_string(feasible_runs) +
             "/20 runs feasible; every history non-increasing within 1e-6 relative slack";
  pass = pass && feasible_runs == 20 && timer.seconds() < 300.0;
  report(5, "R&R iteration behavior on 20 seeded scenarios", pass, detail, timer.seconds());
}

// --- criterion 6: outage guarantee -----------------------------------------

void criterion_6() {
  Timer timer;
  ExperimentConfig cfg;
  cfg.scenario = default_scenario();
  cfg.scenario.n_antennas = 16;
  cfg.trials = 2000;
  cfg.base_seed = 606;
  cfg.frame_ratios = {1.0};
  cfg.rr = desk_rr_config();
  cfg.threads = 0;
  cfg.output_dir.clear();
  McResult res = run_mc_cdf(cfg);

  std::vector<double> robust, nonrobust;
  for (const auto& r : res.records) {
    if (!r.solved) continue;
    robust.push_back(r.robust_rate);
    nonrobust.push_back(r.nonrobust_rate);
  }
  bool pass = res.failure_rate <= 0.01 && !robust.empty();
  std::string detail;
  if (!pass) {
    detail = "solver failure rate " + std::to_string(res.failure_rate);
  } else {
    const OutageEstimate er = empirical_outage(robust, cfg.scenario.rate_threshold);
    const OutageEstimate en = empirical_outage(nonrobust, cfg.scenario.rate_threshold);
    pass = er.p <= 0.05 + 0.02 && er.p <= en.p;
    detail = "robust outage " + std::to_string(er.p) + " (<= 0.07), nonrobust " +
             std::to_string(en.p) + ", n = " + std::to_string(er.n);
  }
  pass = pass && timer.seconds() < 1800.0;
  report(6, "outage guarantee at N_B = 16, r = 1, 2000 trials", pass, detail, timer.seconds());
}

// --- criterion 7: trade-off trends -----------------------------------------

void criterion_7() {
  Timer timer;
  bool pass = true;
  std::string detail;

  // CRB strictly decreasing, rate non-decreasing across antenna counts.
  ExperimentConfig sweep;
  sweep.scenario = default_scenario();
  sweep.trials = 100;
  sweep.base_seed = 707;
  sweep.frame_ratios = {0.25};
  sweep.antenna_counts = {8, 16, 32, 64};
  sweep.rr = desk_rr_config();
  sweep.output_dir.clear();
  TradeoffResult res = run_tradeoff(sweep);
  for (size_t i = 1; i < res.rows.size() && pass; ++i) {
    if (!(res.rows[i].mean_crb_m2 < res.rows[i - 1].mean_crb_m2)) {
      pass = false;
      detail = "mean CRB not strictly decreasing from N_B " +
               std::to_string(res.rows[i - 1].n_antennas) + " to " +
               std::to_string(res.rows[i].n_antennas);
    }
    if (pass && res.rows[i].mean_rate_bps_hz + 1e-12 < res.rows[i - 1].mean_rate_bps_hz) {
      pass = false;
      detail = "mean rate decreased with more antennas";
    }
  }

  // For fixed N_B the rate decreases as r grows.
  ExperimentConfig ratios;
  ratios.scenario = default_scenario();
  ratios.scenario.n_antennas = 16;
  ratios.trials = 100;
  ratios.base_seed = 708;
  ratios.frame_ratios = {1.0 / 8, 2.0 / 8, 3.0 / 8};
  ratios.antenna_counts = {16};
  ratios.rr = desk_rr_config();
  ratios.output_dir.clear();
  TradeoffResult rres = run_tradeoff(ratios);
  for (size_t i = 1; i < rres.rows.size() && pass; ++i) {
    if (!(rres.rows[i].mean_rate_bps_hz < rres.rows[i - 1].mean_rate_bps_hz)) {
      pass = false;
      detail = "mean rate did not decrease as r grew";
    }
  }

  // Prelog law is exact: rate(r1)/rate(r2) = (1+r2)/(1+r1) for a fixed
  // received signal.
  if (pass) {
    Scenario a = default_scenario();
    Scenario b = default_scenario();
    a.frame_ratio = 1.0 / 8;
    b.frame_ratio = 3.0 / 8;
    CVec g = {cplx(1, 0)};
    CVec w = {cplx(2.5, 0)};
    const double ra = achievable_rate(g, w, a);
    const double rb = achievable_rate(g, w, b);
    const double lhs = ra / rb;
    const double rhs = (1.0 + b.frame_ratio) / (1.0 + a.frame_ratio);
    if (std::abs(lhs - rhs) > 1e-12 * rhs) {
      pass = false;
      detail = "prelog ratio off by " + std::to_string(std::abs(lhs - rhs));
    }
  }
  if (pass) {
    detail = "CRB strictly decreasing and rate non-decreasing in N_B; rate decreasing in r; "
             "prelog ratio exact";
  }
  report(7, "CRB-rate trade-off trends", pass, detail, timer.seconds());
}

// --- criterion 8: rank-one extraction --------------------------------------

void criterion_8() {
  Timer timer;
  Rng rng(808);
  bool pass = true;
  std::string detail;
  for (int trial = 0; trial < 50 && pass; ++trial) {
    const int n = 2 + int(rng.uniform01() * 15);
    std::vector<cplx> w0(n);
    for (auto& v : w0) v = cplx(rng.normal(), rng.normal()) * std::pow(10.0, trial % 5);
    HermMatrix sigma = HermMatrix::outer(w0);
    ExtractedBeam eb = extract_beamformer(sigma);
    const double err = (HermMatrix::outer(eb.w) - sigma).frobenius_norm();
    if (!eb.rank_one_exact || err > 1e-9 * sigma.trace()) {
      pass = false;
      detail = "rank-one recovery error " + std::to_string(err / sigma.trace());
    }
  }

  // Extraction + rescale either returns a feasible beam set or raises.
  if (pass) {
    Scenario sc = three_bs_scenario(8);
    const AffineEfimMap true_map =
        build_affine_map(sc, sc.user_position, estimated_thetas(sc, sc.user_position));
    const Anchor draw_anchor =
        isotropic_anchor(sc, sc.user_position, serving_bs(sc, sc.user_position), true_map);
    for (uint64_t seed = 50; seed < 58 && pass; ++seed) {
      const Estimate est = draw_estimate(sc, Efim{draw_anchor.efim0, std::nullopt}, seed);
      const int serving = serving_bs(sc, est.u_hat);
      const AffineEfimMap map = build_affine_map(sc, est.u_hat, est.thetas_hat);
      const Anchor anchor = isotropic_anchor(sc, est.u_hat, serving, map);
      RrConfig cfg = desk_rr_config();
      RrReport rep = run(sc, cfg, anchor, est.u_hat, serving);
      if (rep.feasible &&
          !feasible(exact_constraint(sc, est.u_hat, rep.beamformers)).feasible) {
        pass = false;
        detail = "run returned infeasible beams without raising";
      }
    }
    // Exhausted rescales must raise.
    if (pass) {
      const Estimate est = draw_estimate(sc, Efim{draw_anchor.efim0, std::nullopt}, 99);
      BeamformerSet weak;
      weak.serving_index = serving_bs(sc, est.u_hat);
      weak.vectors.assign(3, CVec(sc.n_antennas, cplx(1e-6, 0.0)));
      RrConfig strict;
      strict.max_rescales = 1;
      bool raised = false;
      try {
        rescale_until_feasible(weak, sc, est.u_hat, strict, nullptr);
      } catch (const NotFeasibleAfterRescale&) {
        raised = true;
      }
      if (!raised) {
        pass = false;
        detail = "exhausted rescale did not raise NotFeasibleAfterRescale";
      }
    }
  }
  if (pass)
    detail = "rank-one recovery within 1e-9 tr{Sigma}; rescale raises on exhaustion";
  report(8, "rank-one extraction and rescale contract", pass, detail, timer.seconds());
}

}  // namespace

int main() {
  Timer total;
  criterion_1();
  criterion_2();
  criterion_3();
  criterion_4();
  criterion_5();
  criterion_8();
  criterion_7();
  criterion_6();
  std::printf("acceptance total: %.1f s, %d failure(s)\n", total.seconds(), g_failures);
  return g_failures == 0 ? 0 : 1;
}
