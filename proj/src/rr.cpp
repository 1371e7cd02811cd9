#include "rrbeam/rr.hpp"

#include <cmath>

#include "rrbeam/rng.hpp"

namespace rrbeam {

Estimate estimate_from_noise(const Scenario& sc, const Efim& anchor_efim, Vec2 e_p) {
  const SymMatrix half = spd_inv_sqrt(anchor_efim.matrix);
  Estimate est;
  est.u_hat = sc.user_position + half.mul(e_p);
  est.thetas_hat.reserve(sc.num_bs());
  for (int i = 0; i < sc.num_bs(); ++i)
    est.thetas_hat.push_back(estimated_angle(est.u_hat, sc.bs_positions[i]));
  return est;
}

Estimate draw_estimate(const Scenario& sc, const Efim& anchor_efim, uint64_t rng_seed) {
  Rng rng(rng_seed);
  const double e1 = rng.normal();
  const double e2 = rng.normal();
  return estimate_from_noise(sc, anchor_efim, {e1, e2});
}

FimInputs make_fim_inputs(const Scenario& sc, Vec2 position, const std::vector<CVec>& beams) {
  FimInputs in;
  in.xi = sc.xi();
  in.sigma_b = sc.clock_bias_std_ns;
  const int m = sc.num_bs();
  in.lambdas.reserve(m);
  in.alphas.reserve(m);
  in.channel_norms.reserve(m);
  for (int i = 0; i < m; ++i) {
    const CVec g = los_channel(sc, i, position);
    in.lambdas.push_back(cdot(g, beams[i]));
    in.alphas.push_back(geometry_derivatives(position, sc.bs_positions[i]).alpha);
    in.channel_norms.push_back(cnorm_sq(g));
  }
  return in;
}

DeterministicConstraint exact_constraint(const Scenario& sc, Vec2 u_hat,
                                         const BeamformerSet& beams) {
  const int serving = beams.serving_index;
  const FimInputs in = make_fim_inputs(sc, u_hat, beams.vectors);
  const Efim j = surrogate_efim(in);
  const CVec a_hat = steering_vector(sc, estimated_angle(u_hat, sc.bs_positions[serving]));
  const double beam_gain = std::norm(cdot(a_hat, beams.vectors[serving]));
  const double gamma = rate_gamma(sc, sc.channel_gains[serving]);
  return restrict_outage(u_hat, sc.bs_positions[serving], j, gamma, beam_gain, sc.outage_prob);
}

namespace {

DeterministicConstraint isotropic_constraint(const Scenario& sc, Vec2 u_hat, int serving,
                                             const AffineEfimMap& map, double power) {
  // Sigma_i = (P / N_B) I gives tr{Sigma_i V_i} = P / N_B for every BS.
  const double gain = power / double(sc.n_antennas);
  const SymMatrix j = map.evaluate_gains(std::vector<double>(sc.num_bs(), gain));
  const double gamma = rate_gamma(sc, sc.channel_gains[serving]);
  return restrict_outage(u_hat, sc.bs_positions[serving], Efim{j, std::nullopt}, gamma, gain,
                         sc.outage_prob);
}

}  // namespace

Anchor isotropic_anchor(const Scenario& sc, Vec2 u_hat, int serving_index,
                        const AffineEfimMap& map) {
  double power = 1.0;
  const double cap = std::ldexp(1.0, 60);
  while (true) {
    bool ok = false;
    try {
      const DeterministicConstraint dc = isotropic_constraint(sc, u_hat, serving_index, map, power);
      ok = feasible(dc).feasible;
    } catch (const SingularMatrix&) {
      ok = false;  // surrogate not yet PD at this power
    }
    if (ok) break;
    power *= 2.0;
    if (power > cap)
      throw NotFeasibleAfterRescale("isotropic_anchor: doubling search exhausted at 2^60 W");
  }

  Anchor anchor;
  const double per_entry = power / double(sc.n_antennas);
  anchor.covariances0.reserve(sc.num_bs());
  for (int i = 0; i < sc.num_bs(); ++i)
    anchor.covariances0.push_back(HermMatrix::identity(sc.n_antennas).scaled(per_entry));
  anchor.thetas0.assign(map.v_mats.size(), 0.0);
  for (int i = 0; i < sc.num_bs(); ++i)
    anchor.thetas0[i] = estimated_angle(u_hat, sc.bs_positions[i]);
  anchor.efim0 = map.evaluate_gains(std::vector<double>(sc.num_bs(), power / sc.n_antennas));

  const DeterministicConstraint dc =
      isotropic_constraint(sc, u_hat, serving_index, map, power);
  anchor.varpi0 = feasible(dc).tight.varpi;
  return anchor;
}

ExtractedBeam extract_beamformer(const HermMatrix& cov, double ratio_tol) {
  ExtractedBeam out;
  const int n = cov.dim();
  out.w.assign(n, cplx(0.0, 0.0));
  if (cov.frobenius_norm() == 0.0) return out;  // zero matrix -> zero beam, exact

  HermSpectrum sp = eig_sym(cov);
  const double l1 = std::max(sp.eigenvalues[0], 0.0);
  const double scale = std::sqrt(l1);
  out.w = sp.eigenvectors[0];
  for (cplx& v : out.w) v *= scale;
  // Exactness by the reconstruction defect (the eigenvalue-ratio test
  // misses the residual tail mass by a sqrt(n-1) factor at the boundary).
  out.rank_one_exact =
      (HermMatrix::outer(out.w) - cov).frobenius_norm() <= ratio_tol * cov.trace();

  // Phase convention: first nonzero entry real nonnegative.
  double maxmag = 0.0;
  for (const cplx& v : out.w) maxmag = std::max(maxmag, std::abs(v));
  for (const cplx& v : out.w) {
    if (std::abs(v) > 1e-12 * maxmag) {
      const cplx phase = std::conj(v) / std::abs(v);
      for (cplx& w : out.w) w *= phase;
      break;
    }
  }
  return out;
}

BeamformerSet rescale_until_feasible(BeamformerSet beams, const Scenario& sc, Vec2 u_hat,
                                     const RrConfig& config, int* rescales_out) {
  int count = 0;
  while (true) {
    if (feasible(exact_constraint(sc, u_hat, beams)).feasible) break;
    if (count >= config.max_rescales)
      throw NotFeasibleAfterRescale("rescale_until_feasible: max_rescales exhausted");
    const double f = 1.0 + config.delta_inc;
    for (CVec& w : beams.vectors)
      for (cplx& v : w) v *= f;
    ++count;
  }
  if (rescales_out) *rescales_out = count;
  return beams;
}

RrReport run(const Scenario& sc, const RrConfig& config, const Anchor& init, Vec2 u_hat,
             int serving_index) {
  std::vector<double> thetas_hat(sc.num_bs());
  for (int i = 0; i < sc.num_bs(); ++i)
    thetas_hat[i] = estimated_angle(u_hat, sc.bs_positions[i]);
  const AffineEfimMap map = build_affine_map(sc, u_hat, thetas_hat);

  conic::EmbeddedSolver embedded;
  conic::SolverBackend* backend = config.backend ? config.backend.get() : &embedded;

  RrReport report;
  Anchor anchor = init;
  std::vector<HermMatrix> covs;

  for (int n = 1; n <= config.max_iterations; ++n) {
    const AssembledSdp sdp = assemble_sdp(sc, anchor, u_hat, serving_index, map);
    const conic::Solution sol = backend->solve(sdp.problem, config.solver);
    report.last_status = sol.status;
    if (sol.status == conic::SolveStatus::Infeasible ||
        sol.status == conic::SolveStatus::Unbounded) {
      report.feasible = false;
      return report;  // subproblem infeasible at this anchor
    }
    if (sol.status != conic::SolveStatus::Optimal)
      throw SolverFailure("rr: conic solve returned " + conic::to_string(sol.status), n);

    covs = extract_covariances(sdp, sol);
    double total = 0.0;
    for (const HermMatrix& c : covs) total += c.trace();
    report.objective_history.push_back(total);
    report.iterations = n;

    const bool converged =
        n >= 2 && std::abs(report.objective_history[n - 1] - report.objective_history[n - 2]) <=
                      config.epsilon;

    if (converged || n == config.max_iterations) break;

    anchor.efim0 = map.evaluate(covs);
    anchor.varpi0 = sol.scalar_values[sdp.varpi_scalar];
    anchor.covariances0 = covs;
    anchor.thetas0 = thetas_hat;
  }

  report.final_covariances = covs;
  report.beamformers.serving_index = serving_index;
  report.beamformers.vectors.reserve(covs.size());
  report.rank_one_exact.reserve(covs.size());
  for (const HermMatrix& c : covs) {
    ExtractedBeam eb = extract_beamformer(c, config.rank_one_ratio_tol);
    report.beamformers.vectors.push_back(std::move(eb.w));
    report.rank_one_exact.push_back(eb.rank_one_exact);
  }

  report.beamformers =
      rescale_until_feasible(report.beamformers, sc, u_hat, config, &report.rescale_count);
  if (report.rescale_count > 0) {
    const double f2 = std::pow(1.0 + config.delta_inc, 2.0 * report.rescale_count);
    for (HermMatrix& c : report.final_covariances) c = c.scaled(f2);
  }
  report.feasible = feasible(exact_constraint(sc, u_hat, report.beamformers)).feasible;
  return report;
}

}  // namespace rrbeam
