#pragma once

// Restriction-and-relaxation orchestration: initialization, drawing the
// estimated position, iterated solve-and-relinearize, rank-one extraction
// and rescale-until-feasible.

#include <cstdint>
#include <memory>
#include <vector>

#include "rrbeam/conic.hpp"
#include "rrbeam/relaxation.hpp"
#include "rrbeam/restriction.hpp"
#include "rrbeam/scenario.hpp"

namespace rrbeam {

struct RrConfig {
  double epsilon = 1e-4;   // |trace change| stopping threshold, W
  double delta_inc = 0.1;  // rescale step
  int max_iterations = 50;
  int max_rescales = 200;
  double rank_one_ratio_tol = 1e-6;
  conic::SolveOptions solver{1e-8, 1e-9, 200, false};  // tighter than the
  // conic defaults so the extracted serving beam is cleanly rank one
  std::shared_ptr<conic::SolverBackend> backend;  // null -> embedded
};

struct RrReport {
  int iterations = 0;
  std::vector<double> objective_history;  // W
  std::vector<HermMatrix> final_covariances;
  BeamformerSet beamformers;
  std::vector<bool> rank_one_exact;
  int rescale_count = 0;
  bool feasible = false;
  conic::SolveStatus last_status = conic::SolveStatus::NumericalError;
};

struct Estimate {
  Vec2 u_hat;
  std::vector<double> thetas_hat;
};

// u^ = u + (J~_0)^{-1/2} e_p for a given noise vector (testing hook).
Estimate estimate_from_noise(const Scenario& sc, const Efim& anchor_efim, Vec2 e_p);

// Same with e_p drawn standard-normal from the seeded stream.
Estimate draw_estimate(const Scenario& sc, const Efim& anchor_efim, uint64_t rng_seed);

// FIM inputs for beams evaluated at a position (channels and geometry both
// taken there).
FimInputs make_fim_inputs(const Scenario& sc, Vec2 position, const std::vector<CVec>& beams);

// The exact restricted constraint (no Taylor terms) rebuilt from a beam
// set: surrogate EFIM at u_hat, serving beam gain along the estimated
// steering direction.
DeterministicConstraint exact_constraint(const Scenario& sc, Vec2 u_hat,
                                         const BeamformerSet& beams);

// Isotropic initialization Sigma_{i,0} = (P/N_B) I with P doubled from 1 W
// (cap 2^60) until the deterministic constraint holds at u_hat; varpi0 is
// set to its tight value. The anchor EFIM is the map evaluated at the
// initial covariances.
Anchor isotropic_anchor(const Scenario& sc, Vec2 u_hat, int serving_index,
                        const AffineEfimMap& map);

RrReport run(const Scenario& sc, const RrConfig& config, const Anchor& init, Vec2 u_hat,
             int serving_index);

// w = sqrt(lambda_max) v_max, with the first nonzero entry rotated to the
// nonnegative real axis; exact iff ||cov - w w^H||_F <= ratio_tol tr{cov}.
struct ExtractedBeam {
  CVec w;
  bool rank_one_exact = true;
};
ExtractedBeam extract_beamformer(const HermMatrix& cov, double ratio_tol = 1e-6);

// Multiplies every beam by (1 + delta_inc) until the exact restricted
// constraint holds; throws NotFeasibleAfterRescale past max_rescales.
// rescales_out reports the number of applied rescales when non-null.
BeamformerSet rescale_until_feasible(BeamformerSet beams, const Scenario& sc, Vec2 u_hat,
                                     const RrConfig& config, int* rescales_out = nullptr);

}  // namespace rrbeam
