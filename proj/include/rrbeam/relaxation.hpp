#pragma once

// Relaxation phase: first-order Taylor surrogates for the inverse-EFIM
// terms, the affine map from lifted beam covariances to the surrogate EFIM,
// and assembly of the convex SDP in canonical conic form.

#include <vector>

#include "rrbeam/conic.hpp"
#include "rrbeam/fisher.hpp"
#include "rrbeam/scenario.hpp"

namespace rrbeam {

struct Anchor {
  SymMatrix efim0;                      // J~_{p,0}, 2x2 PD
  double varpi0 = 0.0;
  std::vector<HermMatrix> covariances0; // Sigma_{i,0}, PSD
  std::vector<double> thetas0;          // angles the anchor was built at
};

struct Linearization {
  SymMatrix inv_lin;      // J0^{-1} - J0^{-1} dJ J0^{-1}
  double frob_lin = 0.0;  // tr{J0^{-2}} - 2 tr{J0^{-3} dJ}
  double quad_lin = 0.0;  // x^T inv_lin x
  double square_lin = 0.0;  // varpi0^2 + 2 varpi0 (varpi - varpi0)
};

Linearization linearize(const Anchor& anchor, const SymMatrix& delta_j, double varpi,
                        const std::vector<double>& x);
inline Linearization linearize(const Anchor& anchor, const SymMatrix& delta_j, double varpi,
                               Vec2 x) {
  return linearize(anchor, delta_j, varpi, std::vector<double>{x.x, x.y});
}

// J~({Sigma_i}) = constant + sum_i coeffs_i * tr{Sigma_i V_i} with
// V_i = a^_i a^_i^H. The channel power ||g^_i||^2 sits inside coeffs_i so
// that coeffs_i * tr{Sigma_i V_i} equals Xi |Lambda_i|^2 alpha_i alpha_i^T.
struct AffineEfimMap {
  SymMatrix constant;              // 2x2
  std::vector<SymMatrix> coeffs;   // 2x2 per BS
  std::vector<HermMatrix> v_mats;  // steering outer products per BS
  std::vector<Vec2> alphas;
  std::vector<double> channel_norm_sq;  // ||g^_i||^2
  double xi = 0.0;
  double sigma_b = 0.0;

  int num_bs() const { return int(coeffs.size()); }
  // tr{Sigma_i V_i}
  double gain(int i, const HermMatrix& cov) const;
  SymMatrix evaluate(const std::vector<HermMatrix>& covs) const;
  SymMatrix evaluate_gains(const std::vector<double>& gains) const;
};

AffineEfimMap build_affine_map(const Scenario& sc, Vec2 u_hat,
                               const std::vector<double>& thetas_hat);

// The assembled convex program plus the variable layout needed to read the
// solution back: M embedded covariance blocks (dim 2 N_B), the 2x2 trace
// epigraph block Y, and the two auxiliary scalars.
struct AssembledSdp {
  conic::Problem problem;
  std::vector<int> sigma_blocks;
  int y_block = -1;
  int varpi_scalar = -1;
  int varrho_scalar = -1;
  int serving_index = 0;
};

AssembledSdp assemble_sdp(const Scenario& sc, const Anchor& anchor, Vec2 u_hat,
                          int serving_index, const AffineEfimMap& map);

// Hermitian covariances recovered from a solved problem's embedded blocks.
std::vector<HermMatrix> extract_covariances(const AssembledSdp& sdp,
                                            const conic::Solution& sol);

}  // namespace rrbeam
