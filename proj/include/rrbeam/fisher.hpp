#pragma once

// Fisher information of the positioning frame: per-anchor blocks, the full
// parameter FIM, the 2x2 position EFIM via Schur complement, the affine
// surrogate EFIM and the CRB.

#include <optional>
#include <vector>

#include "rrbeam/matkit.hpp"

namespace rrbeam {

struct FimInputs {
  std::vector<cplx> lambdas;         // Lambda_i = g_i^H w_i
  std::vector<Vec2> alphas;          // delay gradients, s/m entries
  double xi = 0.0;                   // 4 pi^2 W_eff^2 / N_p
  double sigma_b = 0.0;              // clock-bias prior std, ns
  std::vector<double> channel_norms; // ||g_i||_2^2

  int num_bs() const { return int(lambdas.size()); }
  void validate() const;
};

struct FullFim {
  std::vector<SymMatrix> phi_blocks;  // 3x3 per BS
  Mat upsilon;                        // (2M+3) x 3M
  Mat j_eta;                          // 3M x 3M block diagonal
  SymMatrix j_eta_tilde;              // (2M+3) x (2M+3), Upsilon J Upsilon^T + J_b
  SymMatrix a_block;                  // 2x2
  Mat b_block;                        // 2 x (2M+1)
  SymMatrix c_block;                  // (2M+1) x (2M+1)
};

struct Efim {
  SymMatrix matrix;                  // 2x2, 1/m^2 scale
  std::optional<SymMatrix> anchor;   // linearization anchor, when relevant

  // PSD within -tol * trace; PD strictly above tol * trace.
  bool positive_definite(double rel_tol = 1e-12) const;
};

enum class EfimPath { ClosedForm, Assembly };

// Per-BS blocks Phi_i = blockdiag(4 pi^2 |Lambda_i|^2 W_eff^2 / N_p,
// (1/N_p) I_2) and their block-diagonal stack. W_eff^2 is recovered from
// inputs.xi as xi * N_p / (4 pi^2).
FullFim fim_parameters(const FimInputs& inputs, double noise_psd);

// Position EFIM. ClosedForm evaluates the rank-one-corrected sum directly;
// Assembly materializes Upsilon/J_b/A/B/C with explicit zero padding and
// Schur-complements the nuisance parameters. The two agree to 1e-9
// relative Frobenius; the assembly path exists as an oracle for the
// closed form.
Efim efim_position(const FimInputs& inputs, double noise_psd,
                   EfimPath via = EfimPath::ClosedForm);

// Affine surrogate: Xi sum |Lambda_i|^2 alpha_i alpha_i^T
//  - (Xi sigma_b)^2 (sum ||g_i||^2 alpha_i)(sum ||g_i||^2 alpha_i)^T.
// The subtracted term is constant in the beam covariances, so the result
// is affine in the gains |Lambda_i|^2. May be indefinite; callers decide.
Efim surrogate_efim(const FimInputs& inputs);

// tr{J^{-1}}, m^2. Throws SingularMatrix when the EFIM is not PD.
double crb(const Efim& efim);

}  // namespace rrbeam
