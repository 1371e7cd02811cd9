#include "rrbeam/restriction.hpp"

#include <cmath>

namespace rrbeam {

double bernstein_bound(const SymMatrix& s_mat, const std::vector<double>& s_vec, double zeta) {
  if (zeta < 0.0) throw InvalidInput("bernstein_bound: zeta must be >= 0");
  double s_norm_sq = 0.0;
  for (double v : s_vec) s_norm_sq += v * v;
  const double f = s_mat.frobenius_norm();
  return s_mat.trace() + std::sqrt(2.0 * zeta) * std::sqrt(f * f + 2.0 * s_norm_sq) +
         zeta * lambda_plus(s_mat);
}

DeterministicConstraint restrict_outage(Vec2 u_hat, Vec2 p_serving, const Efim& efim,
                                        double gamma, double beam_gain, double outage_prob) {
  if (!(outage_prob > 0.0 && outage_prob < 1.0))
    throw InvalidInput("restrict_outage: outage probability must lie in (0, 1)");
  DeterministicConstraint dc;
  dc.s_mat = spd_inverse(efim.matrix);
  const SymMatrix half = spd_inv_sqrt(efim.matrix);
  dc.r_vec = half.mul(u_hat - p_serving);
  dc.nu = gamma * beam_gain - (u_hat - p_serving).norm_sq();
  dc.zeta = -std::log(outage_prob);
  return dc;
}

FeasibilityResult feasible(const DeterministicConstraint& dc) {
  const double f = dc.s_mat.frobenius_norm();
  AuxiliaryPair tight;
  tight.varpi = std::sqrt(f * f + 2.0 * dc.r_vec.norm_sq());
  tight.varrho = lambda_plus(dc.s_mat);
  const double lhs =
      dc.s_mat.trace() + std::sqrt(2.0 * dc.zeta) * tight.varpi + dc.zeta * tight.varrho;
  return {lhs <= dc.nu, tight};
}

}  // namespace rrbeam
