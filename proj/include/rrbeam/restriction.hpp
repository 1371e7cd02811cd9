#pragma once

// Restriction phase: the probabilistic rate-outage constraint becomes a
// deterministic one through the Bernstein-type concentration bound on
// Gaussian quadratic forms.

#include <vector>

#include "rrbeam/fisher.hpp"
#include "rrbeam/matkit.hpp"

namespace rrbeam {

struct DeterministicConstraint {
  SymMatrix s_mat;  // (J~)^{-1}, 2x2
  Vec2 r_vec;       // (J~)^{-1/2} (u_hat - p)
  double nu = 0.0;  // gamma tr{Sigma V} - ||u_hat - p||^2, m^2
  double zeta = 0.0;  // -ln P_out
};

struct AuxiliaryPair {
  double varpi = 0.0;
  double varrho = 0.0;
};

struct FeasibilityResult {
  bool feasible = false;
  AuxiliaryPair tight;
};

// tr{S} + sqrt(2 zeta) sqrt(||S||_F^2 + 2 ||s||^2) + zeta lambda^+(S):
// with probability at least 1 - e^{-zeta}, z^T S z + 2 z^T s stays below
// this value for z standard normal.
double bernstein_bound(const SymMatrix& s_mat, const std::vector<double>& s_vec, double zeta);

DeterministicConstraint restrict_outage(Vec2 u_hat, Vec2 p_serving, const Efim& efim,
                                        double gamma, double beam_gain, double outage_prob);

// Evaluates the restricted constraint at the unique tight auxiliary pair;
// feasibility with some (varpi, varrho) is equivalent by monotonicity.
FeasibilityResult feasible(const DeterministicConstraint& dc);

}  // namespace rrbeam
