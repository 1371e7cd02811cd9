#include "rrbeam/relaxation.hpp"

#include <cmath>
#include <string>

namespace rrbeam {

Linearization linearize(const Anchor& anchor, const SymMatrix& delta_j, double varpi,
                        const std::vector<double>& x) {
  const SymMatrix j0_inv = spd_inverse(anchor.efim0);
  const SymMatrix j0_inv2 = SymMatrix(j0_inv.as_mat() * j0_inv.as_mat());
  const SymMatrix j0_inv3 = SymMatrix(j0_inv2.as_mat() * j0_inv.as_mat());

  Linearization lin;
  lin.inv_lin = j0_inv - sandwich(j0_inv, delta_j);
  lin.frob_lin = j0_inv2.trace() - 2.0 * inner(j0_inv3, delta_j);
  lin.quad_lin = lin.inv_lin.quad_form(x);
  lin.square_lin = anchor.varpi0 * anchor.varpi0 +
                   2.0 * anchor.varpi0 * (varpi - anchor.varpi0);
  return lin;
}

double AffineEfimMap::gain(int i, const HermMatrix& cov) const {
  const HermMatrix& v = v_mats[i];
  double s = 0.0;
  for (int a = 0; a < cov.dim(); ++a)
    for (int b = 0; b < cov.dim(); ++b)
      s += (cov(a, b) * v(b, a)).real();
  return s;
}

SymMatrix AffineEfimMap::evaluate(const std::vector<HermMatrix>& covs) const {
  std::vector<double> gains(coeffs.size());
  for (size_t i = 0; i < coeffs.size(); ++i) gains[i] = gain(int(i), covs[i]);
  return evaluate_gains(gains);
}

SymMatrix AffineEfimMap::evaluate_gains(const std::vector<double>& gains) const {
  SymMatrix j = constant;
  for (size_t i = 0; i < coeffs.size(); ++i) j = j + coeffs[i].scaled(gains[i]);
  return j;
}

AffineEfimMap build_affine_map(const Scenario& sc, Vec2 u_hat,
                               const std::vector<double>& thetas_hat) {
  const int m = sc.num_bs();
  AffineEfimMap map;
  map.xi = sc.xi();
  map.sigma_b = sc.clock_bias_std_ns;
  map.constant = SymMatrix(2);
  map.coeffs.reserve(m);
  map.v_mats.reserve(m);
  map.alphas.reserve(m);
  map.channel_norm_sq.reserve(m);

  Vec2 weighted{0.0, 0.0};
  for (int i = 0; i < m; ++i) {
    const Vec2 p = sc.bs_positions[i];
    const double d = (u_hat - p).norm();
    if (d <= 1e-12) throw DegenerateGeometry("build_affine_map: user at a BS position");
    const Vec2 alpha = geometry_derivatives(u_hat, p).alpha;
    const double rho = sc.wavelength_m() / (4.0 * 3.14159265358979323846 * d);
    const double norm_sq = double(sc.n_antennas) * rho * rho * std::norm(sc.channel_gains[i]);
    map.alphas.push_back(alpha);
    map.channel_norm_sq.push_back(norm_sq);
    map.coeffs.push_back(SymMatrix::outer(alpha, map.xi * norm_sq));
    map.v_mats.push_back(HermMatrix::outer(steering_vector(sc, thetas_hat[i])));
    weighted = weighted + alpha * norm_sq;
  }
  const double c = map.xi * map.sigma_b;
  map.constant = SymMatrix(2) - SymMatrix::outer(weighted, c * c);
  return map;
}

namespace {

// Entry (a, b) of J~(X).
conic::LinExpr j_tilde_entry(int a, int b, const AffineEfimMap& map,
                             const std::vector<int>& sigma_blocks,
                             const std::vector<SymMatrix>& embedded_v) {
  conic::LinExpr e;
  e.add_constant(map.constant(a, b));
  for (size_t i = 0; i < sigma_blocks.size(); ++i) {
    const double c = map.coeffs[i](a, b);
    if (c != 0.0) e.add_block(sigma_blocks[i], embedded_v[i].scaled(0.5 * c));
  }
  return e;
}

SymMatrix entry_picker(int dim, int i, int j) {
  SymMatrix g(dim);
  g.set(i, j, i == j ? 1.0 : 0.5);
  return g;
}

}  // namespace

AssembledSdp assemble_sdp(const Scenario& sc, const Anchor& anchor, Vec2 u_hat,
                          int serving_index, const AffineEfimMap& map) {
  Efim anchor_efim{anchor.efim0, std::nullopt};
  if (!anchor_efim.positive_definite())
    throw IndefiniteAnchor("assemble_sdp: anchor EFIM not positive definite");

  const int m = sc.num_bs();
  const int nb = sc.n_antennas;
  AssembledSdp out;
  out.serving_index = serving_index;
  conic::Problem& p = out.problem;

  std::vector<SymMatrix> embedded_v;
  embedded_v.reserve(m);
  for (int i = 0; i < m; ++i) embedded_v.push_back(real_embed(map.v_mats[i]));

  for (int i = 0; i < m; ++i)
    out.sigma_blocks.push_back(p.add_psd_block("sigma_" + std::to_string(i), 2 * nb));
  out.y_block = p.add_psd_block("inv_bound", 2);
  out.varpi_scalar = p.add_nonneg_scalar("varpi");
  out.varrho_scalar = p.add_nonneg_scalar("varrho");

  // Objective: total transmit power sum_i tr{Sigma_i} = sum_i <I/2, X_i>.
  for (int i = 0; i < m; ++i)
    p.objective.add_block(out.sigma_blocks[i], SymMatrix::identity(2 * nb).scaled(0.5));

  const Vec2 du = u_hat - sc.bs_positions[serving_index];
  const double zeta = -std::log(sc.outage_prob);
  const double gamma = rate_gamma(sc, sc.channel_gains[serving_index]);

  // The matrix bound G >= J~(X)^{-1} carries every inverse-EFIM term: its
  // trace in the outage restriction, its Frobenius norm and du-quadratic in
  // the varpi bound, its maximum eigenvalue under varrho. Eigenvalue
  // monotonicity keeps all three conservative, so subproblem-feasible
  // points satisfy the exact restricted constraint; only the square
  // varpi^2 is handled by the tangent at varpi0.
  {
    conic::LmiConstraint& lmi = p.add_lmi("inverse_bound", 4);
    for (int a = 0; a < 2; ++a)
      for (int b = a; b < 2; ++b)
        lmi.entry(a, b).add_block(out.y_block, entry_picker(2, a, b));
    lmi.entry(0, 2).add_constant(1.0);
    lmi.entry(1, 3).add_constant(1.0);
    for (int a = 0; a < 2; ++a)
      for (int b = a; b < 2; ++b)
        lmi.entry(2 + a, 2 + b) = j_tilde_entry(a, b, map, out.sigma_blocks, embedded_v);
  }

  // Outage restriction:
  //   tr{G} + sqrt(2 zeta) varpi + zeta varrho - gamma tr{Sigma* V*} + ||du||^2 <= 0.
  {
    conic::LinExpr e;
    e.add_block(out.y_block, SymMatrix::identity(2));
    e.add_scalar(out.varpi_scalar, std::sqrt(2.0 * zeta));
    e.add_scalar(out.varrho_scalar, zeta);
    e.add_block(out.sigma_blocks[serving_index],
                embedded_v[serving_index].scaled(-0.5 * gamma));
    e.add_constant(du.norm_sq());
    p.add_linear("outage_restriction", std::move(e), conic::Sense::LessEqual);
  }

  // ||G||_F^2 + 2 du^T G du <= varpi0^2 + 2 varpi0 (varpi - varpi0) as a
  // Schur complement against svec(G).
  {
    conic::LmiConstraint& lmi = p.add_lmi("frobenius_bound", 4);
    // sigma entry: the tangent of varpi^2 minus the du quadratic.
    conic::LinExpr sigma;
    sigma.add_scalar(out.varpi_scalar, 2.0 * anchor.varpi0);
    sigma.add_constant(-anchor.varpi0 * anchor.varpi0);
    SymMatrix du_quad(2);
    du_quad.set(0, 0, -2.0 * du.x * du.x);
    du_quad.set(1, 1, -2.0 * du.y * du.y);
    du_quad.set(0, 1, -2.0 * du.x * du.y);
    sigma.add_block(out.y_block, du_quad);
    lmi.entry(0, 0) = std::move(sigma);
    const double root2 = std::sqrt(2.0);
    lmi.entry(0, 1).add_block(out.y_block, entry_picker(2, 0, 0));
    lmi.entry(0, 2).add_block(out.y_block, entry_picker(2, 0, 1).scaled(root2));
    lmi.entry(0, 3).add_block(out.y_block, entry_picker(2, 1, 1));
    for (int k = 1; k < 4; ++k) lmi.entry(k, k).add_constant(1.0);
  }

  // varrho I - G >= 0.
  {
    conic::LmiConstraint& lmi = p.add_lmi("lambda_bound", 2);
    for (int a = 0; a < 2; ++a)
      for (int b = a; b < 2; ++b) {
        conic::LinExpr e;
        e.add_block(out.y_block, entry_picker(2, a, b).scaled(-1.0));
        if (a == b) e.add_scalar(out.varrho_scalar, 1.0);
        lmi.entry(a, b) = std::move(e);
      }
  }

  p.validate();
  return out;
}

std::vector<HermMatrix> extract_covariances(const AssembledSdp& sdp, const conic::Solution& sol) {
  std::vector<HermMatrix> covs;
  covs.reserve(sdp.sigma_blocks.size());
  for (int b : sdp.sigma_blocks) covs.push_back(embed_restrict(sol.block_values[b]));
  return covs;
}

}  // namespace rrbeam
