#include "rrbeam/fisher.hpp"

#include <cmath>

namespace rrbeam {

namespace {
constexpr double kPi = 3.14159265358979323846;
}

void FimInputs::validate() const {
  if (lambdas.empty()) throw InvalidInput("fim: at least one BS required");
  if (alphas.size() != lambdas.size() || channel_norms.size() != lambdas.size())
    throw InvalidInput("fim: lambdas/alphas/channel_norms sizes disagree");
  if (!(xi > 0.0)) throw InvalidInput("fim: xi must be > 0");
}

FullFim fim_parameters(const FimInputs& inputs, double noise_psd) {
  inputs.validate();
  if (!(noise_psd > 0.0)) throw InvalidNoise("fim_parameters: noise PSD must be > 0");
  const int m = inputs.num_bs();

  FullFim f;
  f.phi_blocks.reserve(m);
  f.j_eta = Mat(3 * m, 3 * m);
  for (int i = 0; i < m; ++i) {
    SymMatrix phi(3);
    phi.set(0, 0, inputs.xi * std::norm(inputs.lambdas[i]));
    phi.set(1, 1, 1.0 / noise_psd);
    phi.set(2, 2, 1.0 / noise_psd);
    f.phi_blocks.push_back(phi);
    for (int r = 0; r < 3; ++r)
      for (int c = 0; c < 3; ++c) f.j_eta(3 * i + r, 3 * i + c) = phi(r, c);
  }

  // Upsilon = d eta / d eta~ with eta~ = [u, Lambda_1, ..., Lambda_M, b].
  const int rows = 2 * m + 3;
  f.upsilon = Mat(rows, 3 * m);
  for (int i = 0; i < m; ++i) {
    f.upsilon(0, 3 * i) = inputs.alphas[i].x;  // D_i, delay columns
    f.upsilon(1, 3 * i) = inputs.alphas[i].y;
    f.upsilon(2 + 2 * i, 3 * i + 1) = 1.0;     // T_i
    f.upsilon(2 + 2 * i + 1, 3 * i + 2) = 1.0;
    f.upsilon(rows - 1, 3 * i) = 1.0;          // clock-bias row, I^T
  }

  Mat jt = f.upsilon * f.j_eta * transpose(f.upsilon);
  if (!(inputs.sigma_b > 0.0)) throw InvalidNoise("fim_parameters: sigma_b must be > 0");
  jt(rows - 1, rows - 1) += 1.0 / (inputs.sigma_b * inputs.sigma_b);
  f.j_eta_tilde = SymMatrix(jt);

  // A / B / C partition of J_eta~ around the 2x2 position block.
  Mat a(2, 2), b(2, rows - 2), c(rows - 2, rows - 2);
  for (int i = 0; i < 2; ++i)
    for (int j = 0; j < 2; ++j) a(i, j) = f.j_eta_tilde(i, j);
  for (int i = 0; i < 2; ++i)
    for (int j = 0; j < rows - 2; ++j) b(i, j) = f.j_eta_tilde(i, 2 + j);
  for (int i = 0; i < rows - 2; ++i)
    for (int j = 0; j < rows - 2; ++j) c(i, j) = f.j_eta_tilde(2 + i, 2 + j);
  f.a_block = SymMatrix(a);
  f.b_block = b;
  f.c_block = SymMatrix(c);
  return f;
}

namespace {

Efim efim_closed_form(const FimInputs& in) {
  const int m = in.num_bs();
  double gain_sum = 0.0;
  Vec2 weighted{0.0, 0.0};
  SymMatrix first(2);
  for (int i = 0; i < m; ++i) {
    const double g2 = std::norm(in.lambdas[i]);
    gain_sum += g2;
    weighted = weighted + in.alphas[i] * g2;
    first = first + SymMatrix::outer(in.alphas[i], in.xi * g2);
  }
  const double denom = in.xi * gain_sum + 1.0 / (in.sigma_b * in.sigma_b);
  const double coeff = in.xi * in.xi / denom;
  return {first - SymMatrix::outer(weighted, coeff), std::nullopt};
}

Efim efim_assembly(const FimInputs& in, double noise_psd) {
  FullFim f = fim_parameters(in, noise_psd);
  const int k = f.c_block.dim();

  // C^{-1} B^T via the spectral decomposition of C.
  Spectrum sp = eig_sym(f.c_block);
  const double tol = 1e-14 * std::abs(sp.eigenvalues.front());
  for (double ev : sp.eigenvalues)
    if (!(std::abs(ev) > tol)) throw SingularMatrix("efim_position: singular C block");
  Mat bt = transpose(f.b_block);         // k x 2
  Mat qtb = transpose(sp.eigenvectors) * bt;
  for (int i = 0; i < k; ++i)
    for (int j = 0; j < 2; ++j) qtb(i, j) /= sp.eigenvalues[i];
  Mat cinv_bt = sp.eigenvectors * qtb;   // k x 2
  Mat schur = f.b_block * cinv_bt;       // 2 x 2
  return {f.a_block - SymMatrix(schur), std::nullopt};
}

}  // namespace

Efim efim_position(const FimInputs& inputs, double noise_psd, EfimPath via) {
  inputs.validate();
  if (!(inputs.sigma_b > 0.0)) throw InvalidNoise("efim_position: sigma_b must be > 0");
  return via == EfimPath::ClosedForm ? efim_closed_form(inputs)
                                     : efim_assembly(inputs, noise_psd);
}

Efim surrogate_efim(const FimInputs& inputs) {
  inputs.validate();
  const int m = inputs.num_bs();
  SymMatrix first(2);
  Vec2 weighted{0.0, 0.0};
  for (int i = 0; i < m; ++i) {
    first = first + SymMatrix::outer(inputs.alphas[i], inputs.xi * std::norm(inputs.lambdas[i]));
    weighted = weighted + inputs.alphas[i] * inputs.channel_norms[i];
  }
  const double coeff = inputs.xi * inputs.sigma_b;
  return {first - SymMatrix::outer(weighted, coeff * coeff), std::nullopt};
}

bool Efim::positive_definite(double rel_tol) const {
  Spectrum sp = eig_sym(matrix);
  return sp.eigenvalues.back() > rel_tol * std::abs(matrix.trace());
}

double crb(const Efim& efim) {
  return spd_inverse(efim.matrix).trace();
}

}  // namespace rrbeam
