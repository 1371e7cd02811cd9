#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>

#include "rrbeam/fisher.hpp"
#include "rrbeam/rng.hpp"

using namespace rrbeam;

namespace {
constexpr double kPi = 3.14159265358979323846;

FimInputs random_inputs(Rng& rng, int m, double sigma_b = 0.01) {
  FimInputs in;
  in.xi = 0.5 + rng.uniform01();
  in.sigma_b = sigma_b;
  for (int i = 0; i < m; ++i) {
    in.lambdas.emplace_back(rng.normal(), rng.normal());
    const double ang = 2.0 * kPi * rng.uniform01();
    const double c = 1.0 / 0.299792458;
    in.alphas.push_back({c * std::cos(ang), c * std::sin(ang)});
    in.channel_norms.push_back(0.5 + rng.uniform01());
  }
  return in;
}

double rel_frob_diff(const SymMatrix& a, const SymMatrix& b) {
  return (a - b).frobenius_norm() / std::max(1e-300, a.frobenius_norm());
}

}  // namespace

TEST_CASE("fim_parameters blocks") {
  FimInputs in;
  in.xi = 4.0 * kPi * kPi * 0.125 * 0.125 / 1.0;
  in.sigma_b = 0.01;
  in.lambdas = {cplx(0, 0), cplx(1, 0)};
  in.alphas = {{1, 0}, {0, 1}};
  in.channel_norms = {1.0, 1.0};

  FullFim f = fim_parameters(in, 1.0);
  CHECK(f.phi_blocks[0](0, 0) == 0.0);
  CHECK(f.phi_blocks[0](1, 1) == doctest::Approx(1.0));
  CHECK(f.phi_blocks[0](2, 2) == doctest::Approx(1.0));
  CHECK(f.phi_blocks[1](0, 0) == doctest::Approx(0.61685).epsilon(1e-4));

  // Block-diagonal structure of J_eta: off-diagonal blocks exactly zero.
  for (int r = 0; r < 3; ++r)
    for (int c = 3; c < 6; ++c) {
      CHECK(f.j_eta(r, c) == 0.0);
      CHECK(f.j_eta(c, r) == 0.0);
    }
  CHECK_THROWS_AS(fim_parameters(in, 0.0), InvalidNoise);
}

TEST_CASE("single-anchor EFIM has rank <= 1") {
  FimInputs in;
  in.xi = 1.7;
  in.sigma_b = 0.02;
  in.lambdas = {cplx(0.8, 0.3)};
  in.alphas = {{2.1, 1.3}};
  in.channel_norms = {1.0};
  Efim e = efim_position(in, 1.0);
  Spectrum sp = eig_sym(e.matrix);
  CHECK(std::abs(sp.eigenvalues[1]) <= 1e-12 * (1.0 + std::abs(sp.eigenvalues[0])));
}

TEST_CASE("two orthogonal anchors against the hand-expanded formula") {
  // With large sigma_b the rank-one correction coefficient approaches
  // Xi / sum |Lambda|^2; check the full closed form against a direct
  // two-anchor expansion.
  FimInputs in;
  in.xi = 2.0;
  in.sigma_b = 1e6;
  const double g2 = 0.7;  // |Lambda|^2 for both anchors
  in.lambdas = {cplx(std::sqrt(g2), 0), cplx(0, std::sqrt(g2))};
  in.alphas = {{3.0, 0.0}, {0.0, 3.0}};
  in.channel_norms = {1.0, 1.0};

  Efim e = efim_position(in, 1.0);
  const double denom = in.xi * 2.0 * g2 + 1.0 / (in.sigma_b * in.sigma_b);
  const double coeff = in.xi * in.xi / denom;
  SymMatrix expect(2);
  expect.set(0, 0, in.xi * g2 * 9.0 - coeff * g2 * g2 * 9.0);
  expect.set(1, 1, in.xi * g2 * 9.0 - coeff * g2 * g2 * 9.0);
  expect.set(0, 1, -coeff * g2 * g2 * 9.0);
  CHECK(rel_frob_diff(expect, e.matrix) <= 1e-12);
  // Limit coefficient Xi / sum |Lambda_i|^2.
  CHECK(coeff == doctest::Approx(in.xi / (2.0 * g2)).epsilon(1e-9));
}

TEST_CASE("closed form and assembly agree") {
  Rng rng(41);
  for (int trial = 0; trial < 100; ++trial) {
    const int m = 2 + int(rng.uniform01() * 7);
    FimInputs in = random_inputs(rng, m);
    Efim closed = efim_position(in, 1.0, EfimPath::ClosedForm);
    Efim assembled = efim_position(in, 1.0, EfimPath::Assembly);
    CHECK(rel_frob_diff(closed.matrix, assembled.matrix) <= 1e-9);
  }
}

TEST_CASE("surrogate with zero clock-bias variance keeps only the first term") {
  Rng rng(43);
  FimInputs in = random_inputs(rng, 4, /*sigma_b=*/0.0);
  Efim j = surrogate_efim(in);
  SymMatrix expect(2);
  for (int i = 0; i < 4; ++i)
    expect = expect + SymMatrix::outer(in.alphas[i], in.xi * std::norm(in.lambdas[i]));
  CHECK(rel_frob_diff(expect, j.matrix) <= 1e-14);
}

TEST_CASE("surrogate lower-bounds the EFIM in the Remark-1 regime") {
  // Deep in the regime 1/sigma_b^2 >> Xi sum |Lambda|^2 and with unit-scale
  // gains the PSD defect of the surrogate dips below 1e-10 * trace.
  Rng rng(47);
  for (int trial = 0; trial < 1000; ++trial) {
    const int m = 2 + int(rng.uniform01() * 6);
    FimInputs in = random_inputs(rng, m, /*sigma_b=*/1e-6);
    for (int i = 0; i < m; ++i) {
      // |Lambda_i|^2 <= channel norm * unit beam power.
      const double gain = rng.uniform01();
      in.lambdas[i] = std::sqrt(in.channel_norms[i] * gain);
    }
    Efim exact = efim_position(in, 1.0);
    Efim sur = surrogate_efim(in);
    const SymMatrix diff = exact.matrix - sur.matrix;
    const double min_eig = eig_sym(diff).eigenvalues.back();
    CHECK(min_eig >= -1e-10 * exact.matrix.trace());
  }
}

TEST_CASE("two-anchor surrogate hand expansion") {
  const double c = 1.0 / 0.299792458;
  FimInputs in;
  in.xi = 2.5;
  in.sigma_b = 0.01;
  const double g2 = 0.6, norm2 = 1.3;
  in.lambdas = {std::sqrt(g2), std::sqrt(g2)};
  in.alphas = {{c, 0.0}, {0.0, c}};
  in.channel_norms = {norm2, norm2};
  Efim j = surrogate_efim(in);
  const double k = in.xi * in.sigma_b * norm2 * c;
  SymMatrix expect(2);
  expect.set(0, 0, in.xi * g2 * c * c - k * k);
  expect.set(1, 1, in.xi * g2 * c * c - k * k);
  expect.set(0, 1, -k * k);
  CHECK(rel_frob_diff(expect, j.matrix) <= 1e-13);
}

TEST_CASE("crb") {
  CHECK(crb({SymMatrix::identity(2), std::nullopt}) == doctest::Approx(2.0));
  CHECK(crb({SymMatrix::diag({4.0, 0.25}), std::nullopt}) == doctest::Approx(4.25));
  Rng rng(53);
  FimInputs in = random_inputs(rng, 4);
  Efim j = surrogate_efim(in);
  const double t = 3.7;
  CHECK(crb({j.matrix.scaled(t), std::nullopt}) ==
        doctest::Approx(crb(j) / t).epsilon(1e-12));
  CHECK_THROWS_AS(crb({SymMatrix::diag({1.0, 0.0}), std::nullopt}), SingularMatrix);
}

TEST_CASE("information monotonicity in the gains") {
  Rng rng(59);
  for (int trial = 0; trial < 50; ++trial) {
    FimInputs in = random_inputs(rng, 4);
    Efim base = efim_position(in, 1.0);
    FimInputs bumped = in;
    const int which = trial % 4;
    bumped.lambdas[which] *= 1.5;
    Efim more = efim_position(bumped, 1.0);
    const double min_eig = eig_sym(more.matrix - base.matrix).eigenvalues.back();
    CHECK(min_eig >= -1e-10 * (1.0 + base.matrix.trace()));
  }
}

TEST_CASE("crb antitonicity") {
  Rng rng(61);
  for (int trial = 0; trial < 50; ++trial) {
    Mat a(2, 2);
    for (int i = 0; i < 2; ++i)
      for (int j = 0; j < 2; ++j) a(i, j) = rng.normal();
    SymMatrix j2 = SymMatrix(a * transpose(a));
    j2 = j2 + SymMatrix::identity(2).scaled(0.2);
    std::vector<double> v = {rng.normal(), rng.normal()};
    SymMatrix j1 = j2 + SymMatrix::outer(v, 1.0);  // j1 >= j2 > 0
    CHECK(crb({j1, std::nullopt}) <= crb({j2, std::nullopt}) + 1e-12);
  }
}

TEST_CASE("surrogate is affine in the gain vector") {
  Rng rng(67);
  for (int trial = 0; trial < 50; ++trial) {
    const int m = 3;
    FimInputs base = random_inputs(rng, m);
    std::vector<double> gx(m), gy(m);
    for (int i = 0; i < m; ++i) {
      gx[i] = rng.uniform01();
      gy[i] = rng.uniform01();
    }
    const double t = rng.uniform01();
    auto at = [&](const std::vector<double>& g) {
      FimInputs in = base;
      for (int i = 0; i < m; ++i) in.lambdas[i] = std::sqrt(g[i]);
      return surrogate_efim(in).matrix;
    };
    std::vector<double> mix(m);
    for (int i = 0; i < m; ++i) mix[i] = t * gx[i] + (1.0 - t) * gy[i];
    const SymMatrix lhs = at(mix);
    const SymMatrix rhs = at(gx).scaled(t) + at(gy).scaled(1.0 - t);
    CHECK((lhs - rhs).frobenius_norm() <= 1e-13 * (1.0 + lhs.frobenius_norm()));
  }
}
