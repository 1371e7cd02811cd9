#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>

#include "rrbeam/matkit.hpp"
#include "rrbeam/rng.hpp"

using namespace rrbeam;

namespace {

SymMatrix random_sym(Rng& rng, int n, double scale = 1.0) {
  Mat m(n, n);
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j) m(i, j) = scale * rng.normal();
  return SymMatrix(m);
}

SymMatrix random_spd(Rng& rng, int n, double scale = 1.0) {
  Mat m(n, n);
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j) m(i, j) = rng.normal();
  Mat g = m * transpose(m);
  for (int i = 0; i < n; ++i) g(i, i) += 0.1 * n;
  return SymMatrix(g).scaled(scale);
}

HermMatrix random_herm(Rng& rng, int n) {
  HermMatrix h(n);
  for (int i = 0; i < n; ++i)
    for (int j = i; j < n; ++j)
      h.set(i, j, i == j ? cplx(rng.normal(), 0.0) : cplx(rng.normal(), rng.normal()));
  return h;
}

double reconstruction_error(const SymMatrix& m, const Spectrum& sp) {
  const int n = m.dim();
  Mat lam(n, n);
  for (int i = 0; i < n; ++i) lam(i, i) = sp.eigenvalues[i];
  Mat rec = sp.eigenvectors * lam * transpose(sp.eigenvectors);
  double err = 0.0;
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j) err += (rec(i, j) - m(i, j)) * (rec(i, j) - m(i, j));
  return std::sqrt(err);
}

}  // namespace

TEST_CASE("eig_sym identity and diagonal") {
  Spectrum sp = eig_sym(SymMatrix::identity(3));
  for (double v : sp.eigenvalues) CHECK(v == doctest::Approx(1.0).epsilon(1e-14));

  Spectrum d = eig_sym(SymMatrix::diag({3.0, 1.0}));
  CHECK(d.eigenvalues[0] == doctest::Approx(3.0));
  CHECK(d.eigenvalues[1] == doctest::Approx(1.0));
  CHECK(std::abs(d.eigenvectors(0, 0)) == doctest::Approx(1.0));
  CHECK(std::abs(d.eigenvectors(1, 1)) == doctest::Approx(1.0));
}

TEST_CASE("eig_sym 2x2 matches the characteristic-polynomial roots") {
  Rng rng(7);
  for (int trial = 0; trial < 200; ++trial) {
    SymMatrix m = random_sym(rng, 2);
    Spectrum sp = eig_sym(m);
    // Quadratic-formula oracle for the characteristic polynomial.
    const double tr = m(0, 0) + m(1, 1);
    const double det = m(0, 0) * m(1, 1) - m(0, 1) * m(0, 1);
    const double disc = std::sqrt(std::max(0.0, tr * tr - 4.0 * det));
    CHECK(sp.eigenvalues[0] == doctest::Approx(0.5 * (tr + disc)).epsilon(1e-10));
    CHECK(sp.eigenvalues[1] == doctest::Approx(0.5 * (tr - disc)).epsilon(1e-10));
  }
}

TEST_CASE("eig_sym reconstruction and ordering invariants") {
  Rng rng(11);
  for (int n : {2, 3, 5, 8, 17, 40}) {
    for (int trial = 0; trial < 5; ++trial) {
      SymMatrix m = random_sym(rng, n, trial + 1.0);
      Spectrum sp = eig_sym(m);
      CHECK(reconstruction_error(m, sp) <= 1e-10 * (1.0 + m.frobenius_norm()));
      for (size_t i = 1; i < sp.eigenvalues.size(); ++i)
        CHECK(sp.eigenvalues[i - 1] >= sp.eigenvalues[i]);
      // Orthonormality.
      Mat q = sp.eigenvectors;
      Mat qtq = transpose(q) * q;
      for (int i = 0; i < n; ++i)
        for (int j = 0; j < n; ++j)
          CHECK(qtq(i, j) == doctest::Approx(i == j ? 1.0 : 0.0).epsilon(1e-10));
    }
  }
}

TEST_CASE("eig_sym rejects non-finite input") {
  SymMatrix m(2);
  m.set(0, 1, std::nan(""));
  CHECK_THROWS_AS(eig_sym(m), InvalidInput);
}

TEST_CASE("hermitian eig reconstruction") {
  Rng rng(13);
  for (int n : {2, 3, 6, 12}) {
    HermMatrix h = random_herm(rng, n);
    HermSpectrum sp = eig_sym(h);
    double err = 0.0;
    for (int i = 0; i < n; ++i)
      for (int j = 0; j < n; ++j) {
        cplx rec(0.0, 0.0);
        for (int k = 0; k < n; ++k)
          rec += sp.eigenvalues[k] * sp.eigenvectors[k][i] * std::conj(sp.eigenvectors[k][j]);
        err += std::norm(rec - h(i, j));
      }
    CHECK(std::sqrt(err) <= 1e-10 * (1.0 + h.frobenius_norm()));
  }
}

TEST_CASE("spd_inv_sqrt identity and diagonal") {
  SymMatrix r = spd_inv_sqrt(SymMatrix::identity(3));
  for (int i = 0; i < 3; ++i) CHECK(r(i, i) == doctest::Approx(1.0));

  SymMatrix d = spd_inv_sqrt(SymMatrix::diag({4.0, 9.0}));
  CHECK(d(0, 0) == doctest::Approx(0.5));
  CHECK(d(1, 1) == doctest::Approx(1.0 / 3.0));
  CHECK(d(0, 1) == doctest::Approx(0.0));
}

TEST_CASE("spd_inv_sqrt composition R M R = I") {
  Rng rng(17);
  for (int trial = 0; trial < 50; ++trial) {
    SymMatrix m = random_spd(rng, 2, std::pow(10.0, (trial % 7) - 3));
    SymMatrix r = spd_inv_sqrt(m);
    Mat prod = r.as_mat() * m.as_mat() * r.as_mat();
    for (int i = 0; i < 2; ++i)
      for (int j = 0; j < 2; ++j)
        CHECK(prod(i, j) == doctest::Approx(i == j ? 1.0 : 0.0).epsilon(1e-9));
    CHECK(eig_sym(r).eigenvalues.back() > 0.0);
  }
}

TEST_CASE("spd_inv_sqrt rejects indefinite input") {
  CHECK_THROWS_AS(spd_inv_sqrt(SymMatrix::diag({1.0, -1.0})), SingularMatrix);
  CHECK_THROWS_AS(spd_inv_sqrt(SymMatrix::diag({1.0, 0.0})), SingularMatrix);
}

TEST_CASE("real_embed identity, trace doubling, eigenvalue doubling") {
  SymMatrix e = real_embed(HermMatrix::identity(3));
  CHECK(e.dim() == 6);
  for (int i = 0; i < 6; ++i) CHECK(e(i, i) == doctest::Approx(1.0));
  CHECK(e.frobenius_norm() == doctest::Approx(std::sqrt(6.0)));

  HermMatrix h(2);
  h.set(0, 0, 1.0);
  h.set(1, 1, 1.0);
  h.set(0, 1, cplx(0.0, 1.0));
  Spectrum sp = eig_sym(real_embed(h));
  CHECK(sp.eigenvalues[0] == doctest::Approx(2.0).epsilon(1e-12));
  CHECK(sp.eigenvalues[1] == doctest::Approx(2.0).epsilon(1e-12));
  CHECK(sp.eigenvalues[2] == doctest::Approx(0.0).epsilon(1e-12));
  CHECK(sp.eigenvalues[3] == doctest::Approx(0.0).epsilon(1e-12));

  Rng rng(19);
  for (int trial = 0; trial < 20; ++trial) {
    HermMatrix a = random_herm(rng, 4);
    CHECK(real_embed(a).trace() == doctest::Approx(2.0 * a.trace()).epsilon(1e-14));
  }
}

TEST_CASE("real_embed preserves definiteness") {
  Rng rng(23);
  for (int trial = 0; trial < 100; ++trial) {
    HermMatrix h = random_herm(rng, 3);
    const double min_h = eig_sym(h).eigenvalues.back();
    const double min_e = eig_sym(real_embed(h)).eigenvalues.back();
    CHECK(min_e == doctest::Approx(min_h).epsilon(1e-9));
  }
}

TEST_CASE("embedding trace identity: tr(embed A embed B) = 2 Re tr(A B)") {
  Rng rng(29);
  for (int trial = 0; trial < 50; ++trial) {
    HermMatrix a = random_herm(rng, 3);
    HermMatrix b = random_herm(rng, 3);
    const double lhs = inner(real_embed(a), real_embed(b));
    cplx tr_ab(0.0, 0.0);
    for (int i = 0; i < 3; ++i)
      for (int k = 0; k < 3; ++k) tr_ab += a(i, k) * b(k, i);
    CHECK(lhs == doctest::Approx(2.0 * tr_ab.real()).epsilon(1e-12));
  }
}

TEST_CASE("embed_restrict inverts real_embed") {
  Rng rng(31);
  HermMatrix h = random_herm(rng, 5);
  HermMatrix back = embed_restrict(real_embed(h));
  CHECK((back - h).frobenius_norm() <= 1e-14 * (1.0 + h.frobenius_norm()));
}

TEST_CASE("lambda_plus") {
  CHECK(lambda_plus(SymMatrix::diag({2.0, -1.0})) == doctest::Approx(2.0));
  CHECK(lambda_plus(SymMatrix::diag({-3.0, -1.0})) == 0.0);

  // Power-iteration oracle on random SPD matrices.
  Rng rng(37);
  for (int trial = 0; trial < 20; ++trial) {
    SymMatrix s = random_spd(rng, 4);
    std::vector<double> v(4);
    for (double& x : v) x = rng.normal();
    double lam = 0.0;
    for (int it = 0; it < 500; ++it) {
      std::vector<double> w = s.mul(v);
      double norm = 0.0;
      for (double x : w) norm += x * x;
      norm = std::sqrt(norm);
      for (int i = 0; i < 4; ++i) v[i] = w[i] / norm;
      lam = norm;
    }
    CHECK(lambda_plus(s) == doctest::Approx(lam).epsilon(1e-8));
  }
}

TEST_CASE("symmetrization at construction") {
  Mat m(2, 2);
  m(0, 1) = 1.0;
  m(1, 0) = 3.0;
  SymMatrix s(m);
  CHECK(s(0, 1) == 2.0);
  CHECK(s(0, 1) == s(1, 0));
}
