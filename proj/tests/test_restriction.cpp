#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>

#include "rrbeam/restriction.hpp"
#include "rrbeam/rng.hpp"

using namespace rrbeam;

TEST_CASE("bernstein bound closed-form values") {
  CHECK(bernstein_bound(SymMatrix::identity(2), {0.0, 0.0}, 3.0) ==
        doctest::Approx(2.0 + 2.0 * std::sqrt(3.0) + 3.0).epsilon(1e-12));
  SymMatrix s(2);
  s.set(0, 0, 1.7);
  s.set(1, 1, -0.4);
  s.set(0, 1, 0.9);
  CHECK(bernstein_bound(s, {0.3, -0.1}, 0.0) == doctest::Approx(s.trace()).epsilon(1e-14));
  CHECK(bernstein_bound(SymMatrix(2), {1.0, 0.0}, 2.0) ==
        doctest::Approx(2.0 * std::sqrt(2.0)).epsilon(1e-12));
}

TEST_CASE("restrict_outage builds the deterministic constraint") {
  Efim identity{SymMatrix::identity(2), std::nullopt};
  DeterministicConstraint dc = restrict_outage({3, 4}, {0, 0}, identity, 1.0, 30.0, 0.05);
  CHECK(dc.r_vec.x == doctest::Approx(3.0));
  CHECK(dc.r_vec.y == doctest::Approx(4.0));
  CHECK(dc.nu == doctest::Approx(5.0));
  CHECK(dc.zeta == doctest::Approx(2.99573).epsilon(1e-5));

  DeterministicConstraint co = restrict_outage({7, 7}, {7, 7}, identity, 2.0, 4.0, 0.05);
  CHECK(co.nu == doctest::Approx(8.0));
  CHECK(co.r_vec.norm() == doctest::Approx(0.0));

  Efim singular{SymMatrix::diag({1.0, 0.0}), std::nullopt};
  CHECK_THROWS_AS(restrict_outage({1, 1}, {0, 0}, singular, 1.0, 1.0, 0.05), SingularMatrix);
}

TEST_CASE("feasibility at the tight auxiliary pair") {
  DeterministicConstraint big;
  big.s_mat = SymMatrix::identity(2);
  big.r_vec = {1.0, 2.0};
  big.zeta = 3.0;
  big.nu = 1e12;
  CHECK(feasible(big).feasible);

  DeterministicConstraint tight;
  tight.s_mat = SymMatrix::identity(2);
  tight.r_vec = {0.0, 0.0};
  tight.zeta = 3.0;
  tight.nu = 8.0;  // bound is 8.4641...
  auto res = feasible(tight);
  CHECK_FALSE(res.feasible);
  CHECK(res.tight.varpi == doctest::Approx(std::sqrt(2.0)));
  CHECK(res.tight.varrho == doctest::Approx(1.0));

  // Boundary: nu exactly equal to the bound is feasible (closed set).
  tight.nu = tight.s_mat.trace() + std::sqrt(2.0 * tight.zeta) * res.tight.varpi +
             tight.zeta * res.tight.varrho;
  CHECK(feasible(tight).feasible);
}

TEST_CASE("feasibility is monotone in nu") {
  Rng rng(3);
  for (int trial = 0; trial < 100; ++trial) {
    DeterministicConstraint dc;
    Mat a(2, 2);
    for (int i = 0; i < 2; ++i)
      for (int j = 0; j < 2; ++j) a(i, j) = rng.normal();
    dc.s_mat = SymMatrix(a * transpose(a));
    dc.r_vec = {rng.normal(), rng.normal()};
    dc.zeta = 0.5 + 3.0 * rng.uniform01();
    dc.nu = rng.normal() * 5.0;
    const bool before = feasible(dc).feasible;
    dc.nu += std::abs(rng.normal());
    if (before) CHECK(feasible(dc).feasible);
  }
}

TEST_CASE("bernstein tail validity on gaussian quadratic forms") {
  Rng rng(5);
  const int samples = 100000;
  for (int trial = 0; trial < 3; ++trial) {
    SymMatrix s(2);
    s.set(0, 0, rng.normal());
    s.set(1, 1, rng.normal());
    s.set(0, 1, rng.normal());
    std::vector<double> sv = {rng.normal(), rng.normal()};
    for (double zeta : {1.0, 2.0, 3.0}) {
      const double bound = bernstein_bound(s, sv, zeta);
      int exceed = 0;
      for (int k = 0; k < samples; ++k) {
        const double z0 = rng.normal(), z1 = rng.normal();
        const double chi = s(0, 0) * z0 * z0 + 2.0 * s(0, 1) * z0 * z1 + s(1, 1) * z1 * z1 +
                           2.0 * (z0 * sv[0] + z1 * sv[1]);
        if (chi >= bound) ++exceed;
      }
      const double p = std::exp(-zeta);
      const double sigma_hat = std::sqrt(p * (1.0 - p) / samples);
      CHECK(double(exceed) / samples <= p + 3.0 * sigma_hat);
    }
  }
}

TEST_CASE("chance-constraint soundness of feasible points") {
  Rng rng(7);
  const int samples = 100000;
  const double p_out = 0.05;
  for (int trial = 0; trial < 3; ++trial) {
    DeterministicConstraint dc;
    Mat a(2, 2);
    for (int i = 0; i < 2; ++i)
      for (int j = 0; j < 2; ++j) a(i, j) = rng.normal();
    dc.s_mat = SymMatrix(a * transpose(a));
    dc.r_vec = {rng.normal(), rng.normal()};
    dc.zeta = -std::log(p_out);
    // Make the constraint exactly tight, hence feasible.
    dc.nu = dc.s_mat.trace() +
            std::sqrt(2.0 * dc.zeta) *
                std::sqrt(std::pow(dc.s_mat.frobenius_norm(), 2) + 2.0 * dc.r_vec.norm_sq()) +
            dc.zeta * lambda_plus(dc.s_mat);
    REQUIRE(feasible(dc).feasible);

    int violations = 0;
    for (int k = 0; k < samples; ++k) {
      const Vec2 e{rng.normal(), rng.normal()};
      const double chi = dc.s_mat.quad_form(e) + 2.0 * dot(e, dc.r_vec);
      if (chi >= dc.nu) ++violations;
    }
    const double sigma_hat = std::sqrt(p_out * (1.0 - p_out) / samples);
    CHECK(double(violations) / samples <= p_out + 3.0 * sigma_hat);
  }
}
