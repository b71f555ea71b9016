#include "doctest.h"

#include <random>

#include "diracsea/evolution.hpp"
#include "fixtures.hpp"
#include "oracles.hpp"

using namespace diracsea;

namespace {
constexpr double kTol = 1e-10;
}

TEST_CASE("hamiltonian examples") {
  const auto s = fixtures::constant_scale(1.0);
  const Mode diag(0.0, 1.0, 1.0, false);
  CHECK((hamiltonian(diag, s, 1.0).matrix() - pauli::sigma3()).norm() == 0.0);

  const Mode m(1.5, 1.0, 1.0);
  const auto dust = dust_scale(1.0);
  const Matrix2 h0 = hamiltonian(m, dust, 1e-12).matrix();
  CHECK(std::abs(h0(0, 1) + 1.5) < 1e-15);
  CHECK(std::abs(h0(0, 0)) < 1e-12);

  const auto ev = hamiltonian(m, fixtures::constant_scale(2.0), 1.0).eigenvalues();
  CHECK(ev[0] == doctest::Approx(-2.5));
  CHECK(ev[1] == doctest::Approx(2.5));
  CHECK_THROWS_AS(hamiltonian(m, dust, 0.0), Error);
  CHECK_THROWS_AS(hamiltonian(m, dust, kPi), Error);
}

TEST_CASE("evolve: trivial interval and tolerance range") {
  const Mode m(1.5, 1.0, kPi / 2);
  const auto dust = dust_scale(5.0);
  CHECK((evolve(m, dust, 1.0, 1.0, kTol).u.matrix() - Matrix2::Identity()).norm() == 0.0);
  CHECK_THROWS_AS(evolve(m, dust, 1.0, 2.0, 1e-3), Error);
  CHECK_THROWS_AS(evolve(m, dust, 1.0, 2.0, 1e-15), Error);
}

TEST_CASE("evolve: decoupled diagonal case") {
  const Mode m(0.0, 1.3, 1.0, false);
  const auto s = fixtures::constant_scale(2.0);
  const auto res = evolve(m, s, 0.4, 2.1, kTol);
  const double ph = 1.3 * 2.0 * 1.7;
  CHECK(std::abs(res.u.matrix()(0, 0) - std::exp(Complex(0.0, -ph))) < 1e-9);
  CHECK(std::abs(res.u.matrix()(1, 1) - std::exp(Complex(0.0, ph))) < 1e-9);
  CHECK(std::abs(res.u.matrix()(0, 1)) < 1e-12);
}

TEST_CASE("evolve: constant R against the matrix exponential") {
  const Mode m(2.5, 0.7, 1.0);
  const auto s = fixtures::constant_scale(3.0);
  const auto res = evolve(m, s, 0.3, 2.8, kTol);
  Matrix2 h;
  h << 0.7 * 3.0, -2.5, -2.5, -0.7 * 3.0;
  CHECK(oracle::norm2(res.u.matrix() - oracle::expm(h, 2.5)) < 10 * kTol);
}

TEST_CASE("evolve: dust against a fine fixed-step RK4") {
  const Mode m(1.5, 1.0, 1.0);
  const auto dust = dust_scale(10.0);
  const auto res = evolve(m, dust, 0.5, 2.5, kTol);
  const Matrix2 ref = oracle::rk4_evolution(1.5, 1.0, [&](double t) { return dust(t); }, 0.5, 2.5, 200000);
  CHECK(oracle::norm2(res.u.matrix() - ref) < 10 * kTol * 2.0);
  CHECK(res.max_unitarity_defect <= 1e-10);
}

TEST_CASE("evolve: half-rotation segment equals -iH/f") {
  const Mode m(1.5, 1.0, 0.0);
  const double r = 2.0;
  const double f = 2.5;
  const double dt = kPi * 0.5 / f;
  const auto s = ScaleFunction::piecewise({0.0, dt}, {r});
  const Matrix2 u = evolve(m, s, 0.0, dt, kTol).u.matrix();
  Matrix2 h;
  h << r, -1.5, -1.5, -r;
  const Matrix2 expected = Complex(0.0, -1.0) * h / f;
  CHECK(oracle::norm2(u - expected) < 1e-14);
  CHECK(oracle::norm2(u - oracle::expm(h, dt)) < 1e-13);
}

TEST_CASE("evolve: group law and reversibility on random triples") {
  std::mt19937 rng(11);
  std::uniform_real_distribution<double> t(0.05, kPi - 0.05);
  const Mode m(-2.5, 1.0, 1.0);
  const auto dust = dust_scale(8.0);
  for (int i = 0; i < 10; ++i) {
    std::array<double, 3> x{t(rng), t(rng), t(rng)};
    std::sort(x.begin(), x.end());
    const Matrix2 ca = evolve(m, dust, x[0], x[2], kTol).u.matrix();
    const Matrix2 cb = evolve(m, dust, x[1], x[2], kTol).u.matrix();
    const Matrix2 ba = evolve(m, dust, x[0], x[1], kTol).u.matrix();
    CHECK(spectral_norm(Matrix2(ca - cb * ba)) <= 10 * kTol);
    const Matrix2 ac = evolve(m, dust, x[2], x[0], kTol).u.matrix();
    CHECK(spectral_norm(Matrix2(ac - ca.adjoint())) <= 10 * kTol);
  }
}

TEST_CASE("wkb frame") {
  const Mode m(1.5, 1.0, 1.0);
  const auto s = fixtures::constant_scale(2.0);
  const auto fr = wkb_frame(m, s, 1.0, kTol);
  CHECK(fr.f == doctest::Approx(2.5));
  CHECK(fr.phase == 0.0);
  Matrix2 coeff;
  coeff << 2.0, -1.5, -1.5, -2.0;
  Matrix2 target = Matrix2::Zero();
  target(0, 0) = 2.5;
  target(1, 1) = -2.5;
  CHECK(spectral_norm(Matrix2(fr.v.matrix() * coeff * fr.v.matrix().adjoint() - target)) <= 1e-12);

  const auto dust = dust_scale(3.0);
  CHECK(wkb_frame(m, dust, 1e-9, kTol).f == doctest::Approx(1.5));

  for (double lambda : {1.5, -1.5, 3.5, -7.5}) {
    const Mode mm(lambda, 2.0, 1.0);
    for (double t : {0.2, 1.4, 2.9}) {
      const double r = dust(t);
      Matrix2 c;
      c << 2.0 * r, -lambda, -lambda, -2.0 * r;
      const Matrix2 v = diagonalizer(mm, dust, t).matrix();
      const double f = std::hypot(lambda, 2.0 * r);
      Matrix2 d = Matrix2::Zero();
      d(0, 0) = f;
      d(1, 1) = -f;
      CHECK(spectral_norm(Matrix2(v * c * v.adjoint() - d)) <= 1e-12 * std::max(1.0, f));
      // First components of the eigenvectors (columns of V^dagger) are real and non-negative.
      const Matrix2 vd = v.adjoint();
      CHECK(vd(0, 0).real() >= 0.0);
      CHECK(vd(0, 1).real() >= 0.0);
      CHECK(std::abs(vd(0, 0).imag()) == 0.0);
    }
  }
  const Mode zero(0.0, 1.0, 1.0, false);
  CHECK_THROWS_AS(wkb_frame(zero, dust, 1e-300, kTol), Error);
}

TEST_CASE("wkb evolution") {
  const Mode m(1.5, 1.0, 1.0);
  const auto dust = dust_scale(4.0);
  CHECK(spectral_norm(Matrix2(wkb_evolve(m, dust, 1.3, 1.3, kTol).matrix() - Matrix2::Identity())) < 1e-15);

  const auto c = fixtures::constant_scale(2.0);
  const Matrix2 exact = evolve(m, c, 0.7, 2.6, kTol).u.matrix();
  CHECK(spectral_norm(Matrix2(exact - wkb_evolve(m, c, 0.7, 2.6, kTol).matrix())) <= 10 * kTol);
}

TEST_CASE("wkb phase against Simpson") {
  const Mode m(2.5, 1.5, 1.0);
  const auto dust = dust_scale(6.0);
  const double ref =
      oracle::simpson([&](double t) { return std::hypot(2.5, 1.5 * dust(t)); }, 0.4, 2.7, 200000);
  CHECK(wkb_phase(m, dust, 0.4, 2.7, kTol) == doctest::Approx(ref).epsilon(1e-10));
  CHECK(wkb_phase(m, dust, 2.7, 0.4, kTol) == doctest::Approx(-ref).epsilon(1e-10));
}

TEST_CASE("deviation W: identity at tau0, two routes agree") {
  const Mode m(1.5, 1.0, 1.2);
  const auto dust = dust_scale(10.0);
  CHECK(wkb_deviation(m, dust, 1.2, kTol).distance < 1e-15);
  for (double t : {0.5, 2.0, 2.5}) {
    const Matrix2 direct = wkb_deviation(m, dust, t, kTol).w.matrix();
    const Matrix2 ode = integrate_deviation(m, dust, t, kTol).matrix();
    CHECK(spectral_norm(Matrix2(direct - ode)) <= 1e-8);
  }
}

TEST_CASE("deviation generator: closed form equals the definition for lambda > 0") {
  const auto dust = dust_scale(10.0);
  for (double lambda : {1.5, 4.5}) {
    const Mode m(lambda, 1.0, 1.4);
    for (double t : {0.3, 1.0, 2.2}) {
      const double phase = wkb_phase(m, dust, 1.4, t, kTol);
      const Matrix2 a = deviation_generator(m, dust, t, phase);
      const Matrix2 b = deviation_generator_closed_form(m, dust, t, phase);
      CHECK(spectral_norm(Matrix2(a - b)) <= 1e-10 * std::max(1.0, spectral_norm(a)));
      // X is anti-hermitian since W stays unitary.
      CHECK(spectral_norm(Matrix2(a + a.adjoint())) <= 1e-12 * std::max(1.0, spectral_norm(a)));
    }
  }
}

TEST_CASE("deviation: weighted supremum bounded uniformly in R_max") {
  // sup ||W - 1|| m R / |lambda| over [0.5, 2.5] for r_max = 10 and 100.
  const Mode m(1.5, 1.0, kPi / 2);
  const auto a = wkb_deviation_sup(m, dust_scale(10.0), 0.5, 2.5, kTol);
  const auto b = wkb_deviation_sup(m, dust_scale(100.0), 0.5, 2.5, kTol);
  MESSAGE("weighted sup: r=10 -> " << a.weighted_sup << ", r=100 -> " << b.weighted_sup);
  CHECK(b.weighted_sup <= 2.0 * a.weighted_sup);
  CHECK(b.sup < a.sup);
}

TEST_CASE("deviation: monotone-interval bound") {
  // On an interval where R is monotone, ||W - 1|| changes by at most half the change of
  // arctan(m R / lambda).
  std::mt19937 rng(5);
  std::uniform_real_distribution<double> t(0.1, kPi - 0.1);
  const auto dust = dust_scale(20.0);
  for (double lambda : {1.5, 2.5}) {
    const Mode m(lambda, 1.0, kPi / 2);
    for (int i = 0; i < 10; ++i) {
      double t1 = t(rng), t2 = t(rng);
      if (t1 > t2) std::swap(t1, t2);
      const double d1 = wkb_deviation(m, dust, t1, kTol).distance;
      const double d2 = wkb_deviation(m, dust, t2, kTol).distance;
      const double bound = 0.5 * std::abs(std::atan(dust(t2) / lambda) - std::atan(dust(t1) / lambda));
      CHECK(std::abs(d2 - d1) <= bound + 1e-8);
    }
  }
}
