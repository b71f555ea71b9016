#include "doctest.h"

#include <random>

#include "diracsea/bloch.hpp"
#include "diracsea/projector.hpp"
#include "fixtures.hpp"
#include "oracles.hpp"

using namespace diracsea;

namespace {

const Tolerances kTol{};

SignatureResult from_matrix(const Matrix2& s) { return analyze_signature(s, spectral_norm(s)); }

}  // namespace

TEST_CASE("signature operator: decoupled dust case") {
  const Mode m(0.0, 1.0, kPi / 2, false);
  const auto dust = dust_scale(6.0);
  const auto s = signature_operator(m, dust, kTol);
  const double integral = 6.0 * kPi / 2;  // int_0^pi 6 (1 - cos)/2
  CHECK(s.eigenvalues[0] == doctest::Approx(-integral).epsilon(1e-9));
  CHECK(s.eigenvalues[1] == doctest::Approx(integral).epsilon(1e-9));
  CHECK(std::abs(s.s.matrix()(0, 1)) < 1e-9);
  CHECK(s.s.matrix()(0, 0).real() == doctest::Approx(integral).epsilon(1e-9));

  const auto cf = wkb_eigenvalues_closed_form(m, dust);
  CHECK(cf[1] == doctest::Approx(integral).epsilon(1e-12));
  CHECK(cf[0] == -cf[1]);
}

TEST_CASE("signature operator: eigen-decomposition reconstructs S") {
  const Mode m(1.5, 1.0, kPi / 2);
  const auto s = signature_operator(m, dust_scale(5.0), kTol);
  const Matrix2 v = s.eigvectors.matrix();
  Matrix2 d = Matrix2::Zero();
  d(0, 0) = s.eigenvalues[0];
  d(1, 1) = s.eigenvalues[1];
  CHECK(spectral_norm(Matrix2(v * d * v.adjoint() - s.s.matrix())) <= 1e-12 * spectral_norm(s.s.matrix()));
  CHECK(s.hermiticity_defect <= 1e-12);
  CHECK(std::abs(pauli::decompose(s.s.matrix())[0]) < 1e-9);
}

TEST_CASE("signature operator: smooth quadrature against RK4 plus Simpson") {
  // Independent route: fixed-step RK4 on a fine grid, Simpson over [delta, pi - delta].
  const Mode m(1.5, 1.0, 1.0);
  const auto dust = dust_scale(3.0);
  const auto s = signature_operator(m, dust, kTol);
  const double lo = 1e-3, hi = kPi - 1e-3;
  const long n = 40000;
  const double h = (hi - lo) / n;
  const Matrix2 start = oracle::rk4_evolution(1.5, 1.0, [&](double t) { return dust(t); }, 1.0, lo, 20000);
  Matrix2 u = start;
  Matrix2 acc = Matrix2::Zero();
  auto g = [&](const Matrix2& x, double t) -> Matrix2 { return x.adjoint() * pauli::sigma3() * x * dust(t); };
  for (long i = 0; i <= n; ++i) {
    const double t = lo + i * h;
    const double w = (i == 0 || i == n) ? 1.0 : (i % 2 ? 4.0 : 2.0);
    acc += w * g(u, t);
    if (i < n) u = oracle::rk4_evolution(1.5, 1.0, [&](double x) { return dust(x); }, t, t + h, 1) * u;
  }
  acc *= h / 3.0;
  // The tails contribute at most int_0^1e-3 R + int_{pi-1e-3}^pi R.
  const double tails = dust.integral(0.0, lo) + dust.integral(hi, kPi);
  CHECK(spectral_norm(Matrix2(acc - s.s.matrix())) <= tails + 1e-7);
}

TEST_CASE("signature operator: constant R, WKB equals exact") {
  const Mode m(2.5, 1.0, 1.0);
  const auto c = fixtures::constant_scale(3.0);
  const auto s = signature_operator(m, c, kTol);
  const auto sw = signature_operator_wkb(m, c, kTol);
  CHECK(spectral_norm(Matrix2(s.s.matrix() - sw.s.matrix())) <= 10 * kTol.ode_tol * s.integral_bound);
}

TEST_CASE("WKB eigenvalues: quadrature against the closed form") {
  const Mode m(1.5, 1.0, kPi / 2);
  const auto dust = dust_scale(10.0);
  const auto sw = signature_operator_wkb(m, dust, kTol);
  const auto cf = wkb_eigenvalues_closed_form(m, dust);
  CHECK(std::abs(sw.eigenvalues[0] - cf[0]) <= 1e-6 * std::abs(cf[0]));
  CHECK(std::abs(sw.eigenvalues[1] - cf[1]) <= 1e-6 * std::abs(cf[1]));
}

TEST_CASE("WKB leading term") {
  const auto dust = dust_scale(1.0);
  const Mode m(1.5, 2.0, kPi / 2);
  const auto lead = wkb_signature_leading_term(m, dust);
  const double ref = oracle::simpson(
      [&](double t) {
        const double r = dust(t);
        return 2.0 * r * r / std::hypot(1.5, 2.0 * r);
      },
      0.0, kPi, 200000);
  const auto ev = lead.eigenvalues();
  CHECK(ev[1] == doctest::Approx(ref).epsilon(1e-10));
  CHECK(ev[0] == doctest::Approx(-ref).epsilon(1e-10));

  // Decoupled case: the oscillatory terms carry a factor lambda. R must stay positive here.
  const Mode zero(0.0, 1.0, kPi / 2, false);
  const auto d6 = fixtures::constant_scale(6.0);
  const auto sw = signature_operator_wkb(zero, d6, kTol);
  CHECK(spectral_norm(Matrix2(sw.s.matrix() - wkb_signature_leading_term(zero, d6).matrix())) <= 1e-8);
}

TEST_CASE("WKB leading term: error times m stays bounded") {
  const auto dust = dust_scale(1.0);
  std::vector<double> scaled;
  for (double mass : {10.0, 100.0, 1000.0}) {
    const Mode m(1.5, mass, kPi / 2);
    const auto sw = signature_operator_wkb(m, dust, kTol);
    const auto lead = wkb_signature_leading_term(m, dust);
    scaled.push_back(mass * spectral_norm(Matrix2(sw.s.matrix() - lead.matrix())));
  }
  MESSAGE("m ||E||: " << scaled[0] << ", " << scaled[1] << ", " << scaled[2]);
  CHECK(scaled[1] <= 1.05 * scaled[0]);
  CHECK(scaled[2] <= 1.05 * scaled[0]);
}

TEST_CASE("oscillatory damping bound") {
  // |int R cos(phi) / f| <= N pi / (2 |lambda m|), N = number of monotone pieces of R.
  for (double r : {10.0, 50.0}) {
    for (double lambda : {1.5, 3.5}) {
      const Mode m(lambda, 1.0, kPi / 2);
      for (const auto& scale : {dust_scale(r), fixtures::sine_squared_scale(r)}) {
        const auto in = wkb_integrals(m, scale);
        const double bound = scale.monotone_pieces() * kPi / (2.0 * lambda);
        CHECK(std::abs(in.cos_term) <= bound);
        CHECK(std::abs(in.sin_term) <= bound);
      }
    }
  }
}

TEST_CASE("negative projection examples") {
  Matrix2 s = pauli::sigma3();
  Matrix2 expected = Matrix2::Zero();
  expected(1, 1) = 1.0;
  CHECK(spectral_norm(Matrix2(negative_projection(from_matrix(s)).matrix() - expected)) < 1e-15);

  s = pauli::sigma1();
  expected << 0.5, -0.5, -0.5, 0.5;
  CHECK(spectral_norm(Matrix2(negative_projection(from_matrix(s)).matrix() - expected)) < 1e-15);

  CHECK_THROWS_AS(negative_projection(analyze_signature(Matrix2::Zero(), 0.0)), DegenerateSignature);
  const auto twelve = build_twelve_segment();
  const auto st = signature_operator(twelve.mode(), twelve.scale(), kTol);
  try {
    negative_projection(st);
    FAIL("expected a degenerate signature");
  } catch (const DegenerateSignature& e) {
    CHECK(e.kind() == ErrorKind::DegenerateSignature);
    CHECK(std::abs(e.mu_minus()) < e.threshold());
  }
}

TEST_CASE("projection laws on random signature operators") {
  std::mt19937 rng(3);
  std::normal_distribution<double> n;
  for (int i = 0; i < 100; ++i) {
    Matrix2 a;
    for (int k = 0; k < 4; ++k) a(k / 2, k % 2) = Complex(n(rng), n(rng));
    const Matrix2 s = a + a.adjoint();
    const auto res = from_matrix(s);
    if (std::min(std::abs(res.eigenvalues[0]), std::abs(res.eigenvalues[1])) < 1e-3) continue;
    const Matrix2 p = negative_projection(res).matrix();
    const Matrix2 q = positive_projection(res).matrix();
    CHECK(spectral_norm(Matrix2(p * p - p)) <= 1e-12);
    CHECK(spectral_norm(Matrix2(p - p.adjoint())) <= 1e-12);
    CHECK(spectral_norm(Matrix2(p * q)) <= 1e-12);
    if (res.eigenvalues[0] < 0.0) CHECK(spectral_norm(p) == doctest::Approx(1.0).epsilon(1e-12));
  }
}

TEST_CASE("k_m: zero, bound, and narrow-bump limit") {
  const Mode m(1.5, 1.0, kPi / 2);
  const auto dust = dust_scale(10.0);
  CHECK(k_m_apply(m, dust, TestFunction::zero(1.0, 2.0), kTol.ode_tol).value.norm() == 0.0);

  const auto phi = bump(1.0, 2.0, Spinor(1.0, 0.0));
  const auto k = k_m_apply(m, dust, phi, kTol.ode_tol);
  CHECK(k.provenance == Provenance::Exact);
  CHECK(k.value.norm() <= dust.r_max() * phi.l1_norm() / (2.0 * kPi));

  // Bump of unit mass centred at tau*: k -> (1/2pi) U^dagger sigma_3 e_1 R(tau*) as the width shrinks.
  const double centre = 2.0;
  const Matrix2 u = evolve(m, dust, kPi / 2, centre, 1e-12).u.matrix();
  const Spinor limit = u.adjoint() * pauli::sigma3() * Spinor(1.0, 0.0) * dust(centre) / (2.0 * kPi);
  std::vector<double> errs;
  for (double w : {0.2, 0.1, 0.05}) {
    const auto raw = bump(centre - w, centre + w, Spinor(1.0, 0.0));
    const double mass = raw.l1_norm();
    const Spinor val = k_m_apply(m, dust, raw, 1e-12).value / mass;
    errs.push_back((val - limit).norm());
  }
  MESSAGE("delta-limit errors: " << errs[0] << ", " << errs[1] << ", " << errs[2]);
  // Quadratic in the width: halving it cuts the error by about four.
  CHECK(errs[1] < 0.35 * errs[0]);
  CHECK(errs[2] < 0.35 * errs[1]);
}

TEST_CASE("fermionic projector: zero, contraction, bound chain") {
  const Mode m(1.5, 1.0, kPi / 2);
  const auto dust = dust_scale(10.0);
  const auto s = signature_operator(m, dust, kTol);
  CHECK(fermionic_projector_apply(m, dust, TestFunction::zero(1.0, 2.0), s, kTol).value.norm() == 0.0);
  for (const Spinor dir : {Spinor(1.0, 0.0), Spinor(0.0, 1.0), Spinor(1.0, Complex(0.0, 1.0))}) {
    const auto phi = bump(0.7, 2.3, dir);
    const double p = fermionic_projector_apply(m, dust, phi, s, kTol).value.norm();
    const double k = k_m_apply(m, dust, phi, kTol.ode_tol).value.norm();
    CHECK(p <= k * (1 + 1e-12));
    CHECK(k <= dust.r_max() * phi.l1_norm() / (2.0 * kPi));
  }
}

TEST_CASE("positive and negative parts are S-orthogonal") {
  const Mode m(2.5, 1.0, kPi / 2);
  const auto dust = dust_scale(8.0);
  const auto s = signature_operator(m, dust, kTol);
  const Matrix2 pm = negative_projection(s).matrix();
  const Matrix2 pp = positive_projection(s).matrix();
  std::mt19937 rng(9);
  std::uniform_real_distribution<double> pos(0.3, 2.0);
  std::normal_distribution<double> n;
  for (int i = 0; i < 5; ++i) {
    const double a = pos(rng);
    const auto phi = bump(a, a + 0.8, Spinor(Complex(n(rng), n(rng)), Complex(n(rng), n(rng))));
    const double b = pos(rng);
    const auto psi = bump(b, b + 0.8, Spinor(Complex(n(rng), n(rng)), Complex(n(rng), n(rng))));
    const Spinor p_plus = pp * k_m_apply(m, dust, phi, kTol.ode_tol).value;
    const Spinor p_minus = -pm * k_m_apply(m, dust, psi, kTol.ode_tol).value;
    CHECK(std::abs(p_plus.dot(s.s.matrix() * p_minus)) <= 1e-10 * (1.0 + p_plus.norm() * p_minus.norm()));
  }
}

TEST_CASE("P_WKB: constant R and variants") {
  const Mode m(1.5, 1.0, 1.0);
  const auto c = fixtures::constant_scale(2.0);
  const auto phi = bump(0.5, 1.7, Spinor(1.0, 0.5));
  const auto p = fermionic_projector_apply(m, c, phi, kTol);
  const auto full = p_wkb_apply(m, c, phi, kTol, WkbVariant::Full);
  CHECK(full.provenance == Provenance::Wkb);
  CHECK((p.value - full.value).norm() <= 10 * kTol.ode_tol);
  const auto lo = p_wkb_apply(m, c, TestFunction::zero(0.5, 1.0), kTol, WkbVariant::LeadingOrder);
  CHECK(lo.provenance == Provenance::WkbLeadingOrder);
  CHECK(lo.value.norm() == 0.0);
  CHECK(p_wkb_apply(m, c, TestFunction::zero(0.5, 1.0), kTol, WkbVariant::Full).value.norm() == 0.0);
}

TEST_CASE("endpoint cut") {
  const auto dust = dust_scale(100.0);
  const double d = endpoint_cut(dust, 1e-10);
  CHECK(dust.integral(0.0, d) + dust.integral(kPi - d, kPi) < 1e-10);
  CHECK_THROWS_AS(endpoint_cut(fixtures::constant_scale(1.0), 1e-30), Error);
}
