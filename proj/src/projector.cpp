#include "diracsea/projector.hpp"

#include <algorithm>
#include <cmath>

#include <boost/math/quadrature/gauss.hpp>
#include <boost/math/quadrature/gauss_kronrod.hpp>

namespace diracsea {

namespace {

constexpr Complex kI{0.0, 1.0};
constexpr int kMaxHalvings = 80;

void store(const Matrix2& m, Eigen::Ref<Eigen::VectorXcd> out) {
  out[0] = m(0, 0);
  out[1] = m(1, 0);
  out[2] = m(0, 1);
  out[3] = m(1, 1);
}

Matrix2 load(const Eigen::VectorXcd& v) {
  Matrix2 m;
  m << v[0], v[2], v[1], v[3];
  return m;
}

// Integral of (U(t))^dagger sigma_3 U(t) over [0, t_len] for U(t) = exp(-i H t) U_start,
// using the rotation of the Bloch vector of sigma_3 about h = (-lambda, 0, mR)/f.
Matrix2 segment_signature(double lambda, double mr, double t_len, const Matrix2& u_start) {
  const double f = std::hypot(lambda, mr);
  const Vec3 h(-lambda / f, 0.0, mr / f);
  const Vec3 e3(0.0, 0.0, 1.0);
  const Vec3 along = e3.dot(h) * h;
  const Vec3 perp = e3 - along;
  const Vec3 cross = h.cross(e3);
  const double w = 2.0 * f;
  const Vec3 b = along * t_len + perp * (std::sin(w * t_len) / w) - cross * ((1.0 - std::cos(w * t_len)) / w);
  return u_start.adjoint() * pauli::dot(b) * u_start;
}

SignatureResult piecewise_signature(const Mode& mode, const ScaleFunction& scale) {
  const double tau0 = mode.tau0();
  check_time(scale, tau0, "tau0");
  const auto& bp = scale.breakpoints();
  const auto& vals = scale.values();
  Matrix2 s = Matrix2::Zero();
  for (std::size_t k = 0; k < vals.size(); ++k) {
    const double mr = mode.mass() * vals[k];
    // U^{t_k, tau0} by exact exponentials, then the rotating part in closed form.
    const Matrix2 u_start = evolve(mode, scale, tau0, bp[k], 1e-12).u.matrix();
    s += vals[k] * segment_signature(mode.lambda(), mr, bp[k + 1] - bp[k], u_start);
  }
  SignatureResult r = analyze_signature(s, scale.integral(0.0, scale.end()), 0.0);
  r.steps = static_cast<long>(vals.size());
  return r;
}

template <typename Propagator>
SignatureResult smooth_signature(const Mode& mode, const ScaleFunction& scale, const Tolerances& tol,
                                 Propagator&& propagator_at) {
  const double delta = endpoint_cut(scale, tol.quad_tol);
  const double tail = scale.integral(0.0, delta) + scale.integral(kPi - delta, kPi);
  Accumulator acc;
  acc.dim = 4;
  acc.integrand = [&](double t, const PropagationState& st, Eigen::Ref<Eigen::VectorXcd> out) {
    const Matrix2 u = propagator_at(t, st);
    store(u.adjoint() * pauli::sigma3() * u * st.r, out);
  };
  const AccumulationResult a = accumulate(mode, scale, delta, kPi - delta, acc, tol.ode_tol);
  const double bound = scale.integral(0.0, kPi);
  SignatureResult r = analyze_signature(load(a.value), bound, tail + tol.ode_tol * bound);
  r.delta = delta;
  r.steps = a.steps;
  return r;
}

Hermitian2 spectral_projection(const SignatureResult& s, double gap_tol, bool negative) {
  const double lo = s.eigenvalues[0];
  const double hi = s.eigenvalues[1];
  const double scale = std::max(spectral_norm(s.s.matrix()), s.integral_bound);
  const double threshold = gap_tol * scale;
  if (std::min(std::abs(lo), std::abs(hi)) < threshold || !(scale > 0.0))
    throw DegenerateSignature(lo, hi, threshold);
  Matrix2 p = Matrix2::Zero();
  for (int i = 0; i < 2; ++i) {
    const bool take = negative ? s.eigenvalues[i] < 0.0 : s.eigenvalues[i] > 0.0;
    if (take) {
      const Spinor v = s.eigvectors.matrix().col(i);
      p += v * v.adjoint();
    }
  }
  return Hermitian2::symmetrize(p);
}

}  // namespace

SignatureResult analyze_signature(const Matrix2& s, double integral_bound, double quad_error) {
  SignatureResult r;
  r.hermiticity_defect = spectral_norm(Matrix2(s - s.adjoint())) / std::max(1.0, spectral_norm(s));
  r.s = Hermitian2::symmetrize(s);
  Eigen::SelfAdjointEigenSolver<Matrix2> es(r.s.matrix());
  r.eigenvalues = {es.eigenvalues()(0), es.eigenvalues()(1)};
  r.eigvectors = Unitary2::project(es.eigenvectors());
  r.quad_error_estimate = quad_error;
  r.integral_bound = integral_bound;
  return r;
}

double endpoint_cut(const ScaleFunction& scale, double quad_tol) {
  if (!(quad_tol > 0.0)) fail(ErrorKind::InvalidParameter, "quad_tol must be positive");
  double delta = 0.1;
  for (int i = 0; i < kMaxHalvings; ++i) {
    const double tail = scale.integral(0.0, delta) + scale.integral(kPi - delta, kPi);
    if (tail < quad_tol) return delta;
    delta *= 0.5;
  }
  fail(ErrorKind::ConvergenceFailure, "endpoint tail bound not reached");
}

SignatureResult signature_operator(const Mode& mode, const ScaleFunction& scale, const Tolerances& tol) {
  if (!scale.is_smooth()) return piecewise_signature(mode, scale);
  return smooth_signature(mode, scale, tol, [](double, const PropagationState& st) { return st.u; });
}

SignatureResult signature_operator_wkb(const Mode& mode, const ScaleFunction& scale, const Tolerances& tol) {
  if (!scale.is_smooth()) {
    // Each segment of a piecewise scale is integrated like a smooth interval.
    const double r0 = scale(mode.tau0());
    Accumulator acc;
    acc.dim = 4;
    acc.integrand = [&](double, const PropagationState& st, Eigen::Ref<Eigen::VectorXcd> out) {
      const Matrix2 u = wkb_propagator(mode, st.r, r0, st.phase);
      store(u.adjoint() * pauli::sigma3() * u * st.r, out);
    };
    const AccumulationResult a = accumulate(mode, scale, 0.0, scale.end(), acc, tol.ode_tol);
    const double bound = scale.integral(0.0, scale.end());
    SignatureResult r = analyze_signature(load(a.value), bound, tol.ode_tol * bound);
    r.steps = a.steps;
    return r;
  }
  const double r0 = scale(mode.tau0());
  return smooth_signature(mode, scale, tol, [&](double, const PropagationState& st) {
    return wkb_propagator(mode, st.r, r0, st.phase);
  });
}

// ---------------------------------------------------------------------------

WkbIntegrals wkb_integrals(const Mode& mode, const ScaleFunction& scale) {
  using boost::math::quadrature::gauss;
  using Rule = gauss<double, 20>;
  const double lambda = mode.lambda();
  const double m = mode.mass();
  const double tau0 = mode.tau0();
  const double end = scale.end();
  auto f = [&](double t) { return std::hypot(lambda, m * scale(t)); };

  WkbIntegrals out;
  auto add_panel = [&](double a, double b, double phase_a) {
    const auto& x = Rule::abscissa();
    const auto& w = Rule::weights();
    const double mid = 0.5 * (a + b);
    const double half = 0.5 * (b - a);
    auto node = [&](double t, double weight) {
      const double phase = phase_a + Rule::integrate(f, a, t);
      const double phi = -2.0 * phase;
      const double r = scale(t);
      const double ft = f(t);
      out.cos_term += weight * half * std::cos(phi) * r / ft;
      out.sin_term += weight * half * std::sin(phi) * r / ft;
      out.mass_term += weight * half * r * r / ft;
    };
    // gauss<> stores the non-negative abscissae only.
    for (std::size_t i = 0; i < x.size(); ++i) {
      node(mid + half * x[i], w[i]);
      if (x[i] != 0.0) node(mid - half * x[i], w[i]);
    }
  };

  const double f_max = std::hypot(lambda, m * scale.r_max());
  auto sweep = [&](double from, double to) {
    // Panels of phase extent at most one radian in phi = -2 int f.
    const double len = std::abs(to - from);
    if (len == 0.0) return;
    const int panels = std::max(8, static_cast<int>(std::ceil(2.0 * f_max * len)));
    const double step = (to - from) / panels;
    double phase = 0.0;
    for (int k = 0; k < panels; ++k) {
      const double a = from + k * step;
      const double b = (k + 1 == panels) ? to : a + step;
      if (b > a) {
        add_panel(a, b, phase);
      } else {
        // Panel runs backwards from tau0: integrate on [b, a] with the phase at b.
        const double phase_b = phase - Rule::integrate(f, b, a);
        add_panel(b, a, phase_b);
      }
      phase += (b > a ? 1.0 : -1.0) * Rule::integrate(f, std::min(a, b), std::max(a, b));
    }
  };
  if (scale.is_smooth()) {
    sweep(tau0, end);
    sweep(tau0, 0.0);
  } else {
    // Panels must not straddle a jump of R.
    const auto& bp = scale.breakpoints();
    double phase = 0.0;
    std::vector<std::pair<double, double>> forward, backward;
    for (std::size_t k = 0; k + 1 < bp.size(); ++k) {
      const double a = bp[k];
      const double b = bp[k + 1];
      if (b <= tau0) backward.emplace_back(b, a);
      else if (a >= tau0) forward.emplace_back(a, b);
      else {
        backward.emplace_back(tau0, a);
        forward.emplace_back(tau0, b);
      }
    }
    std::reverse(backward.begin(), backward.end());
    // Sweeps restart from tau0, so accumulate phases piece by piece.
    auto run = [&](const std::vector<std::pair<double, double>>& pieces) {
      double acc_phase = 0.0;
      for (const auto& [from, to] : pieces) {
        const double len = std::abs(to - from);
        const int panels = std::max(8, static_cast<int>(std::ceil(2.0 * f_max * len)));
        const double step = (to - from) / panels;
        for (int k = 0; k < panels; ++k) {
          const double a = from + k * step;
          const double b = (k + 1 == panels) ? to : a + step;
          const double lo = std::min(a, b);
          const double hi = std::max(a, b);
          const double r_piece = scale(0.5 * (lo + hi));
          auto fc = [&](double) { return std::hypot(lambda, m * r_piece); };
          const double phase_lo = b > a ? acc_phase : acc_phase - fc(0.0) * (hi - lo);
          const auto& x = Rule::abscissa();
          const auto& w = Rule::weights();
          const double mid = 0.5 * (lo + hi);
          const double half = 0.5 * (hi - lo);
          const double ft = fc(0.0);
          auto node = [&](double t, double weight) {
            const double phi = -2.0 * (phase_lo + ft * (t - lo));
            out.cos_term += weight * half * std::cos(phi) * r_piece / ft;
            out.sin_term += weight * half * std::sin(phi) * r_piece / ft;
            out.mass_term += weight * half * r_piece * r_piece / ft;
          };
          for (std::size_t i = 0; i < x.size(); ++i) {
            node(mid + half * x[i], w[i]);
            if (x[i] != 0.0) node(mid - half * x[i], w[i]);
          }
          acc_phase += (b > a ? 1.0 : -1.0) * ft * (hi - lo);
        }
      }
    };
    run(forward);
    run(backward);
    (void)phase;
  }
  return out;
}

std::array<double, 2> wkb_eigenvalues_closed_form(const Mode& mode, const ScaleFunction& scale) {
  const WkbIntegrals in = wkb_integrals(mode, scale);
  const double lambda = mode.lambda();
  const double mu = std::sqrt(std::pow(lambda * in.cos_term, 2) + std::pow(lambda * in.sin_term, 2) +
                              std::pow(mode.mass() * in.mass_term, 2));
  return {-mu, mu};
}

Hermitian2 wkb_signature_leading_term(const Mode& mode, const ScaleFunction& scale) {
  const double lambda = mode.lambda();
  const double m = mode.mass();
  auto integrand = [&](double t) {
    const double r = scale(t);
    return m * r * r / std::hypot(lambda, m * r);
  };
  double weight = 0.0;
  if (scale.is_smooth()) {
    weight = boost::math::quadrature::gauss_kronrod<double, 61>::integrate(integrand, 0.0, kPi, 15, 1e-14);
  } else {
    const auto& bp = scale.breakpoints();
    for (std::size_t k = 0; k < scale.values().size(); ++k)
      weight += integrand(0.5 * (bp[k] + bp[k + 1])) * (bp[k + 1] - bp[k]);
  }
  const Matrix2 v0 = diagonalizer(mode, scale, mode.tau0()).matrix();
  return Hermitian2::symmetrize(weight * v0.adjoint() * pauli::sigma3() * v0);
}

// ---------------------------------------------------------------------------

const char* provenance_name(Provenance p) {
  switch (p) {
    case Provenance::Exact: return "exact";
    case Provenance::Wkb: return "wkb";
    case Provenance::WkbLeadingOrder: return "wkb_leading_order";
  }
  return "unknown";
}

namespace {

template <typename Kernel>
Spinor apply_kernel(const Mode& mode, const ScaleFunction& scale, const TestFunction& phi, double tol,
                    Kernel&& kernel) {
  if (phi.is_zero()) return Spinor::Zero();
  const double a = phi.support_begin();
  const double b = std::min(phi.support_end(), scale.end());
  if (!scale.is_smooth() && phi.support_end() > scale.end())
    fail(ErrorKind::Domain, "test function support exceeds the scenario duration");
  Accumulator acc;
  acc.dim = 2;
  acc.integrand = [&](double t, const PropagationState& st, Eigen::Ref<Eigen::VectorXcd> out) {
    out = kernel(t, st) * (pauli::sigma3() * phi(t)) * (st.r / (2.0 * kPi));
  };
  return accumulate(mode, scale, a, b, acc, tol).value;
}

}  // namespace

ProjectorOutput k_m_apply(const Mode& mode, const ScaleFunction& scale, const TestFunction& phi, double tol) {
  ProjectorOutput out;
  out.provenance = Provenance::Exact;
  out.value = apply_kernel(mode, scale, phi, tol,
                           [](double, const PropagationState& st) -> Matrix2 { return st.u.adjoint(); });
  return out;
}

ProjectorOutput k_wkb_apply(const Mode& mode, const ScaleFunction& scale, const TestFunction& phi, double tol) {
  ProjectorOutput out;
  out.provenance = Provenance::Wkb;
  const double r0 = scale(mode.tau0());
  out.value = apply_kernel(mode, scale, phi, tol, [&](double, const PropagationState& st) -> Matrix2 {
    return wkb_propagator(mode, st.r, r0, st.phase).adjoint();
  });
  return out;
}

Hermitian2 negative_projection(const SignatureResult& s, double gap_tol) {
  return spectral_projection(s, gap_tol, true);
}

Hermitian2 positive_projection(const SignatureResult& s, double gap_tol) {
  return spectral_projection(s, gap_tol, false);
}

ProjectorOutput fermionic_projector_apply(const Mode& mode, const ScaleFunction& scale,
                                          const TestFunction& phi, const SignatureResult& s,
                                          const Tolerances& tol) {
  const Hermitian2 proj = negative_projection(s, tol.gap_tol);
  ProjectorOutput out;
  out.provenance = Provenance::Exact;
  out.value = -(proj.matrix() * k_m_apply(mode, scale, phi, tol.ode_tol).value);
  return out;
}

ProjectorOutput fermionic_projector_apply(const Mode& mode, const ScaleFunction& scale,
                                          const TestFunction& phi, const Tolerances& tol) {
  return fermionic_projector_apply(mode, scale, phi, signature_operator(mode, scale, tol), tol);
}

ProjectorOutput p_wkb_apply(const Mode& mode, const ScaleFunction& scale, const TestFunction& phi,
                            const Tolerances& tol, WkbVariant variant) {
  ProjectorOutput out;
  if (variant == WkbVariant::Full) {
    const Hermitian2 proj = negative_projection(signature_operator_wkb(mode, scale, tol), tol.gap_tol);
    out.provenance = Provenance::Wkb;
    out.value = -(proj.matrix() * k_wkb_apply(mode, scale, phi, tol.ode_tol).value);
    return out;
  }
  const Matrix2 v0 = diagonalizer(mode, scale, mode.tau0()).matrix();
  out.provenance = Provenance::WkbLeadingOrder;
  out.value = -apply_kernel(mode, scale, phi, tol.ode_tol, [&](double, const PropagationState& st) -> Matrix2 {
    Matrix2 d = Matrix2::Zero();
    d(1, 1) = std::exp(-kI * st.phase);  // exp(i int_tau^tau0 f)
    return v0.adjoint() * d * diagonalizer_at(mode, st.r);
  });
  return out;
}

}  // namespace diracsea
