#include "diracsea/evolution.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include "diracsea/integrator.hpp"

namespace diracsea {

namespace {

constexpr Complex kI{0.0, 1.0};

Eigen::Map<const Matrix2> as_matrix(const Eigen::VectorXcd& y) { return Eigen::Map<const Matrix2>(y.data()); }

double oscillation_ceiling(double f) { return 0.1 / f; }

Matrix2 coefficient_matrix(double lambda, double mr) {
  Matrix2 h;
  h << mr, -lambda, -lambda, -mr;
  return h;
}

}  // namespace

void validate_ode_tol(double tol) {
  if (!(tol > 1e-14 && tol < 1e-4)) {
    std::ostringstream os;
    os << "ode tolerance " << tol << " outside (1e-14, 1e-4)";
    fail(ErrorKind::InvalidParameter, os.str());
  }
}

void check_time(const ScaleFunction& scale, double tau, const char* what) {
  bool ok = std::isfinite(tau);
  if (scale.is_smooth())
    ok = ok && tau > 0.0 && tau < kPi;
  else
    ok = ok && tau >= 0.0 && tau <= scale.end();
  if (!ok) {
    std::ostringstream os;
    os.precision(17);
    os << what << " = " << tau << " outside the time domain "
       << (scale.is_smooth() ? "(0, pi)" : "[0, T]");
    fail(ErrorKind::Domain, os.str());
  }
}

Hermitian2 hamiltonian(const Mode& mode, const ScaleFunction& scale, double tau) {
  check_time(scale, tau, "tau");
  return Hermitian2::symmetrize(coefficient_matrix(mode.lambda(), mode.mass() * scale(tau)));
}

double frequency(const Mode& mode, const ScaleFunction& scale, double tau) {
  return std::hypot(mode.lambda(), mode.mass() * scale(tau));
}

Matrix2 constant_propagator(const Matrix2& h, double t) {
  // h is traceless hermitian with h^2 = f^2.
  const double f = std::sqrt(std::max(0.0, -h.determinant().real()));
  if (f == 0.0) return Matrix2::Identity();
  return std::cos(f * t) * Matrix2::Identity() - kI * (std::sin(f * t) / f) * h;
}

// ---------------------------------------------------------------------------

PropagationResult propagate(const Mode& mode, const ScaleFunction& scale, double tau_a, double tau_b,
                            const PropagationState& start, const Accumulator& acc, double tol,
                            const PropagationObserver& observer) {
  validate_ode_tol(tol);
  PropagationResult out;
  out.state = start;
  out.accumulated = Eigen::VectorXcd::Zero(acc.dim);
  if (tau_a == tau_b) return out;

  // Split at piecewise breakpoints; each piece has a constant (or smooth) coefficient.
  std::vector<double> cuts{tau_a};
  if (!scale.is_smooth()) {
    const auto& bp = scale.breakpoints();
    const double lo = std::min(tau_a, tau_b);
    const double hi = std::max(tau_a, tau_b);
    std::vector<double> inner;
    for (double b : bp)
      if (b > lo && b < hi) inner.push_back(b);
    if (tau_b < tau_a) std::reverse(inner.begin(), inner.end());
    cuts.insert(cuts.end(), inner.begin(), inner.end());
  }
  cuts.push_back(tau_b);

  const double lambda = mode.lambda();
  const double mass = mode.mass();
  const int n = 5 + acc.dim;
  Eigen::VectorXcd y(n);
  Eigen::Map<Matrix2>(y.data()) = start.u;
  y[4] = start.phase;
  y.tail(acc.dim).setZero();

  DormandPrince<Eigen::VectorXcd> stepper(tol);
  double h_prev = 0.0;
  double max_defect = 0.0;

  for (std::size_t piece = 0; piece + 1 < cuts.size(); ++piece) {
    const double t0 = cuts[piece];
    const double t1 = cuts[piece + 1];
    const bool fixed = !scale.is_smooth();
    const double r_fixed = fixed ? scale(0.5 * (t0 + t1)) : 0.0;
    auto radius = [&](double t) { return fixed ? r_fixed : scale(t); };

    PropagationState scratch;
    auto rhs = [&](double t, const Eigen::VectorXcd& s, Eigen::VectorXcd& ds) {
      const double mr = mass * radius(t);
      const Matrix2 u = as_matrix(s);
      Eigen::Map<Matrix2>(ds.data()) = -kI * (coefficient_matrix(lambda, mr) * u);
      ds[4] = std::hypot(lambda, mr);
      if (acc.dim > 0) {
        scratch.u = u;
        scratch.phase = s[4].real();
        scratch.r = radius(t);
        acc.integrand(t, scratch, ds.tail(acc.dim));
      }
    };
    auto ceiling = [&](double t) { return oscillation_ceiling(std::hypot(lambda, mass * radius(t))); };
    auto after = [&](double t, Eigen::VectorXcd& s) {
      Eigen::Map<Matrix2> u(s.data());
      max_defect = std::max(max_defect, unitarity_defect(u));
      u = polar_unitary(u);
      s[4] = s[4].real();
      if (observer) {
        PropagationState st{Matrix2(u), s[4].real(), radius(t)};
        observer(t, st);
      }
    };
    const IntegrationStats stats = stepper.integrate(rhs, y, t0, t1, ceiling, after, h_prev);
    h_prev = stats.last_step;
    out.steps += stats.accepted;
  }

  out.state.u = as_matrix(y);
  out.state.phase = y[4].real();
  out.accumulated = y.tail(acc.dim);
  out.max_unitarity_defect = max_defect;
  return out;
}

AccumulationResult accumulate(const Mode& mode, const ScaleFunction& scale, double a, double b,
                              const Accumulator& acc, double tol) {
  if (!(b >= a)) fail(ErrorKind::InvalidParameter, "accumulation interval must satisfy a <= b");
  check_time(scale, a, "integration start");
  check_time(scale, b, "integration end");
  const double tau0 = mode.tau0();
  check_time(scale, tau0, "tau0");
  AccumulationResult out;
  out.value = Eigen::VectorXcd::Zero(acc.dim);
  if (a == b) return out;

  auto absorb = [&](const PropagationResult& p) {
    out.steps += p.steps;
    out.max_unitarity_defect = std::max(out.max_unitarity_defect, p.max_unitarity_defect);
  };
  if (tau0 <= a || tau0 >= b) {
    const double near = tau0 <= a ? a : b;
    const double far = tau0 <= a ? b : a;
    const PropagationResult lead = propagate(mode, scale, tau0, near, {}, {}, tol);
    absorb(lead);
    const PropagationResult body = propagate(mode, scale, near, far, lead.state, acc, tol);
    absorb(body);
    out.value = tau0 <= a ? body.accumulated : Eigen::VectorXcd(-body.accumulated);
  } else {
    const PropagationResult up = propagate(mode, scale, tau0, b, {}, acc, tol);
    const PropagationResult down = propagate(mode, scale, tau0, a, {}, acc, tol);
    absorb(up);
    absorb(down);
    out.value = up.accumulated - down.accumulated;
  }
  return out;
}

EvolutionResult evolve(const Mode& mode, const ScaleFunction& scale, double tau_from, double tau_to,
                       double tol) {
  validate_ode_tol(tol);
  check_time(scale, tau_from, "tau_from");
  check_time(scale, tau_to, "tau_to");
  EvolutionResult res;
  res.tau_from = tau_from;
  res.tau_to = tau_to;
  if (tau_from == tau_to) return res;

  if (!scale.is_smooth()) {
    const double lo = std::min(tau_from, tau_to);
    const double hi = std::max(tau_from, tau_to);
    Matrix2 u = Matrix2::Identity();
    const auto& bp = scale.breakpoints();
    const auto& vals = scale.values();
    for (std::size_t k = 0; k < vals.size(); ++k) {
      const double a = std::max(lo, bp[k]);
      const double b = std::min(hi, bp[k + 1]);
      if (b <= a) continue;
      u = constant_propagator(coefficient_matrix(mode.lambda(), mode.mass() * vals[k]), b - a) * u;
      ++res.step_count;
    }
    if (tau_to < tau_from) u = u.adjoint().eval();
    res.max_unitarity_defect = unitarity_defect(u);
    res.u = Unitary2::project(u);
    return res;
  }

  const PropagationResult p = propagate(mode, scale, tau_from, tau_to, {}, {}, tol);
  res.u = Unitary2::project(p.state.u);
  res.step_count = p.steps;
  res.max_unitarity_defect = std::max(p.max_unitarity_defect, unitarity_defect(res.u.matrix()));
  return res;
}

// ---------------------------------------------------------------------------

namespace {

struct FrameGeometry {
  double f;
  double u;      // f + m R
  double norm;   // sqrt(2 f (f + m R))
  double sign;   // sign convention for the -f row
};

FrameGeometry frame_geometry(const Mode& mode, double r) {
  const double lambda = mode.lambda();
  const double mr = mode.mass() * r;
  const double f = std::hypot(lambda, mr);
  if (!(f > 0.0)) fail(ErrorKind::DegenerateFrame, "WKB frame is degenerate (lambda = 0 and R = 0)");
  const double u = f + mr;
  return {f, u, std::sqrt(u * u + lambda * lambda), lambda < 0.0 ? -1.0 : 1.0};
}

Matrix2 diagonalizer_matrix(const Mode& mode, double r) {
  const FrameGeometry g = frame_geometry(mode, r);
  const double lambda = mode.lambda();
  Matrix2 v;
  v << g.u / g.norm, -lambda / g.norm, g.sign * lambda / g.norm, g.sign * g.u / g.norm;
  return v;
}

}  // namespace

Matrix2 diagonalizer_at(const Mode& mode, double r) { return diagonalizer_matrix(mode, r); }

Unitary2 diagonalizer(const Mode& mode, const ScaleFunction& scale, double tau) {
  check_time(scale, tau, "tau");
  return Unitary2(diagonalizer_matrix(mode, scale(tau)));
}

Matrix2 diagonalizer_derivative(const Mode& mode, const ScaleFunction& scale, double tau) {
  check_time(scale, tau, "tau");
  const double r = scale(tau);
  const FrameGeometry g = frame_geometry(mode, r);
  const double lambda = mode.lambda();
  const double m = mode.mass();
  const double dr = scale.derivative(tau);
  const double df = m * m * r * dr / g.f;
  const double du = df + m * dr;
  const double dn = g.u * du / g.norm;
  // d/dtau (x / N) = x'/N - x N'/N^2
  auto d = [&](double x, double dx) { return dx / g.norm - x * dn / (g.norm * g.norm); };
  Matrix2 dv;
  dv << d(g.u, du), d(-lambda, 0.0), g.sign * d(lambda, 0.0), g.sign * d(g.u, du);
  return dv;
}

double wkb_phase(const Mode& mode, const ScaleFunction& scale, double tau_a, double tau_b, double tol) {
  validate_ode_tol(tol);
  if (tau_a == tau_b) return 0.0;
  Eigen::VectorXd y = Eigen::VectorXd::Zero(1);
  auto rhs = [&](double t, const Eigen::VectorXd&, Eigen::VectorXd& dy) { dy[0] = frequency(mode, scale, t); };
  DormandPrince<Eigen::VectorXd> stepper(tol);
  if (scale.is_smooth()) {
    stepper.integrate(rhs, y, tau_a, tau_b);
    return y[0];
  }
  // Exact for piecewise constant R.
  const double lo = std::min(tau_a, tau_b);
  const double hi = std::max(tau_a, tau_b);
  double total = 0.0;
  const auto& bp = scale.breakpoints();
  for (std::size_t k = 0; k < scale.values().size(); ++k) {
    const double a = std::max(lo, bp[k]);
    const double b = std::min(hi, bp[k + 1]);
    if (b > a) total += std::hypot(mode.lambda(), mode.mass() * scale.values()[k]) * (b - a);
  }
  return tau_b >= tau_a ? total : -total;
}

WkbFrame wkb_frame(const Mode& mode, const ScaleFunction& scale, double tau, double tol) {
  check_time(scale, tau, "tau");
  WkbFrame frame;
  frame.f = frequency(mode, scale, tau);
  frame.v = diagonalizer(mode, scale, tau);
  frame.phase = wkb_phase(mode, scale, mode.tau0(), tau, tol);
  return frame;
}

Matrix2 wkb_propagator(const Mode& mode, const ScaleFunction& scale, double tau, double phase) {
  return wkb_propagator(mode, scale(tau), scale(mode.tau0()), phase);
}

Matrix2 wkb_propagator(const Mode& mode, double r, double r0, double phase) {
  const Matrix2 v = diagonalizer_matrix(mode, r);
  const Matrix2 v0 = diagonalizer_matrix(mode, r0);
  Matrix2 d = Matrix2::Zero();
  d(0, 0) = std::exp(-kI * phase);
  d(1, 1) = std::exp(kI * phase);
  return v.adjoint() * d * v0;
}

Unitary2 wkb_evolve(const Mode& mode, const ScaleFunction& scale, double tau_from, double tau_to,
                    double tol) {
  check_time(scale, tau_from, "tau_from");
  check_time(scale, tau_to, "tau_to");
  const double phase = wkb_phase(mode, scale, tau_from, tau_to, tol);
  const Matrix2 v = diagonalizer(mode, scale, tau_to).matrix();
  const Matrix2 v_from = diagonalizer(mode, scale, tau_from).matrix();
  Matrix2 d = Matrix2::Zero();
  d(0, 0) = std::exp(-kI * phase);
  d(1, 1) = std::exp(kI * phase);
  return Unitary2::project(v.adjoint() * d * v_from);
}

WkbDeviation wkb_deviation(const Mode& mode, const ScaleFunction& scale, double tau, double tol) {
  check_time(scale, tau, "tau");
  check_time(scale, mode.tau0(), "tau0");
  const PropagationResult p = propagate(mode, scale, mode.tau0(), tau, {}, {}, tol);
  const Matrix2 uw = wkb_propagator(mode, scale, tau, p.state.phase);
  WkbDeviation dev;
  dev.w = Unitary2::project(uw.adjoint() * p.state.u);
  dev.distance = spectral_norm(Matrix2(dev.w.matrix() - Matrix2::Identity()));
  return dev;
}

Matrix2 deviation_generator(const Mode& mode, const ScaleFunction& scale, double tau, double phase) {
  const Matrix2 uw = wkb_propagator(mode, scale, tau, phase);
  const Matrix2 v = diagonalizer_matrix(mode, scale(tau));
  const Matrix2 dv = diagonalizer_derivative(mode, scale, tau);
  return uw.adjoint() * v.adjoint() * dv * uw;
}

Matrix2 deviation_generator_closed_form(const Mode& mode, const ScaleFunction& scale, double tau,
                                        double phase) {
  const double lambda = mode.lambda();
  const double m = mode.mass();
  const double f = frequency(mode, scale, tau);
  const double f0 = frequency(mode, scale, mode.tau0());
  const double r0 = scale(mode.tau0());
  const double phi = -2.0 * phase;
  const double pre = lambda * m * scale.derivative(tau) / (2.0 * f * f) / f0;
  const double s = std::sin(phi);
  const double c = std::cos(phi);
  Matrix2 x;
  x << -kI * lambda * s, f0 * c - kI * m * r0 * s, -f0 * c - kI * m * r0 * s, kI * lambda * s;
  return pre * x;
}

Unitary2 integrate_deviation(const Mode& mode, const ScaleFunction& scale, double tau, double tol) {
  validate_ode_tol(tol);
  check_time(scale, tau, "tau");
  const double tau0 = mode.tau0();
  Eigen::VectorXcd y(5);
  Eigen::Map<Matrix2>(y.data()) = Matrix2::Identity();
  y[4] = 0.0;
  auto rhs = [&](double t, const Eigen::VectorXcd& s, Eigen::VectorXcd& ds) {
    const Matrix2 x = deviation_generator(mode, scale, t, s[4].real());
    Eigen::Map<Matrix2>(ds.data()) = x * as_matrix(s);
    ds[4] = frequency(mode, scale, t);
  };
  auto ceiling = [&](double t) { return oscillation_ceiling(frequency(mode, scale, t)); };
  auto after = [](double, Eigen::VectorXcd& s) {
    Eigen::Map<Matrix2> w(s.data());
    w = polar_unitary(w);
    s[4] = s[4].real();
  };
  DormandPrince<Eigen::VectorXcd> stepper(tol);
  stepper.integrate(rhs, y, tau0, tau, ceiling, after);
  return Unitary2::project(as_matrix(y));
}

DeviationSup wkb_deviation_sup(const Mode& mode, const ScaleFunction& scale, double a, double b,
                               double tol) {
  if (!(b > a)) fail(ErrorKind::InvalidParameter, "deviation window must satisfy a < b");
  check_time(scale, a, "window start");
  check_time(scale, b, "window end");
  const double tau0 = mode.tau0();
  const double lambda_abs = std::abs(mode.lambda());
  DeviationSup sup;
  auto record = [&](double t, const PropagationState& st) {
    if (t < a || t > b) return;
    const Matrix2 w = wkb_propagator(mode, scale, t, st.phase).adjoint() * st.u;
    const double dist = spectral_norm(Matrix2(w - Matrix2::Identity()));
    if (dist > sup.sup) {
      sup.sup = dist;
      sup.tau_at = t;
    }
    if (lambda_abs > 0.0)
      sup.weighted_sup = std::max(sup.weighted_sup, dist * mode.mass() * scale(t) / lambda_abs);
  };

  if (tau0 >= a && tau0 <= b) {
    record(tau0, PropagationState{});
    propagate(mode, scale, tau0, a, {}, {}, tol, record);
    propagate(mode, scale, tau0, b, {}, {}, tol, record);
  } else {
    const double near = tau0 < a ? a : b;
    const double far = tau0 < a ? b : a;
    const PropagationResult p = propagate(mode, scale, tau0, near, {}, {}, tol);
    record(near, p.state);
    propagate(mode, scale, near, far, p.state, {}, tol, record);
  }
  return sup;
}

}  // namespace diracsea
