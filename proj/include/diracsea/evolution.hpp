#pragma once

#include <functional>
#include <vector>

#include "diracsea/core.hpp"

namespace diracsea {

/// Numerical tolerances shared by every module.
struct Tolerances {
  double ode_tol = 1e-10;   ///< local error per unit tau of the adaptive stepper
  double quad_tol = 1e-10;  ///< absolute budget for endpoint tails and quadratures
  double gap_tol = 1e-6;    ///< relative spectral gap required by the negative projection
};

void validate_ode_tol(double tol);

/// H(tau) = m R(tau) sigma_3 - lambda sigma_1, so that i dU/dtau = H U.
Hermitian2 hamiltonian(const Mode& mode, const ScaleFunction& scale, double tau);

/// f(tau) = sqrt(lambda^2 + m^2 R(tau)^2).
double frequency(const Mode& mode, const ScaleFunction& scale, double tau);

/// Checks that tau lies in the time domain of the scale function: the open interval (0, pi) for
/// smooth profiles, the closed interval [0, T] for piecewise scenarios.
void check_time(const ScaleFunction& scale, double tau, const char* what);

struct EvolutionResult {
  Unitary2 u;
  double tau_from = 0.0;
  double tau_to = 0.0;
  long step_count = 0;
  double max_unitarity_defect = 0.0;
};

/// U^{tau_to, tau_from}. Smooth scales use the adaptive stepper with polar re-projection;
/// piecewise scales multiply exact per-segment exponentials.
EvolutionResult evolve(const Mode& mode, const ScaleFunction& scale, double tau_from, double tau_to,
                       double tol);

/// exp(-i H t) for constant H, via cos(f t) - i sin(f t) H / f.
Matrix2 constant_propagator(const Matrix2& h, double t);

// ---------------------------------------------------------------------------
// Co-integration of the evolution with accumulated integrals.

/// State carried along a propagation: U^{tau, tau0} and the WKB phase int_{tau0}^tau f.
struct PropagationState {
  Matrix2 u = Matrix2::Identity();
  double phase = 0.0;
  /// R in effect on the current piece; integrands should use it instead of re-evaluating the
  /// scale, which jumps at piecewise breakpoints.
  double r = 0.0;
};

/// Integrand of an accumulated quantity dA/dtau = g(tau, U, phase), A in C^dim.
struct Accumulator {
  int dim = 0;
  std::function<void(double, const PropagationState&, Eigen::Ref<Eigen::VectorXcd>)> integrand;
};

struct PropagationResult {
  PropagationState state;
  Eigen::VectorXcd accumulated;
  long steps = 0;
  double max_unitarity_defect = 0.0;
};

using PropagationObserver = std::function<void(double, const PropagationState&)>;

/// Propagates (U, phase) from `tau_a` to `tau_b`, integrating the accumulator on the way.
/// Piecewise scales are split at their breakpoints so the stepper never crosses a jump.
PropagationResult propagate(const Mode& mode, const ScaleFunction& scale, double tau_a, double tau_b,
                            const PropagationState& start, const Accumulator& acc, double tol,
                            const PropagationObserver& observer = {});

struct AccumulationResult {
  Eigen::VectorXcd value;
  long steps = 0;
  double max_unitarity_defect = 0.0;
};

/// int_a^b g(tau, U^{tau,tau0}, phase) dtau. The propagation always starts from U = 1 at tau0;
/// the accumulator is only switched on inside [a, b].
AccumulationResult accumulate(const Mode& mode, const ScaleFunction& scale, double a, double b,
                              const Accumulator& acc, double tol);

// ---------------------------------------------------------------------------
// WKB

struct WkbFrame {
  double f = 0.0;
  Unitary2 v;
  double phase = 0.0;  ///< int_{tau0}^{tau} f
};

/// V(tau): rows are the +f and -f eigenvectors of the coefficient matrix, real, with
/// non-negative first component.
Unitary2 diagonalizer(const Mode& mode, const ScaleFunction& scale, double tau);

/// V for a given value of R.
Matrix2 diagonalizer_at(const Mode& mode, double r);

/// dV/dtau (smooth scales only).
Matrix2 diagonalizer_derivative(const Mode& mode, const ScaleFunction& scale, double tau);

WkbFrame wkb_frame(const Mode& mode, const ScaleFunction& scale, double tau, double tol);

/// int_a^b f dtau by the adaptive stepper.
double wkb_phase(const Mode& mode, const ScaleFunction& scale, double tau_a, double tau_b, double tol);

/// U_WKB^{tau, tau0} for a given accumulated phase int_{tau0}^{tau} f.
Matrix2 wkb_propagator(const Mode& mode, const ScaleFunction& scale, double tau, double phase);

/// Same with R(tau) = r and R(tau0) = r0 given explicitly.
Matrix2 wkb_propagator(const Mode& mode, double r, double r0, double phase);

/// V(tau_to)^{-1} diag(e^{-i Phi}, e^{i Phi}) V(tau_from), Phi = int_{tau_from}^{tau_to} f.
Unitary2 wkb_evolve(const Mode& mode, const ScaleFunction& scale, double tau_from, double tau_to,
                    double tol);

/// W(tau) = (U_WKB^{tau,tau0})^dagger U^{tau,tau0}.
struct WkbDeviation {
  Unitary2 w;
  double distance = 0.0;  ///< ||W - 1||_2
};

WkbDeviation wkb_deviation(const Mode& mode, const ScaleFunction& scale, double tau, double tol);

/// X = U_WKB^dagger V^dagger (dV/dtau) U_WKB evaluated from the definition.
Matrix2 deviation_generator(const Mode& mode, const ScaleFunction& scale, double tau, double phase);

/// Closed form of X in terms of phi = -2 phase, f0 = f(tau0), R0 = R(tau0); equals
/// deviation_generator for lambda > 0.
Matrix2 deviation_generator_closed_form(const Mode& mode, const ScaleFunction& scale, double tau,
                                        double phase);

/// Independent route to W: integrates dW/dtau = X W from W(tau0) = 1.
Unitary2 integrate_deviation(const Mode& mode, const ScaleFunction& scale, double tau, double tol);

struct DeviationSup {
  double sup = 0.0;      ///< sup over accepted steps of ||W - 1||
  double tau_at = 0.0;
  double weighted_sup = 0.0;  ///< sup of ||W - 1|| m R(tau) / |lambda|
};

/// Supremum of ||W(tau) - 1|| over tau in [a, b] sampled at every accepted step.
DeviationSup wkb_deviation_sup(const Mode& mode, const ScaleFunction& scale, double a, double b,
                               double tol);

}  // namespace diracsea
