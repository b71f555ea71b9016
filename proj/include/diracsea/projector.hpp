#pragma once

#include <array>

#include "diracsea/core.hpp"
#include "diracsea/evolution.hpp"

namespace diracsea {

struct SignatureResult {
  Hermitian2 s;
  std::array<double, 2> eigenvalues{};  ///< ascending (mu_-, mu_+)
  Unitary2 eigvectors;                  ///< columns ordered like `eigenvalues`
  double quad_error_estimate = 0.0;
  /// int R dtau over the time domain; ||S|| never exceeds it and it sets the absolute floor
  /// of the degeneracy test.
  double integral_bound = 0.0;
  /// ||A - A^dagger|| / max(1, ||A||) of the raw quadrature result before symmetrization.
  double hermiticity_defect = 0.0;
  double delta = 0.0;  ///< endpoint cut used for smooth scales (0 for piecewise)
  long steps = 0;
};

/// Eigen-decomposition of a hermitian 2x2 matrix packaged as a SignatureResult.
SignatureResult analyze_signature(const Matrix2& s, double integral_bound, double quad_error = 0.0);

/// Endpoint cut delta such that int_0^delta R + int_{pi-delta}^pi R < quad_tol.
double endpoint_cut(const ScaleFunction& scale, double quad_tol);

/// S = int (U^{tau,tau0})^dagger sigma_3 U^{tau,tau0} R dtau.
SignatureResult signature_operator(const Mode& mode, const ScaleFunction& scale, const Tolerances& tol);

/// Same quadrature contract with U_WKB in place of U.
SignatureResult signature_operator_wkb(const Mode& mode, const ScaleFunction& scale, const Tolerances& tol);

/// The three scalar integrals entering the closed-form WKB eigenvalues, evaluated by panel
/// Gauss-Legendre quadrature with the phase recomputed at every node.
struct WkbIntegrals {
  double cos_term = 0.0;   ///< int cos(phi) R / f
  double sin_term = 0.0;   ///< int sin(phi) R / f
  double mass_term = 0.0;  ///< int R^2 / f
};

WkbIntegrals wkb_integrals(const Mode& mode, const ScaleFunction& scale);

/// mu_+- = +- sqrt((lambda I_cos)^2 + (lambda I_sin)^2 + (m I_mass)^2).
std::array<double, 2> wkb_eigenvalues_closed_form(const Mode& mode, const ScaleFunction& scale);

/// (int m R^2 / f) V(tau0)^{-1} sigma_3 V(tau0).
Hermitian2 wkb_signature_leading_term(const Mode& mode, const ScaleFunction& scale);

enum class Provenance { Exact, Wkb, WkbLeadingOrder };
const char* provenance_name(Provenance p);

struct ProjectorOutput {
  Spinor value = Spinor::Zero();
  Provenance provenance = Provenance::Exact;
};

/// k_m(phi) = (1/2 pi) int (U^{tau,tau0})^dagger sigma_3 phi(tau) R(tau) dtau.
ProjectorOutput k_m_apply(const Mode& mode, const ScaleFunction& scale, const TestFunction& phi, double tol);

/// The same with U_WKB.
ProjectorOutput k_wkb_apply(const Mode& mode, const ScaleFunction& scale, const TestFunction& phi, double tol);

/// Orthogonal projection onto the negative spectral subspace of S. Throws DegenerateSignature when
/// min |mu| < gap_tol * max(||S||, integral_bound).
Hermitian2 negative_projection(const SignatureResult& s, double gap_tol = 1e-6);

/// Orthogonal projection onto the positive spectral subspace, same degeneracy rule.
Hermitian2 positive_projection(const SignatureResult& s, double gap_tol = 1e-6);

/// P(phi) = -chi_(-inf,0)(S) k_m(phi).
ProjectorOutput fermionic_projector_apply(const Mode& mode, const ScaleFunction& scale,
                                          const TestFunction& phi, const Tolerances& tol);

/// Same, reusing a precomputed signature operator.
ProjectorOutput fermionic_projector_apply(const Mode& mode, const ScaleFunction& scale,
                                          const TestFunction& phi, const SignatureResult& s,
                                          const Tolerances& tol);

enum class WkbVariant { Full, LeadingOrder };

/// Full: -chi_(-inf,0)(S_WKB) k_WKB(phi). LeadingOrder: the pure negative-frequency integral
/// -(1/2 pi) int V(tau0)^{-1} diag(0, e^{i int_tau^tau0 f}) V(tau) sigma_3 phi R dtau.
ProjectorOutput p_wkb_apply(const Mode& mode, const ScaleFunction& scale, const TestFunction& phi,
                            const Tolerances& tol, WkbVariant variant);

}  // namespace diracsea
